pub mod bounds;
pub mod elim;
pub mod empirical;
pub mod flow;
pub mod kdtree;
pub mod nash;
pub mod poly;
pub mod region;
pub mod report;
pub mod vsample;
