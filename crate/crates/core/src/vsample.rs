//! Point samples of the zero set `V = {f = 0}` obtained as gradient-flow endpoints.

use rayon::prelude::*;
use thiserror::Error;

use crate::flow::{flow, FlowError, FlowOptions, Terminal};
use crate::kdtree::KdTree;
use crate::nash::{NashBranch, NashError};
use crate::region::Region;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VSampleError {
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error("no flow from {starts} starts reached the zero set inside the region")]
    Empty { starts: usize },
}

#[derive(Debug, Clone)]
pub struct VSample {
    pub tree: KdTree,
    /// Median nearest-neighbour spacing (0 for a single point).
    pub spacing: f64,
    pub starts: usize,
}

impl VSample {
    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        self.tree.points()
    }

    /// Estimated distance from `x` to `V`.
    pub fn dist(&self, x: &[f64]) -> f64 {
        self.tree.nearest(x).map_or(f64::INFINITY, |(_, d)| d)
    }
}

/// Flows from `size` Halton starts in `region` and keeps the endpoints that
/// reached `V`, together with starts already on `V` and the region centre if
/// it lies on `V`.
pub fn build_v_sample(b: &NashBranch, region: &Region, size: usize, seed: u64) -> Result<VSample, VSampleError> {
    let starts = region.halton_points(size, seed);
    let newton = 1e-9 * region.outer_radius();
    let opts = FlowOptions {
        stop_tol: 0.0,
        stop_newton_dist: Some(newton),
        max_length: 4.0 * region.outer_radius(),
        record: false,
        ..Default::default()
    };
    let ends: Vec<Option<Vec<f64>>> = starts
        .par_iter()
        .map(|x| match flow(b, x, region, &opts) {
            Ok(t) if t.terminal == Terminal::ReachedZeroLevel => Some(t.end().to_vec()),
            Err(FlowError::StartOnV { .. }) => Some(x.clone()),
            _ => None,
        })
        .collect();
    let mut points: Vec<Vec<f64>> = ends.into_iter().flatten().collect();
    let c = region.center();
    if b.in_domain(&c) && b.eval(&c)? == 0.0 {
        points.push(c);
    }
    if points.is_empty() {
        return Err(VSampleError::Empty { starts: size });
    }
    let tree = KdTree::new(points);
    let spacing = tree.median_spacing().unwrap_or(0.0);
    Ok(VSample { tree, spacing, starts: size })
}
