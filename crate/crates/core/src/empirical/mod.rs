//! Numerical estimates of the gradient and distance exponents.

mod distance;
mod fit;
mod profile;
mod verify;

pub use distance::{fit_distance_exponent, fit_distance_exponent_with, DistanceFit, DistanceOptions, Stratum};
pub use fit::{fit_exponent, ExponentFit, FitMethod, SignFit};
pub use profile::{sample_levels, sample_profile, CriticalProfile, ProfileLevel, ProfileOptions};
pub use verify::{verify_inequality, InequalityCheck, Violation};

use thiserror::Error;

use crate::flow::FlowError;
use crate::nash::NashError;
use crate::region::RegionError;
use crate::vsample::VSampleError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmpiricalError {
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    VSample(#[from] VSampleError),
    #[error("sampling ball (centre {center:?}, radius {radius}) is not inside the branch domain")]
    OutsideDomain { center: Vec<f64>, radius: f64 },
    #[error("no level in (-{epsilon}, {epsilon}) is attained in the region")]
    NoLevels { epsilon: f64 },
    #[error("fewer than 4 converged levels ({converged}) for a sign with samples")]
    TooFewLevels { converged: usize },
    #[error("fitted exponent is negative ({}): the gradient does not vanish on the profile", .0.rho_hat)]
    NegativeSlope(Box<ExponentFit>),
    #[error("the zero-set sample is too sparse: spacing {spacing} leaves {strata} usable distance strata (need 4)")]
    TooSparse { spacing: f64, strata: usize },
    #[error("invalid option: {0}")]
    Invalid(String),
}
