use nalgebra::DVector;

use super::norm::Norm;
use super::set::ConvexSet;
use crate::error::{invalid, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDistance {
    pub value: f64,
    pub gradient: DVector<f64>,
}

/// Euclidean distance to `set`, smoothed by a quadratic dual penalty of weight `sigma`.
///
/// With `r = ‖z − π_S(z)‖` the value is `r − σ/2` when `r ≥ σ` and `r²/(2σ)` otherwise;
/// the gradient is `(z − π)/max(r, σ)`, and zero inside the set.
pub fn smoothed_distance(z: &DVector<f64>, set: &ConvexSet, sigma: f64) -> Result<SmoothedDistance> {
    if !(sigma > 0.0) {
        return Err(invalid("smoothing parameter must be positive"));
    }
    let proj = set.project(z, Norm::L2);
    let diff = z - proj;
    let r = math::norm2(&diff);
    Ok(if r == 0.0 {
        SmoothedDistance { value: 0.0, gradient: DVector::zeros(z.len()) }
    } else if r >= sigma {
        SmoothedDistance { value: r - 0.5 * sigma, gradient: diff / r }
    } else {
        SmoothedDistance { value: r * r / (2.0 * sigma), gradient: diff / sigma }
    })
}
