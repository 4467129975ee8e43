//! Norms, convex target sets and the smoothed distance.

mod nnls;
mod norm;
mod set;
mod smoothing;

pub use nnls::{least_distance, nnls};
pub use norm::{Norm, NormPair};
pub use set::{ConvexSet, SetShape};
pub use smoothing::{smoothed_distance, SmoothedDistance};
