//! Concave objectives over `[0, 1]^d`: values, supergradients, constants and conjugates.

mod duality;
mod smoothed;
mod terms;

pub use duality::duality_gap_check;
pub use smoothed::SmoothedObjective;
pub use terms::ScalarTerm;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::geometry::{ConvexSet, Norm};
use crate::math;

pub type VectorFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A user-supplied concave function. Its constants are taken on trust.
#[derive(Clone)]
pub struct CustomObjective {
    pub dim: usize,
    pub value: VectorFn,
    pub gradient: GradientFn,
    pub lipschitz: f64,
    pub smoothness: Option<f64>,
}

impl fmt::Debug for CustomObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomObjective")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Objective {
    /// `c·x`.
    Linear { coefficients: DVector<f64> },
    /// `−dist(x, S)` under `norm`.
    NegDistance { set: ConvexSet, norm: Norm },
    /// `Σ_j φ_j(x_j)`.
    Separable { terms: Vec<ScalarTerm> },
    Custom(CustomObjective),
}

impl Objective {
    pub fn linear(coefficients: DVector<f64>) -> Self {
        Objective::Linear { coefficients }
    }

    pub fn neg_distance(set: ConvexSet, norm: Norm) -> Self {
        Objective::NegDistance { set, norm }
    }

    pub fn separable(terms: Vec<ScalarTerm>) -> Result<Self> {
        if terms.is_empty() || !terms.iter().all(ScalarTerm::is_concave) {
            return Err(invalid("separable objective needs concave terms"));
        }
        Ok(Objective::Separable { terms })
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Linear { coefficients } => coefficients.len(),
            Objective::NegDistance { set, .. } => set.dim(),
            Objective::Separable { terms } => terms.len(),
            Objective::Custom(c) => c.dim,
        }
    }

    /// Whether the constants come from the catalog rather than from the caller.
    pub fn is_certified(&self) -> bool {
        !matches!(self, Objective::Custom(_))
    }

    fn clip(&self, x: &DVector<f64>) -> DVector<f64> {
        if x.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
            log::warn!("objective evaluated outside the unit cube; clipping");
        }
        x.map(math::clamp01)
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let x = self.clip(x);
        match self {
            Objective::Linear { coefficients } => coefficients.dot(&x),
            Objective::NegDistance { set, norm } => -set.distance(&x, *norm),
            Objective::Separable { terms } => terms.iter().zip(x.iter()).map(|(t, &v)| t.value(v)).sum(),
            Objective::Custom(c) => (c.value)(&x),
        }
    }

    pub fn supergradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let x = self.clip(x);
        match self {
            Objective::Linear { coefficients } => coefficients.clone(),
            Objective::NegDistance { set, norm } => {
                let diff = &x - set.project(&x, *norm);
                if diff.iter().all(|v| *v == 0.0) {
                    return DVector::zeros(x.len());
                }
                -dual_direction(&diff, *norm)
            }
            Objective::Separable { terms } => {
                DVector::from_fn(x.len(), |j, _| terms[j].derivative(x[j]))
            }
            Objective::Custom(c) => (c.gradient)(&x),
        }
    }

    /// Lipschitz constant with respect to `norm` (infinite for `sqrt` terms).
    pub fn lipschitz(&self, norm: Norm) -> f64 {
        match self {
            Objective::Linear { coefficients } => norm.dual().of(coefficients),
            Objective::NegDistance { set, norm: own } => norm_ratio(*own, norm, set.dim()),
            Objective::Separable { terms } => {
                let slopes = DVector::from_iterator(terms.len(), terms.iter().map(ScalarTerm::max_slope));
                if slopes.iter().any(|s| s.is_infinite()) {
                    f64::INFINITY
                } else {
                    norm.dual().of(&slopes)
                }
            }
            Objective::Custom(c) => c.lipschitz,
        }
    }

    /// Smoothness constant `C`, or `None` for nonsmooth objectives.
    pub fn smoothness(&self) -> Option<f64> {
        match self {
            Objective::Linear { .. } => Some(0.0),
            Objective::NegDistance { .. } => None,
            Objective::Separable { terms } => terms.iter().map(ScalarTerm::curvature).sum(),
            Objective::Custom(c) => c.smoothness,
        }
    }

    /// `f*(θ) = max_{y ∈ [0,1]^d} y·θ + f(y)`.
    ///
    /// For `−dist(·, S)` this is the support function of `S`, which is exact on the dual unit ball.
    pub fn fenchel(&self, theta: &DVector<f64>) -> f64 {
        match self {
            Objective::Linear { coefficients } => {
                theta.iter().zip(coefficients.iter()).map(|(t, c)| (t + c).max(0.0)).sum()
            }
            Objective::NegDistance { set, .. } => set.support(theta),
            Objective::Separable { terms } => terms.iter().zip(theta.iter()).map(|(t, &th)| t.conjugate(th)).sum(),
            Objective::Custom(_) => {
                let y = self.fenchel_argmax(theta);
                y.dot(theta) + self.value(&y)
            }
        }
    }

    /// A maximizer in the definition of `f*`, i.e. a subgradient of the conjugate.
    pub fn fenchel_argmax(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            Objective::Linear { coefficients } => {
                DVector::from_fn(theta.len(), |j, _| if theta[j] + coefficients[j] > 0.0 { 1.0 } else { 0.0 })
            }
            Objective::NegDistance { set, .. } => set.support_point(theta),
            Objective::Separable { terms } => {
                DVector::from_fn(theta.len(), |j, _| terms[j].conjugate_argmax(theta[j]))
            }
            Objective::Custom(c) => {
                // Projected gradient ascent on y ↦ y·θ + f(y) over the cube.
                let mut y = DVector::from_element(c.dim, 0.5);
                for k in 0..500 {
                    let step = 1.0 / (k + 1) as f64;
                    let g = theta + (c.gradient)(&y);
                    y = (y + g * step).map(math::clamp01);
                }
                y
            }
        }
    }

    /// `max_{lo ≤ x ≤ hi} f(x)` and a maximizer.
    pub fn max_over_box(&self, lo: &DVector<f64>, hi: &DVector<f64>) -> (f64, DVector<f64>) {
        match self {
            Objective::Linear { coefficients } => {
                let x = DVector::from_fn(lo.len(), |j, _| if coefficients[j] > 0.0 { hi[j] } else { lo[j] });
                (self.value(&x), x)
            }
            Objective::Separable { terms } => {
                let x = DVector::from_fn(lo.len(), |j, _| terms[j].argmax_on(lo[j], hi[j]));
                (self.value(&x), x)
            }
            Objective::NegDistance { set, norm } => {
                let (gap, x) = set.closest_in_box(lo, hi, *norm);
                (-gap, x)
            }
            Objective::Custom(c) => {
                let mut x = (lo + hi) * 0.5;
                for k in 0..500 {
                    let step = 1.0 / (k + 1) as f64;
                    let g = (c.gradient)(&x);
                    x = DVector::from_fn(x.len(), |j, _| (x[j] + step * g[j]).clamp(lo[j], hi[j]));
                }
                (self.value(&x), x)
            }
        }
    }
}

/// A unit dual-norm vector `g` with `g·v = ‖v‖`.
fn dual_direction(v: &DVector<f64>, norm: Norm) -> DVector<f64> {
    match norm {
        Norm::L2 => v / math::norm2(v),
        Norm::L1 => v.map(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 }),
        Norm::LInf => {
            let k = math::argmax(v.iter().map(|x| math::abs(*x))).unwrap_or(0);
            DVector::from_fn(v.len(), |j, _| if j == k { v[k].signum() } else { 0.0 })
        }
    }
}

/// `max_x ‖x‖_own / ‖x‖_other` in `d` dimensions.
fn norm_ratio(own: Norm, other: Norm, d: usize) -> f64 {
    let rd = math::sqrt(d as f64);
    match (own, other) {
        (a, b) if a == b => 1.0,
        (Norm::LInf, _) => 1.0,
        (Norm::L2, Norm::L1) => 1.0,
        (Norm::L2, Norm::LInf) => rd,
        (Norm::L1, Norm::L2) => rd,
        (Norm::L1, Norm::LInf) => d as f64,
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::{dmatrix, dvector};

    fn sqrt2() -> Objective {
        Objective::separable(vec![ScalarTerm::Sqrt { weight: 1.0 }; 2]).unwrap()
    }

    #[test]
    fn linear_value_and_gradient() {
        let f = Objective::linear(dvector![1.0, 0.0]);
        assert_eq!(f.value(&dvector![0.4, 0.9]), 0.4);
        assert_eq!(f.supergradient(&dvector![0.4, 0.9]), dvector![1.0, 0.0]);
    }

    #[test]
    fn sqrt_value_and_gradient() {
        let f = sqrt2();
        assert_eq!(f.value(&dvector![0.25, 0.25]), 1.0);
        assert_eq!(f.supergradient(&dvector![0.25, 0.25]), dvector![1.0, 1.0]);
    }

    #[test]
    fn neg_distance_matches_geometry() {
        let s = ConvexSet::halfspaces(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        let f = Objective::neg_distance(s.clone(), Norm::L2);
        let x = dvector![0.9, 0.8];
        assert_eq!(f.value(&x), -s.distance(&x, Norm::L2));
        let g = f.supergradient(&x);
        let h = libm::sqrt(0.5);
        assert!((g - dvector![-h, -h]).norm() < 1e-9);
    }

    #[test]
    fn conjugate_examples() {
        let c = dvector![0.3, 0.7];
        let f = Objective::linear(c.clone());
        assert_eq!(f.fenchel(&-&c), 0.0);
        let box_set = ConvexSet::boxed(dvector![0.0], dvector![0.5]).unwrap();
        let g = Objective::neg_distance(box_set, Norm::L2);
        assert_eq!(g.fenchel(&dvector![1.0]), 0.5);
        let h = Objective::separable(vec![ScalarTerm::Sqrt { weight: 1.0 }]).unwrap();
        assert!((h.fenchel(&dvector![-0.5]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sqrt_conjugate_against_grid() {
        let term = ScalarTerm::Sqrt { weight: 1.0 };
        for theta in [-3.0, -1.2, -0.7, -0.5, -0.3, 0.0, 0.4] {
            let grid = (0..=10_000)
                .map(|k| {
                    let y = k as f64 * 1e-4;
                    y * theta + libm::sqrt(y)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((term.conjugate(theta) - grid).abs() < 1e-6, "θ = {theta}");
        }
    }

    #[test]
    fn constants() {
        let q = Objective::separable(vec![ScalarTerm::Quadratic { weight: 1.0, center: 0.5 }]).unwrap();
        assert_eq!(q.smoothness(), Some(2.0));
        assert_eq!(q.lipschitz(Norm::L2), 1.0);
        assert_eq!(sqrt2().lipschitz(Norm::L2), f64::INFINITY);
        assert_eq!(sqrt2().smoothness(), None);
        let lin = Objective::linear(dvector![3.0, -4.0]);
        assert_eq!(lin.lipschitz(Norm::L2), 5.0);
        assert_eq!(lin.lipschitz(Norm::LInf), 7.0);
        assert_eq!(lin.lipschitz(Norm::L1), 4.0);
    }

    #[test]
    fn box_maximizers() {
        let q = Objective::separable(vec![
            ScalarTerm::Quadratic { weight: 1.0, center: 0.5 },
            ScalarTerm::Log1p { weight: 1.0 },
        ])
        .unwrap();
        let (v, x) = q.max_over_box(&dvector![0.6, 0.1], &dvector![0.9, 0.3]);
        assert_eq!(x, dvector![0.6, 0.3]);
        assert!((v - (1.0 - 0.01 + libm::log(1.3))).abs() < 1e-12);
    }

    #[test]
    fn rejects_convex_terms() {
        assert!(Objective::separable(vec![ScalarTerm::Sqrt { weight: -1.0 }]).is_err());
    }
}
