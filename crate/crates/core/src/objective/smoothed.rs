use alloc::vec::Vec;
use nalgebra::DVector;

use super::{Objective, ScalarTerm};
use crate::error::{invalid, Error, Result};
use crate::geometry::{smoothed_distance, Norm};
use crate::math;

/// `f̂_σ(z) = min_{‖θ‖₂ ≤ L} f*(θ) + σ/(2L)·‖θ‖² − θ·z`: concave, differentiable,
/// and within `σL/2` above `f`.
#[derive(Debug, Clone)]
pub struct SmoothedObjective {
    base: Objective,
    sigma: f64,
    radius: f64,
}

impl SmoothedObjective {
    pub fn new(base: Objective, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(invalid("smoothing parameter must be positive"));
        }
        if let Objective::NegDistance { norm, .. } = &base {
            if *norm != Norm::L2 {
                return Err(Error::Unsupported("smoothing is only available for the Euclidean norm".into()));
            }
        }
        let radius = base.lipschitz(Norm::L2);
        if !radius.is_finite() {
            return Err(Error::Unsupported("smoothing needs a finite Lipschitz constant".into()));
        }
        Ok(Self { base, sigma, radius })
    }

    pub fn base(&self) -> &Objective {
        &self.base
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Lipschitz constant `L` of the base objective, the radius of the dual ball.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Smoothness constant `d·L/σ` of the smoothed objective.
    pub fn smoothness(&self) -> f64 {
        self.base.dim() as f64 * self.radius / self.sigma
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        self.evaluate(z).0
    }

    pub fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        self.evaluate(z).1
    }

    /// Value and gradient; the gradient is `−θ*` for the minimizing dual point.
    pub fn evaluate(&self, z: &DVector<f64>) -> (f64, DVector<f64>) {
        if let Objective::NegDistance { set, .. } = &self.base {
            // The distance is 1-Lipschitz, so this is exactly the smoothed distance, negated.
            let s = smoothed_distance(z, set, self.sigma).expect("σ > 0 checked at construction");
            return (-s.value, -s.gradient);
        }
        let theta = self.dual_point(z);
        let value = self.base.fenchel(&theta) + self.penalty() * 0.5 * theta.norm_squared() - theta.dot(z);
        (value, -theta)
    }

    fn penalty(&self) -> f64 {
        if self.radius > 0.0 {
            self.sigma / self.radius
        } else {
            0.0
        }
    }

    /// Minimizer of the inner problem defining `f̂_σ(z)`.
    pub fn dual_point(&self, z: &DVector<f64>) -> DVector<f64> {
        if self.radius == 0.0 {
            return DVector::zeros(z.len());
        }
        match &self.base {
            Objective::Linear { coefficients } => {
                let terms: Vec<ScalarTerm> = coefficients.iter().map(|&w| ScalarTerm::Linear { weight: w }).collect();
                separable_dual(&terms, z, self.penalty(), self.radius)
            }
            Objective::Separable { terms } => separable_dual(terms, z, self.penalty(), self.radius),
            Objective::NegDistance { set, .. } => {
                let s = smoothed_distance(z, set, self.sigma).expect("σ > 0 checked at construction");
                s.gradient
            }
            Objective::Custom(_) => {
                let mu = self.penalty();
                let mut theta = DVector::zeros(z.len());
                for k in 0..500 {
                    let grad = self.base.fenchel_argmax(&theta) + &theta * mu - z;
                    let step = 1.0 / (mu * (k + 1) as f64);
                    theta = Norm::L2.project_ball(&(theta - grad * step), self.radius);
                }
                theta
            }
        }
    }
}

/// Exact minimizer of `Σ φ_j*(θ_j) + (κ/2)‖θ‖² − θ·z` over the Euclidean ball of `radius`.
///
/// Each coordinate solves the monotone equation `∇φ_j*(θ_j) + κ'θ_j = z_j`, where
/// `κ' ≥ κ` absorbs the ball multiplier, found by an outer bisection when the ball binds.
fn separable_dual(terms: &[ScalarTerm], z: &DVector<f64>, kappa: f64, radius: f64) -> DVector<f64> {
    let solve = |k: f64| {
        DVector::from_fn(terms.len(), |j, _| {
            let zj = z[j];
            math::bisect_increasing((zj - 1.0) / k, zj / k, |t| terms[j].conjugate_argmax(t) + k * t - zj)
        })
    };
    let free = solve(kappa);
    if math::norm2(&free) <= radius {
        return free;
    }
    let dim = terms.len() as f64;
    let top = math::sqrt(dim) / radius + 1.0;
    let mult = math::bisect_increasing(0.0, top, |mu| radius - math::norm2(&solve(kappa + mu)));
    Norm::L2.project_ball(&solve(kappa + mult), radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexSet;
    use alloc::vec;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn linear_gradient_is_coefficients() {
        let c = dvector![0.3, 0.4];
        let s = SmoothedObjective::new(Objective::linear(c.clone()), 0.1).unwrap();
        let z = dvector![0.5, 0.5];
        assert!((s.gradient(&z) - &c).norm() < 1e-12);
        let f = c.dot(&z);
        let v = s.value(&z);
        assert!(v >= f - 1e-12 && v <= f + 0.1 * 0.5 / 2.0 + 1e-12);
    }

    #[test]
    fn neg_distance_delegates() {
        let set = ConvexSet::halfspaces(dmatrix![1.0], dvector![0.5]).unwrap();
        let s = SmoothedObjective::new(Objective::neg_distance(set, Norm::L2), 0.1).unwrap();
        let (v, g) = s.evaluate(&dvector![0.8]);
        assert!((v + 0.25).abs() < 1e-12);
        assert!((g[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_for_quadratic() {
        let base = Objective::separable(vec![
            ScalarTerm::Quadratic { weight: 1.0, center: 0.3 },
            ScalarTerm::Log1p { weight: 2.0 },
        ])
        .unwrap();
        let sigma = 0.05;
        let s = SmoothedObjective::new(base.clone(), sigma).unwrap();
        let l = s.radius();
        for k in 0..50 {
            let z = dvector![(k as f64 * 0.37) % 1.0, (k as f64 * 0.61) % 1.0];
            let f = base.value(&z);
            let v = s.value(&z);
            assert!(v - sigma * l / 2.0 <= f + 1e-10 && f <= v + 1e-10, "z = {z}");
        }
    }

    #[test]
    fn rejects_infinite_lipschitz() {
        let base = Objective::separable(vec![ScalarTerm::Sqrt { weight: 1.0 }]).unwrap();
        assert!(SmoothedObjective::new(base, 0.1).is_err());
    }
}
