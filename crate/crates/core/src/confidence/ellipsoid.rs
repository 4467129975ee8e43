use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::Hypercube;
use crate::error::{check_len, invalid, Result};
use crate::math;

const RECOMPUTE_EVERY: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
struct Component {
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    target: DVector<f64>,
    center: DVector<f64>,
}

/// Confidence ellipsoids `{w : (w − ŵ_j)ᵀ B_j (w − ŵ_j) ≤ radius²}`, one per component,
/// with `B_j = I + Σ x xᵀ` over the contexts of the played arms.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidState {
    components: Vec<Component>,
    radius_sq: f64,
    updates: u64,
}

impl EllipsoidState {
    /// Radius² defaults to the context dimension.
    pub fn new(context_dim: usize, components: usize) -> Self {
        Self::with_radius_sq(context_dim, components, context_dim as f64)
    }

    pub fn with_radius_sq(context_dim: usize, components: usize, radius_sq: f64) -> Self {
        let n = context_dim;
        let fresh = Component {
            gram: DMatrix::identity(n, n),
            gram_inv: DMatrix::identity(n, n),
            target: DVector::zeros(n),
            center: DVector::zeros(n),
        };
        Self { components: (0..components).map(|_| fresh.clone()).collect(), radius_sq, updates: 0 }
    }

    pub fn context_dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.center.len())
    }

    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }

    pub fn center(&self, component: usize) -> &DVector<f64> {
        &self.components[component].center
    }

    pub fn gram(&self, component: usize) -> &DMatrix<f64> {
        &self.components[component].gram
    }

    pub fn gram_inverse(&self, component: usize) -> &DMatrix<f64> {
        &self.components[component].gram_inv
    }

    /// Adds one observation: `contexts[j]` is the context of the played arm for component `j`.
    pub fn record(&mut self, contexts: &[DVector<f64>], observation: &DVector<f64>) -> Result<()> {
        check_len(self.components.len(), contexts.len())?;
        check_len(self.components.len(), observation.len())?;
        self.updates += 1;
        let refresh = self.updates.is_multiple_of(RECOMPUTE_EVERY);
        for (comp, (x, &v)) in self.components.iter_mut().zip(contexts.iter().zip(observation.iter())) {
            check_len(comp.center.len(), x.len())?;
            comp.gram += x * x.transpose();
            comp.target += x * v;
            if refresh {
                // Rank-one updates drift slowly; start over from the Gram matrix now and then.
                if let Some(inv) = comp.gram.clone().cholesky().map(|c| c.inverse()) {
                    comp.gram_inv = inv;
                }
            } else {
                let bx = &comp.gram_inv * x;
                let denom = 1.0 + x.dot(&bx);
                comp.gram_inv -= &bx * bx.transpose() / denom;
            }
            comp.center = &comp.gram_inv * &comp.target;
        }
        Ok(())
    }

    pub fn contains(&self, component: usize, w: &DVector<f64>) -> bool {
        let comp = &self.components[component];
        let diff = w - &comp.center;
        diff.dot(&(&comp.gram * &diff)) <= self.radius_sq
    }

    fn spread<S>(&self, component: usize, c: &nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S>) -> f64
    where
        S: nalgebra::storage::Storage<f64, nalgebra::Dyn, nalgebra::U1>,
    {
        let comp = &self.components[component];
        math::sqrt(self.radius_sq) * math::sqrt(c.dot(&(&comp.gram_inv * c)).max(0.0))
    }

    pub fn max_linear(&self, component: usize, c: &DVector<f64>) -> Result<f64> {
        check_finite(c)?;
        Ok(c.dot(&self.components[component].center) + self.spread(component, c))
    }

    /// Per-entry relaxation of the ellipsoids into a hypercube over the mean matrix.
    /// `contexts[j]` is the `n × m` context matrix of component `j`.
    pub fn hypercube(&self, contexts: &[DMatrix<f64>]) -> Hypercube {
        let d = self.components.len();
        let m = contexts.first().map_or(0, |c| c.ncols());
        let mut lcb = DMatrix::zeros(d, m);
        let mut ucb = DMatrix::zeros(d, m);
        for j in 0..d {
            for i in 0..m {
                let x = contexts[j].column(i);
                let mid = x.dot(&self.components[j].center);
                let half = self.spread(j, &x);
                lcb[(j, i)] = math::clamp01(mid - half);
                ucb[(j, i)] = math::clamp01(mid + half);
            }
        }
        Hypercube { lcb, ucb }
    }
}

fn check_finite(c: &DVector<f64>) -> Result<()> {
    if c.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid("linear form must be finite"))
    }
}

/// Exact minimum of `c·w` over the ellipsoid of `component`.
pub fn ellipsoid_min_linear(state: &EllipsoidState, component: usize, c: &DVector<f64>) -> Result<f64> {
    check_finite(c)?;
    check_len(state.context_dim(), c.len())?;
    Ok(c.dot(state.center(component)) - state.spread(component, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::dvector;

    #[test]
    fn unit_ball() {
        let es = EllipsoidState::new(1, 1);
        assert_eq!(ellipsoid_min_linear(&es, 0, &dvector![1.0]).unwrap(), -1.0);
    }

    #[test]
    fn trained_one_dimensional() {
        // Three plays with x = 1 and v = 8/3 give B = 4 and ŵ = 8/4 = 2.
        let mut es = EllipsoidState::new(1, 1);
        for _ in 0..3 {
            es.record(&[dvector![1.0]], &dvector![8.0 / 3.0]).unwrap();
        }
        assert!((es.center(0)[0] - 2.0).abs() < 1e-12);
        assert!((ellipsoid_min_linear(&es, 0, &dvector![1.0]).unwrap() - 1.5).abs() < 1e-12);
        assert!((es.max_linear(0, &dvector![1.0]).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let es = EllipsoidState::new(2, 1);
        assert!(ellipsoid_min_linear(&es, 0, &dvector![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn sherman_morrison_tracks_inverse() {
        let mut es = EllipsoidState::new(2, 1);
        let xs = [dvector![0.3, 0.9], dvector![1.0, 0.2], dvector![0.5, 0.5]];
        for (k, x) in xs.iter().cycle().take(50).enumerate() {
            es.record(std::slice::from_ref(x), &dvector![(k % 2) as f64]).unwrap();
        }
        let exact = es.gram(0).clone().try_inverse().unwrap();
        assert!((exact - es.gram_inverse(0)).abs().max() < 1e-12);
    }
}
