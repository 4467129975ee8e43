//! Confidence hypercubes around the mean matrix and contextual ellipsoids.

mod ellipsoid;

pub use ellipsoid::{ellipsoid_min_linear, EllipsoidState};

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, invalid, Error, Result};
use crate::math;

/// Confidence radius `sqrt(γν/N) + γ/N`.
pub fn rad(nu: f64, count: u64, gamma: f64) -> Result<f64> {
    if count == 0 {
        return Err(invalid("confidence radius needs at least one sample"));
    }
    if !(nu >= 0.0) || !(gamma > 0.0) {
        return Err(invalid("confidence radius needs ν ≥ 0 and γ > 0"));
    }
    let n = count as f64;
    Ok(math::sqrt(gamma * nu / n) + gamma / n)
}

/// Default confidence parameter `ln(m·T·d/δ)`.
pub fn default_gamma(arms: usize, horizon: usize, dim: usize, delta: f64) -> f64 {
    math::ln(arms as f64 * horizon as f64 * dim as f64 / delta)
}

/// Per-entry intervals `[lcb, ucb]` for a `d × m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypercube {
    pub lcb: DMatrix<f64>,
    pub ucb: DMatrix<f64>,
}

impl Hypercube {
    pub fn new(lcb: DMatrix<f64>, ucb: DMatrix<f64>) -> Result<Self> {
        if lcb.shape() != ucb.shape() {
            return Err(Error::DimensionMismatch { expected: lcb.len(), found: ucb.len() });
        }
        let ok = lcb.iter().zip(ucb.iter()).all(|(l, u)| 0.0 <= *l && l <= u && *u <= 1.0);
        if !ok {
            return Err(invalid("hypercube bounds must satisfy 0 ≤ lcb ≤ ucb ≤ 1"));
        }
        Ok(Self { lcb, ucb })
    }

    /// The single matrix `means`, as a zero-width hypercube.
    pub fn degenerate(means: &DMatrix<f64>) -> Self {
        Self { lcb: means.clone(), ucb: means.clone() }
    }

    /// The vacuous hypercube `[0, 1]` in every entry.
    pub fn vacuous(dim: usize, arms: usize) -> Self {
        Self { lcb: DMatrix::zeros(dim, arms), ucb: DMatrix::from_element(dim, arms, 1.0) }
    }

    /// Enlarges every interval by `delta` on both sides, clipped to `[0, 1]`.
    pub fn widen(&self, delta: f64) -> Self {
        Self { lcb: self.lcb.map(|v| (v - delta).max(0.0)), ucb: self.ucb.map(|v| (v + delta).min(1.0)) }
    }

    pub fn dim(&self) -> usize {
        self.lcb.nrows()
    }

    pub fn arms(&self) -> usize {
        self.lcb.ncols()
    }

    pub fn contains(&self, matrix: &DMatrix<f64>) -> bool {
        matrix.shape() == self.lcb.shape()
            && matrix.iter().zip(self.lcb.iter().zip(self.ucb.iter())).all(|(v, (l, u))| l <= v && v <= u)
    }

    /// The matrix of the hypercube minimizing `θ·Ã_i` for every column `i` at once:
    /// row `j` comes from the upper bounds when `θ_j ≤ 0` and from the lower bounds otherwise.
    pub fn vertex(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let mut out = self.lcb.clone();
        for j in 0..self.dim() {
            if theta[j] <= 0.0 {
                out.set_row(j, &self.ucb.row(j));
            }
        }
        out
    }

    /// `θ·vertex(θ)_i` for every arm `i`.
    pub fn vertex_scores(&self, theta: &DVector<f64>) -> Vec<f64> {
        (0..self.arms())
            .map(|i| {
                (0..self.dim())
                    .map(|j| theta[j] * if theta[j] <= 0.0 { self.ucb[(j, i)] } else { self.lcb[(j, i)] })
                    .sum()
            })
            .collect()
    }
}

/// Play counts and observation sums; the source of the hypercube.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    counts: Vec<u64>,
    sums: DMatrix<f64>,
    gamma: f64,
    steps: usize,
}

impl ConfidenceState {
    pub fn new(dim: usize, arms: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(invalid("confidence parameter must be positive"));
        }
        Ok(Self { counts: vec![0; arms], sums: DMatrix::zeros(dim, arms), gamma, steps: 0 })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &DMatrix<f64> {
        &self.sums
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Records one step; `None` is an idle step that only advances time.
    pub fn record(&mut self, arm: Option<usize>, observation: &DVector<f64>) -> Result<()> {
        check_len(self.sums.nrows(), observation.len())?;
        if let Some(i) = arm {
            if i >= self.counts.len() {
                return Err(Error::ArmOutOfRange { arm: i, arms: self.counts.len() });
            }
            self.counts[i] += 1;
            let mut col = self.sums.column_mut(i);
            col += observation;
        }
        self.steps += 1;
        Ok(())
    }

    /// Empirical mean with the `k + 1` denominator, which shrinks unplayed arms toward zero.
    pub fn empirical_mean(&self, component: usize, arm: usize) -> f64 {
        self.sums[(component, arm)] / (self.counts[arm] + 1) as f64
    }

    pub fn hypercube(&self) -> Hypercube {
        let (d, m) = self.sums.shape();
        let mut lcb = DMatrix::zeros(d, m);
        let mut ucb = DMatrix::zeros(d, m);
        for i in 0..m {
            let n = self.counts[i] + 1;
            for j in 0..d {
                let mu = self.empirical_mean(j, i);
                // n ≥ 1 and γ > 0 by construction.
                let r = rad(mu, n, self.gamma).unwrap_or(f64::INFINITY);
                ucb[(j, i)] = (mu + 2.0 * r).min(1.0);
                lcb[(j, i)] = (mu - 2.0 * r).max(0.0);
            }
        }
        Hypercube { lcb, ucb }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn radius_examples() {
        assert!((rad(0.0, 10, 2.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(rad(1.0, 1, 1.0).unwrap(), 2.0);
        assert!((rad(0.25, 100, 4.0).unwrap() - 0.14).abs() < 1e-15);
        assert!(rad(0.5, 0, 1.0).is_err());
    }

    #[test]
    fn unplayed_arms_are_vacuous() {
        let cube = ConfidenceState::new(2, 3, 0.5).unwrap().hypercube();
        assert_eq!(cube.ucb, DMatrix::from_element(2, 3, 1.0));
        assert_eq!(cube.lcb, DMatrix::zeros(2, 3));
        let small = ConfidenceState::new(1, 1, 0.2).unwrap().hypercube();
        assert!((small.ucb[(0, 0)] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn plugged_bounds() {
        // 99 plays, sums chosen so that the (k+1)-mean is 0.5.
        let mut state = ConfidenceState::new(1, 1, 1.0).unwrap();
        for t in 0..99 {
            let v = if t < 50 { 1.0 } else { 0.0 };
            state.record(Some(0), &dvector![v]).unwrap();
        }
        assert_eq!(state.empirical_mean(0, 0), 0.5);
        let cube = state.hypercube();
        let expected = 2.0 * (libm::sqrt(0.5 / 100.0) + 0.01);
        assert!((cube.ucb[(0, 0)] - (0.5 + expected)).abs() < 1e-15);
        assert!((cube.lcb[(0, 0)] - (0.5 - expected)).abs() < 1e-15);
        assert!((cube.ucb[(0, 0)] - 0.66142).abs() < 1e-5);
    }

    #[test]
    fn vertex_rows() {
        let cube = Hypercube::new(dmatrix![0.1, 0.2; 0.3, 0.4], dmatrix![0.5, 0.6; 0.7, 0.8]).unwrap();
        assert_eq!(cube.vertex(&dvector![0.0, 0.0]), cube.ucb);
        assert_eq!(cube.vertex(&dvector![-1.0, 1.0]), dmatrix![0.5, 0.6; 0.3, 0.4]);
        let scores = cube.vertex_scores(&dvector![-1.0, 1.0]);
        assert_eq!(scores, vec![-0.5 + 0.3, -0.6 + 0.4]);
    }

    #[test]
    fn idle_steps_do_not_count() {
        let mut state = ConfidenceState::new(1, 2, 1.0).unwrap();
        state.record(None, &dvector![0.0]).unwrap();
        state.record(Some(1), &dvector![1.0]).unwrap();
        assert_eq!(state.counts(), &[0, 1]);
        assert_eq!(state.steps(), 2);
    }
}
