//! Online convex optimization over a dual-norm ball: projected gradient descent
//! and exponentiated gradient over signed coordinates.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;

use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::{Norm, NormPair};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OcoKind {
    #[default]
    Ogd,
    Entropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcoState {
    kind: OcoKind,
    theta: DVector<f64>,
    radius: f64,
    norm: NormPair,
    /// OGD step scale: `η_t = scale / sqrt(t)`.
    scale: f64,
    /// Entropic: fixed learning rate and log-weights over the `(+e_j, −e_j)` corner pairs.
    rate: f64,
    log_weights: Vec<f64>,
    steps: u64,
}

impl OcoState {
    /// Projected gradient descent on the dual ball of radius `radius`, starting at zero,
    /// with `η_t = (radius / sqrt(d)) / sqrt(t)`.
    pub fn ogd(dim: usize, radius: f64, norm: NormPair) -> Result<Self> {
        let scale = radius / math::sqrt(dim as f64);
        Self::ogd_with_scale(dim, radius, norm, scale)
    }

    pub fn ogd_with_scale(dim: usize, radius: f64, norm: NormPair, scale: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self {
            kind: OcoKind::Ogd,
            theta: DVector::zeros(dim),
            radius,
            norm,
            scale,
            rate: 0.0,
            log_weights: Vec::new(),
            steps: 0,
        })
    }

    /// Exponentiated gradient on the L1 ball (primal norm L∞), tuned for `horizon` steps
    /// and gradients bounded by one in sup norm.
    ///
    /// The ball is the hull of `±radius·e_j`; weights sit on those `2d` corners, so uniform
    /// initial weights give `θ = 0`.
    pub fn entropic(dim: usize, radius: f64, norm: NormPair, horizon: usize) -> Result<Self> {
        check_radius(radius)?;
        if norm.primal != Norm::LInf {
            return Err(Error::Unsupported("exponentiated gradient needs the L∞/L1 norm pair".into()));
        }
        let corners = 2 * dim;
        let rate = if radius > 0.0 {
            math::sqrt(2.0 * math::ln(corners as f64) / horizon.max(1) as f64) / radius
        } else {
            0.0
        };
        Ok(Self {
            kind: OcoKind::Entropic,
            theta: DVector::zeros(dim),
            radius,
            norm,
            scale: 0.0,
            rate,
            log_weights: vec![0.0; corners],
            steps: 0,
        })
    }

    pub fn kind(&self) -> OcoKind {
        self.kind
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, grad: &DVector<f64>) -> Result<()> {
        match self.kind {
            OcoKind::Ogd => self.ogd_step(grad),
            OcoKind::Entropic => self.entropic_step(grad),
        }
    }

    /// `θ ← Proj(θ − η_t·grad)` onto the dual ball.
    pub fn ogd_step(&mut self, grad: &DVector<f64>) -> Result<()> {
        check_grad(&self.theta, grad)?;
        self.steps += 1;
        let eta = self.scale / math::sqrt(self.steps as f64);
        self.theta = self.norm.dual().project_ball(&(&self.theta - grad * eta), self.radius);
        Ok(())
    }

    pub fn entropic_step(&mut self, grad: &DVector<f64>) -> Result<()> {
        if self.kind != OcoKind::Entropic {
            return Err(Error::Unsupported("state was not built for exponentiated gradient".into()));
        }
        check_grad(&self.theta, grad)?;
        self.steps += 1;
        let d = self.theta.len();
        // Loss of corner ±radius·e_j is ±radius·g_j.
        for j in 0..d {
            self.log_weights[2 * j] -= self.rate * self.radius * grad[j];
            self.log_weights[2 * j + 1] += self.rate * self.radius * grad[j];
        }
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for w in &mut self.log_weights {
            *w -= top;
        }
        let weights: Vec<f64> = self.log_weights.iter().map(|w| math::exp(*w)).collect();
        let total: f64 = weights.iter().sum();
        self.theta = DVector::from_fn(d, |j, _| self.radius * (weights[2 * j] - weights[2 * j + 1]) / total);
        Ok(())
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius >= 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(invalid("dual ball radius must be finite and nonnegative"))
    }
}

fn check_grad(theta: &DVector<f64>, grad: &DVector<f64>) -> Result<()> {
    check_len(theta.len(), grad.len())?;
    if grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(invalid("gradient must be finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn zero_gradient_keeps_zero() {
        let mut s = OcoState::ogd(2, 1.0, NormPair::default()).unwrap();
        s.step(&dvector![0.0, 0.0]).unwrap();
        assert_eq!(s.theta(), &dvector![0.0, 0.0]);
        let mut e = OcoState::entropic(2, 1.0, NormPair::new(Norm::LInf), 100).unwrap();
        e.step(&dvector![0.0, 0.0]).unwrap();
        assert_eq!(e.theta(), &dvector![0.0, 0.0]);
    }

    #[test]
    fn radial_projection() {
        let mut s = OcoState::ogd_with_scale(2, 1.0, NormPair::default(), 1.0).unwrap();
        s.step(&dvector![2.0, 0.0]).unwrap();
        assert_eq!(s.theta(), &dvector![-1.0, 0.0]);
    }

    #[test]
    fn entropic_drifts_to_corner() {
        let mut e = OcoState::entropic(1, 2.0, NormPair::new(Norm::LInf), 100).unwrap();
        for _ in 0..2000 {
            e.step(&dvector![1.0]).unwrap();
        }
        assert!((e.theta()[0] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn entropic_needs_l1_ball() {
        assert!(OcoState::entropic(2, 1.0, NormPair::new(Norm::L2), 10).is_err());
        let mut s = OcoState::ogd(2, 1.0, NormPair::default()).unwrap();
        assert!(s.entropic_step(&dvector![1.0, 0.0]).is_err());
    }
}
