use alloc::vec::Vec;
use nalgebra::DVector;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    #[default]
    L2,
    LInf,
    L1,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
            Norm::L1 => Norm::LInf,
        }
    }

    pub fn of(self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::L2 => math::norm2(v),
            Norm::LInf => math::norm_inf(v),
            Norm::L1 => math::norm1(v),
        }
    }

    /// Norm of the all-ones vector in `d` dimensions.
    pub fn ones(self, d: usize) -> f64 {
        match self {
            Norm::L2 => math::sqrt(d as f64),
            Norm::LInf => 1.0,
            Norm::L1 => d as f64,
        }
    }

    /// Euclidean projection onto the ball `{v : ‖v‖ ≤ radius}` of this norm.
    pub fn project_ball(self, v: &DVector<f64>, radius: f64) -> DVector<f64> {
        let n = self.of(v);
        if n <= radius {
            return v.clone();
        }
        match self {
            Norm::L2 => v * (radius / n),
            Norm::LInf => v.map(|x| x.clamp(-radius, radius)),
            Norm::L1 => {
                // Sort-based projection onto the L1 ball.
                let mut mags: Vec<f64> = v.iter().map(|x| math::abs(*x)).collect();
                mags.sort_by(|a, b| b.total_cmp(a));
                let mut cum = 0.0;
                let mut tau = 0.0;
                for (k, &u) in mags.iter().enumerate() {
                    cum += u;
                    let candidate = (cum - radius) / (k + 1) as f64;
                    if u > candidate {
                        tau = candidate;
                    }
                }
                v.map(|x| x.signum() * (math::abs(x) - tau).max(0.0))
            }
        }
    }
}

/// A primal norm together with its dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NormPair {
    pub primal: Norm,
}

impl NormPair {
    pub fn new(primal: Norm) -> Self {
        Self { primal }
    }

    pub fn dual(self) -> Norm {
        self.primal.dual()
    }

    pub fn ones_norm(self, d: usize) -> f64 {
        self.primal.ones(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn duals_and_ones() {
        assert_eq!(Norm::L2.dual(), Norm::L2);
        assert_eq!(Norm::LInf.dual(), Norm::L1);
        assert_eq!(Norm::L1.dual(), Norm::LInf);
        assert_eq!(NormPair::new(Norm::L2).ones_norm(4), 2.0);
        assert_eq!(NormPair::new(Norm::LInf).ones_norm(4), 1.0);
        assert_eq!(NormPair::new(Norm::L1).ones_norm(4), 4.0);
    }

    #[test]
    fn l1_ball_projection() {
        let p = Norm::L1.project_ball(&dvector![2.0, -1.0, 0.0], 1.0);
        assert!((p - dvector![1.0, 0.0, 0.0]).norm() < 1e-12);
        let p = Norm::L1.project_ball(&dvector![0.8, -0.8], 1.0);
        assert!((p - dvector![0.5, -0.5]).norm() < 1e-12);
    }

    #[test]
    fn l2_ball_is_radial() {
        let p = Norm::L2.project_ball(&dvector![3.0, 4.0], 1.0);
        assert!((p - dvector![0.6, 0.8]).norm() < 1e-12);
    }
}
