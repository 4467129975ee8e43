use nalgebra::DVector;

use super::Objective;
use crate::geometry::Norm;
use crate::math;

/// `|f(z) − min_{‖θ‖_* ≤ L} (f*(θ) − θ·z)|`, with the minimum found by projected
/// subgradient descent started at the negated supergradient. Zero up to solver accuracy
/// when the conjugate is implemented correctly.
pub fn duality_gap_check(f: &Objective, z: &DVector<f64>, norm: Norm) -> f64 {
    let radius = f.lipschitz(norm);
    let dual = norm.dual();
    let project = |t: DVector<f64>| if radius.is_finite() { dual.project_ball(&t, radius) } else { t };
    let eval = |t: &DVector<f64>| f.fenchel(t) - t.dot(z);
    let scale = if radius.is_finite() { radius / math::sqrt(z.len() as f64) } else { 1.0 };
    let mut theta = project(-f.supergradient(z));
    let mut best = eval(&theta);
    for k in 0..500 {
        let grad = f.fenchel_argmax(&theta) - z;
        let step = scale / math::sqrt((k + 1) as f64);
        theta = project(theta - grad * step);
        best = best.min(eval(&theta));
    }
    math::abs(f.value(z) - best)
}
