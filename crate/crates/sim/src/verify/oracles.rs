//! Brute-force references that share no code with the solvers they check.

use bwcr_core::confidence::EllipsoidState;
use bwcr_core::solvers::LpProblem;
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const FEAS_TOL: f64 = 1e-9;

/// Optimal value of the knapsack LP by enumerating basic solutions; `None` when infeasible.
///
/// The feasible region `{p ≥ 0, Σp = 1, C p ≤ cap}` is a bounded polytope, so when it is
/// nonempty its maximum is attained at a vertex: a point where `Σp = 1` and `m − 1`
/// linearly independent inequalities are tight.
pub fn lp_value_by_vertices(problem: &LpProblem) -> Option<f64> {
    let m = problem.rewards.len();
    let cap = (1.0 - problem.eps) * problem.budget_ratio;
    // Inequalities a·p ≤ b: first −p_i ≤ 0, then the resource rows.
    let mut rows: Vec<(DVector<f64>, f64)> = (0..m)
        .map(|i| {
            let mut a = DVector::zeros(m);
            a[i] = -1.0;
            (a, 0.0)
        })
        .collect();
    rows.extend(problem.consumption.row_iter().map(|r| (r.transpose().into_owned(), cap)));

    let mut best: Option<f64> = None;
    for active in (0..rows.len()).combinations(m - 1) {
        let mut a = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        a.row_mut(0).fill(1.0);
        b[0] = 1.0;
        for (k, &idx) in active.iter().enumerate() {
            a.row_mut(k + 1).copy_from(&rows[idx].0.transpose());
            b[k + 1] = rows[idx].1;
        }
        let lu = a.lu();
        if lu.determinant().abs() < 1e-12 {
            continue;
        }
        let Some(p) = lu.solve(&b) else { continue };
        if rows.iter().all(|(row, rhs)| row.dot(&p) <= rhs + FEAS_TOL) {
            let value = problem.rewards.dot(&p);
            best = Some(best.map_or(value, |v: f64| v.max(value)));
        }
    }
    best
}

/// Minimum of `c·w` over the ellipsoid of `component`, estimated from `samples` uniform
/// draws in its bounding box. Draws outside the ellipsoid are rejected; accepted ones are
/// pushed radially onto its boundary, where a linear form attains its minimum. Interior
/// points alone would leave an error of order `radius / sqrt(samples)` on wide ellipsoids.
pub fn ellipsoid_min_by_rejection<R: Rng + ?Sized>(
    state: &EllipsoidState,
    component: usize,
    c: &DVector<f64>,
    samples: usize,
    rng: &mut R,
) -> Option<f64> {
    let center = state.center(component);
    let gram = state.gram(component);
    let inv = state.gram_inverse(component);
    let r = state.radius_sq().sqrt();
    let half: Vec<f64> = (0..center.len()).map(|k| r * inv[(k, k)].max(0.0).sqrt()).collect();
    let mut best: Option<f64> = None;
    let mut w = center.clone();
    for _ in 0..samples {
        for k in 0..w.len() {
            w[k] = center[k] + half[k] * rng.random_range(-1.0..=1.0);
        }
        if state.contains(component, &w) {
            let diff = &w - center;
            let q = diff.dot(&(gram * &diff));
            if q <= 0.0 {
                continue;
            }
            let value = c.dot(&(center + diff * (state.radius_sq() / q).sqrt()));
            best = Some(best.map_or(value, |b: f64| b.min(value)));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn vertices_of_a_two_arm_problem() {
        // Arm 0 pays 1 but uses the whole budget; at most 0.3 / 0.5 = 0.6 of it fits.
        let problem = LpProblem {
            rewards: dvector![1.0, 0.2],
            consumption: dmatrix![1.0, 0.0],
            budget_ratio: 0.6,
            eps: 0.5,
        };
        let v = lp_value_by_vertices(&problem).unwrap();
        assert!((v - (0.3 + 0.7 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn sampled_minimum_of_a_trained_ellipsoid() {
        // B = diag(5, 1) after four plays along e_1 with v = 1: ŵ = (0.8, 0), radius² = 2.
        let mut state = EllipsoidState::new(2, 1);
        for _ in 0..4 {
            state.record(&[dvector![1.0, 0.0]], &dvector![1.0]).unwrap();
        }
        let c = dvector![0.6, -0.8];
        let exact = 0.48 - 2f64.sqrt() * (0.36 / 5.0 + 0.64f64).sqrt();
        let mut rng = bwcr_core::rng::substream(1, bwcr_core::rng::Stream::Auxiliary);
        let sampled = ellipsoid_min_by_rejection(&state, 0, &c, 20_000, &mut rng).unwrap();
        assert!(sampled >= exact - 1e-12);
        assert!(sampled - exact < 1e-3, "{sampled} vs {exact}");
    }

    #[test]
    fn infeasible_when_every_arm_overspends() {
        let problem = LpProblem {
            rewards: dvector![1.0, 0.2],
            consumption: dmatrix![0.8, 0.9],
            budget_ratio: 0.5,
            eps: 0.0,
        };
        assert_eq!(lp_value_by_vertices(&problem), None);
    }
}
