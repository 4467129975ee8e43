//! The optimistic program solved by the UCB algorithm at every step:
//! maximize `f(x)` over policies `p`, with `x` and a point `z ∈ S` both achievable as
//! `Ã p` for some `Ã` in the confidence hypercube.
//!
//! Because the hypercube is a product of intervals and `p ≥ 0`, the achievable set
//! `{Ã p : Ã ∈ H}` is exactly the box `[L p, U p]`. The program is therefore a convex
//! problem over a polytope in `(p, x, z)`: a single LP when `f` is linear and an
//! outer approximation by tangent cuts otherwise.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;

use crate::confidence::Hypercube;
use crate::error::{check_len, Error, Result};
use crate::geometry::{ConvexSet, Norm, SetShape};
use crate::math;
use crate::model::PolicyDistribution;
use crate::objective::Objective;
use crate::solvers::lp::{LinearProgram, LpStatus, Relation};

#[derive(Debug, Clone, PartialEq)]
pub struct UcbStepOptions {
    /// Allowed Euclidean gap between the achievable box and the set.
    pub tol_feas: f64,
    /// Cutting-plane iteration cap for nonlinear objectives.
    pub max_iters: usize,
    /// Relative gap between the cut upper bound and the true value at which iteration stops.
    pub gap_tol: f64,
}

impl Default for UcbStepOptions {
    fn default() -> Self {
        Self { tol_feas: 1e-6, max_iters: 200, gap_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UcbStep {
    Feasible {
        policy: PolicyDistribution,
        /// Optimistic estimate `x = Ã p` achieving the objective value.
        estimate: DVector<f64>,
        /// `f(x)`, absent when there is no objective.
        value: Option<f64>,
    },
    Infeasible,
}

pub fn solve_ucb_step(cube: &Hypercube, objective: Option<&Objective>, set: Option<&ConvexSet>) -> Result<UcbStep> {
    solve_ucb_step_with(cube, objective, set, &UcbStepOptions::default())
}

pub fn solve_ucb_step_with(
    cube: &Hypercube,
    objective: Option<&Objective>,
    set: Option<&ConvexSet>,
    options: &UcbStepOptions,
) -> Result<UcbStep> {
    let (d, m) = (cube.dim(), cube.arms());
    if let Some(f) = objective {
        check_len(d, f.dim())?;
    }
    if let Some(s) = set {
        check_len(d, s.dim())?;
    }
    let skeleton = skeleton(cube, set, options.tol_feas);
    let solve_direction = |g: &DVector<f64>| -> Result<Option<DVector<f64>>> {
        let mut lp = skeleton.clone();
        let mut cost = vec![0.0; lp.vars()];
        for (i, score) in cube.vertex_scores(&-g).into_iter().enumerate() {
            cost[i] = -score;
        }
        lp.maximize(cost);
        match lp.solve() {
            LpStatus::Optimal { x, .. } => Ok(Some(DVector::from_column_slice(&x[..m]))),
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::Unbounded),
        }
    };
    let clean = |p: DVector<f64>| PolicyDistribution::from_raw(p, false);

    let Some(f) = objective else {
        return Ok(match solve_direction(&DVector::zeros(d))? {
            Some(p) => {
                let policy = clean(p)?;
                let estimate = (&cube.lcb * policy.weights() + &cube.ucb * policy.weights()) * 0.5;
                UcbStep::Feasible { policy, estimate, value: None }
            }
            None => UcbStep::Infeasible,
        });
    };

    if let Objective::Linear { coefficients } = f {
        return Ok(match solve_direction(coefficients)? {
            Some(p) => {
                let policy = clean(p)?;
                let estimate = cube.vertex(&-coefficients) * policy.weights();
                let value = Some(f.value(&estimate));
                UcbStep::Feasible { policy, estimate, value }
            }
            None => UcbStep::Infeasible,
        });
    }

    let mut pool = CutPool::default();
    solve_with_cuts(cube, f, &skeleton, options, &mut pool)
}

/// Like [`solve_ucb_step_with`], but keeps the tangent cuts of a nonlinear objective in
/// `pool` so that a sequence of slowly changing programs warm-starts.
pub fn solve_ucb_step_pooled(
    cube: &Hypercube,
    objective: &Objective,
    set: Option<&ConvexSet>,
    options: &UcbStepOptions,
    pool: &mut CutPool,
) -> Result<UcbStep> {
    if let Objective::Linear { .. } = objective {
        return solve_ucb_step_with(cube, Some(objective), set, options);
    }
    check_len(cube.dim(), objective.dim())?;
    if let Some(s) = set {
        check_len(cube.dim(), s.dim())?;
    }
    let skeleton = skeleton(cube, set, options.tol_feas);
    solve_with_cuts(cube, objective, &skeleton, options, pool)
}

/// Points closer to zero than this are moved up before a tangent is taken, keeping
/// slopes of terms with an unbounded derivative at zero finite.
const CUT_FLOOR: f64 = 1e-8;
/// Cuts kept per group; the least recently active one is dropped beyond this.
const MAX_CUTS_PER_GROUP: usize = 8;

/// Tangent planes `t_k ≤ c + a·x` of a concave objective, one group per separable term
/// (a single group otherwise). Valid for every program with the same objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CutPool {
    groups: usize,
    dim: usize,
    cuts: Vec<Cut>,
    clock: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct Cut {
    group: usize,
    slope: DVector<f64>,
    constant: f64,
    last_active: u64,
}

impl CutPool {
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    fn reset_for(&mut self, groups: usize, dim: usize) {
        if self.groups != groups || self.dim != dim {
            *self = Self { groups, dim, ..Self::default() };
        }
    }

    /// Adds the tangent of group `group` at `x`.
    fn add(&mut self, f: &Objective, group: usize, x: &DVector<f64>) {
        let d = x.len();
        let (slope, constant) = match f {
            Objective::Separable { terms } => {
                let a = x[group].max(CUT_FLOOR);
                let term = &terms[group];
                let slope_j = term.derivative(a);
                (DVector::from_fn(d, |j, _| if j == group { slope_j } else { 0.0 }), term.value(a) - slope_j * a)
            }
            _ => {
                let g = f.supergradient(x);
                let c = f.value(x) - g.dot(x);
                (g, c)
            }
        };
        if self.cuts.iter().any(|c| c.group == group && c.constant == constant && c.slope == slope) {
            return;
        }
        if self.cuts.iter().filter(|c| c.group == group).count() >= MAX_CUTS_PER_GROUP {
            let oldest = self
                .cuts
                .iter()
                .enumerate()
                .filter(|(_, c)| c.group == group)
                .min_by_key(|(_, c)| c.last_active)
                .map(|(i, _)| i);
            if let Some(i) = oldest {
                self.cuts.swap_remove(i);
            }
        }
        self.cuts.push(Cut { group, slope, constant, last_active: self.clock });
    }
}

/// Per-group values of the objective at `x`, matching the cut groups.
fn group_values(f: &Objective, x: &DVector<f64>) -> Vec<f64> {
    match f {
        Objective::Separable { terms } => terms.iter().enumerate().map(|(j, t)| t.value(x[j])).collect(),
        _ => vec![f.value(x)],
    }
}

/// Outer approximation: maximize `Σ t_k` over the step polytope subject to the pooled
/// tangent cuts, adding a cut wherever the approximation overshoots, until the upper
/// bound from the cuts meets the true value.
fn solve_with_cuts(
    cube: &Hypercube,
    f: &Objective,
    skeleton: &LinearProgram,
    options: &UcbStepOptions,
    pool: &mut CutPool,
) -> Result<UcbStep> {
    let (d, m) = (cube.dim(), cube.arms());
    let groups = match f {
        Objective::Separable { terms } => terms.len(),
        _ => 1,
    };
    pool.reset_for(groups, d);
    let base = skeleton.vars();
    // Extra variables: x (d), then t⁺ and t⁻ per group.
    let x_at = base;
    let tp_at = base + d;
    let tm_at = tp_at + groups;
    let mut frame = skeleton.clone();
    frame.widen(d + 2 * groups);
    let width = frame.vars();
    for j in 0..d {
        let mut upper = vec![0.0; width];
        let mut lower = vec![0.0; width];
        for i in 0..m {
            upper[i] = -cube.ucb[(j, i)];
            lower[i] = cube.lcb[(j, i)];
        }
        upper[x_at + j] = 1.0;
        lower[x_at + j] = -1.0;
        frame.constrain(upper, Relation::Le, 0.0);
        frame.constrain(lower, Relation::Le, 0.0);
    }
    let mut cost = vec![0.0; width];
    for k in 0..groups {
        cost[tp_at + k] = 1.0;
        cost[tm_at + k] = -1.0;
    }
    frame.maximize(cost);

    let start = (&cube.lcb + &cube.ucb).column_mean() * 0.5;
    for k in 0..groups {
        if !pool.cuts.iter().any(|c| c.group == k) {
            pool.add(f, k, &start);
        }
    }

    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..options.max_iters.max(1) {
        pool.clock += 1;
        let mut lp = frame.clone();
        for cut in &pool.cuts {
            let mut row = vec![0.0; width];
            row[tp_at + cut.group] = 1.0;
            row[tm_at + cut.group] = -1.0;
            for j in 0..d {
                row[x_at + j] = -cut.slope[j];
            }
            lp.constrain(row, Relation::Le, cut.constant);
        }
        let (sol, upper) = match lp.solve() {
            LpStatus::Optimal { x, value } => (x, value),
            LpStatus::Infeasible if best.is_none() => return Ok(UcbStep::Infeasible),
            LpStatus::Infeasible => break,
            LpStatus::Unbounded => return Err(Error::Unbounded),
        };
        let p = DVector::from_column_slice(&sol[..m]);
        let x = DVector::from_column_slice(&sol[x_at..x_at + d]);
        let actual = group_values(f, &x);
        let value: f64 = actual.iter().sum();
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, p));
        }
        for cut in &mut pool.cuts {
            let t = sol[tp_at + cut.group] - sol[tm_at + cut.group];
            if cut.constant + cut.slope.dot(&x) - t <= 1e-9 * (1.0 + math::abs(t)) {
                cut.last_active = pool.clock;
            }
        }
        let best_value = best.as_ref().map_or(value, |b| b.0);
        if upper - best_value <= options.gap_tol * (1.0 + math::abs(best_value)) {
            break;
        }
        let mut added = false;
        for (k, v) in actual.iter().enumerate() {
            let t = sol[tp_at + k] - sol[tm_at + k];
            if t - v > 0.25 * options.gap_tol * (1.0 + math::abs(*v)) {
                pool.add(f, k, &x);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    let (_, p) = best.expect("at least one solve");
    let policy = PolicyDistribution::from_raw(p, false)?;
    let (value, estimate) = f.max_over_box(&(&cube.lcb * policy.weights()), &(&cube.ucb * policy.weights()));
    Ok(UcbStep::Feasible { policy, estimate, value: Some(value) })
}

/// Constraints of the step program. Variables: `p` (m), then `z` (d) for halfspace sets
/// or hull weights for vertex sets.
fn skeleton(cube: &Hypercube, set: Option<&ConvexSet>, tol_feas: f64) -> LinearProgram {
    let (d, m) = (cube.dim(), cube.arms());
    let slack = tol_feas / math::sqrt(d as f64);
    let extra = match set.map(ConvexSet::shape) {
        Some(SetShape::Halfspaces { .. }) => d,
        Some(SetShape::Vertices { points }) => points.ncols(),
        _ => 0,
    };
    let total = m + extra;
    let mut lp = LinearProgram::new(total);
    let mut simplex = vec![0.0; total];
    simplex[..m].fill(1.0);
    lp.constrain(simplex, Relation::Eq, 1.0);
    let Some(set) = set else { return lp };
    let row_of = |coeffs: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..total).map(coeffs).collect() };
    match set.shape() {
        SetShape::Box => {
            for j in 0..d {
                // L_j·p ≤ u_j and U_j·p ≥ l_j
                lp.constrain(row_of(&|i| if i < m { cube.lcb[(j, i)] } else { 0.0 }), Relation::Le, set.upper()[j] + slack);
                if set.lower()[j] > 0.0 {
                    lp.constrain(row_of(&|i| if i < m { cube.ucb[(j, i)] } else { 0.0 }), Relation::Ge, set.lower()[j] - slack);
                }
            }
        }
        SetShape::Halfspaces { normals, offsets } => {
            for j in 0..d {
                // z_j − U_j·p ≤ slack and L_j·p − z_j ≤ slack
                lp.constrain(
                    row_of(&|i| if i < m { -cube.ucb[(j, i)] } else if i == m + j { 1.0 } else { 0.0 }),
                    Relation::Le,
                    slack,
                );
                lp.constrain(
                    row_of(&|i| if i < m { cube.lcb[(j, i)] } else if i == m + j { -1.0 } else { 0.0 }),
                    Relation::Le,
                    slack,
                );
                lp.constrain(row_of(&|i| if i == m + j { 1.0 } else { 0.0 }), Relation::Le, set.upper()[j]);
                if set.lower()[j] > 0.0 {
                    lp.constrain(row_of(&|i| if i == m + j { 1.0 } else { 0.0 }), Relation::Ge, set.lower()[j]);
                }
            }
            for (k, a) in normals.row_iter().enumerate() {
                lp.constrain(row_of(&|i| if i >= m { a[i - m] } else { 0.0 }), Relation::Le, offsets[k]);
            }
        }
        SetShape::Vertices { points } => {
            let k = points.ncols();
            lp.constrain(row_of(&|i| if i >= m { 1.0 } else { 0.0 }), Relation::Eq, 1.0);
            for j in 0..d {
                lp.constrain(
                    row_of(&|i| if i < m { -cube.ucb[(j, i)] } else { points[(j, i - m)] }),
                    Relation::Le,
                    slack,
                );
                lp.constrain(
                    row_of(&|i| if i < m { cube.lcb[(j, i)] } else { -points[(j, i - m)] }),
                    Relation::Le,
                    slack,
                );
            }
            debug_assert_eq!(total, m + k);
        }
    }
    lp
}

/// `max_{Ã ∈ H} f(Ã p)`, computed directly over the box `[L p, U p]`.
pub fn objective_value(cube: &Hypercube, f: &Objective, policy: &DVector<f64>) -> f64 {
    f.max_over_box(&(&cube.lcb * policy), &(&cube.ucb * policy)).0
}

/// The same quantity through the dual: `min_{‖θ‖_* ≤ L} f*(θ) − θ·(w(θ) p)`, where the
/// vertex `w(θ)` of the hypercube resolves the inner minimization over `Ã`. Solved by
/// projected subgradient descent; an independent route for testing.
pub fn objective_value_dual(cube: &Hypercube, f: &Objective, policy: &DVector<f64>, norm: Norm, iters: usize) -> f64 {
    let radius = f.lipschitz(norm);
    let dual = norm.dual();
    let project = |t: DVector<f64>| if radius.is_finite() { dual.project_ball(&t, radius) } else { t };
    let eval = |t: &DVector<f64>| f.fenchel(t) - t.dot(&(cube.vertex(t) * policy));
    let start = (&cube.lcb * policy + &cube.ucb * policy) * 0.5;
    let mut theta = project(-f.supergradient(&start));
    let mut best = eval(&theta);
    let scale = if radius.is_finite() { radius } else { 1.0 };
    for k in 0..iters {
        let grad = f.fenchel_argmax(&theta) - cube.vertex(&theta) * policy;
        let step = scale / math::sqrt((k + 1) as f64);
        theta = project(theta - grad * step);
        best = best.min(eval(&theta));
    }
    best
}

/// `min_{Ã ∈ H} dist(Ã p, S)` in the Euclidean norm, computed directly over the box.
pub fn constraint_gap(cube: &Hypercube, set: &ConvexSet, policy: &DVector<f64>) -> f64 {
    set.closest_in_box(&(&cube.lcb * policy), &(&cube.ucb * policy), Norm::L2).0
}

/// The same gap through the dual: `max_{‖θ‖₂ ≤ 1} θ·(w(θ) p) − h_S(θ)`, by projected
/// subgradient ascent.
pub fn constraint_gap_dual(cube: &Hypercube, set: &ConvexSet, policy: &DVector<f64>, iters: usize) -> f64 {
    let eval = |t: &DVector<f64>| t.dot(&(cube.vertex(t) * policy)) - set.support(t);
    let lo = &cube.lcb * policy;
    let hi = &cube.ucb * policy;
    let mid = (&lo + &hi) * 0.5;
    let diff = &mid - set.project(&mid, Norm::L2);
    let mut theta = Norm::L2.project_ball(&diff, 1.0);
    if math::norm2(&theta) > 0.0 {
        theta /= math::norm2(&theta);
    }
    let mut best = eval(&theta).max(0.0);
    for k in 0..iters {
        let grad = cube.vertex(&theta) * policy - set.support_point(&theta);
        let step = 1.0 / math::sqrt((k + 1) as f64);
        theta = Norm::L2.project_ball(&(theta + grad * step), 1.0);
        best = best.max(eval(&theta));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ScalarTerm;
    use alloc::vec;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn degenerate_linear_is_classic_ucb() {
        let v = dmatrix![0.2, 0.9, 0.5; 0.7, 0.1, 0.3];
        let f = Objective::linear(dvector![1.0, 0.5]);
        let step = solve_ucb_step(&Hypercube::degenerate(&v), Some(&f), None).unwrap();
        let UcbStep::Feasible { policy, value, .. } = step else { panic!() };
        assert_eq!(policy.weights(), &dvector![0.0, 1.0, 0.0]);
        assert!((value.unwrap() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn empty_achievable_intersection_is_infeasible() {
        let v = dmatrix![0.8, 0.9];
        let s = ConvexSet::boxed(dvector![0.0], dvector![0.5]).unwrap();
        let f = Objective::linear(dvector![1.0]);
        assert_eq!(solve_ucb_step(&Hypercube::degenerate(&v), Some(&f), Some(&s)).unwrap(), UcbStep::Infeasible);
        let hs = ConvexSet::halfspaces(dmatrix![1.0], dvector![0.5]).unwrap();
        assert_eq!(solve_ucb_step(&Hypercube::degenerate(&v), None, Some(&hs)).unwrap(), UcbStep::Infeasible);
    }

    #[test]
    fn knapsack_mixture() {
        // Reward row, then one resource row limited to 0.5.
        let v = dmatrix![1.0, 0.5; 1.0, 0.0];
        let s = ConvexSet::boxed(dvector![0.0, 0.0], dvector![1.0, 0.5]).unwrap();
        let f = Objective::linear(dvector![1.0, 0.0]);
        let UcbStep::Feasible { policy, value, .. } =
            solve_ucb_step(&Hypercube::degenerate(&v), Some(&f), Some(&s)).unwrap()
        else {
            panic!()
        };
        // Feasibility is relaxed by tol_feas, so the value may exceed 0.75 by about that much.
        assert!((value.unwrap() - 0.75).abs() < 2e-6);
        assert!((policy.weights()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn concave_objective_interior_mixture() {
        // f = 1 − (x − 0.5)² with arms at 0.2 and 0.9: optimum mixes to hit 0.5 exactly.
        let v = dmatrix![0.2, 0.9];
        let f = Objective::separable(vec![ScalarTerm::Quadratic { weight: 1.0, center: 0.5 }]).unwrap();
        let UcbStep::Feasible { policy, value, .. } = solve_ucb_step(&Hypercube::degenerate(&v), Some(&f), None).unwrap()
        else {
            panic!()
        };
        assert!((value.unwrap() - 1.0).abs() < 1e-9);
        assert!((policy.weights()[0] - 4.0 / 7.0).abs() < 1e-4);
    }

    #[test]
    fn dual_routes_agree() {
        let cube = Hypercube::new(dmatrix![0.1, 0.5, 0.3; 0.2, 0.0, 0.6], dmatrix![0.3, 0.7, 0.4; 0.5, 0.2, 0.9]).unwrap();
        let p = dvector![0.2, 0.5, 0.3];
        let f = Objective::separable(vec![
            ScalarTerm::Quadratic { weight: 1.0, center: 0.2 },
            ScalarTerm::Log1p { weight: 1.0 },
        ])
        .unwrap();
        let primal = objective_value(&cube, &f, &p);
        let dual = objective_value_dual(&cube, &f, &p, Norm::L2, 5000);
        assert!((primal - dual).abs() < 1e-3, "{primal} vs {dual}");
        let s = ConvexSet::halfspaces(dmatrix![1.0, 1.0], dvector![0.3]).unwrap();
        let g = constraint_gap(&cube, &s, &p);
        let gd = constraint_gap_dual(&cube, &s, &p, 5000);
        assert!(g > 0.0);
        assert!((g - gd).abs() < 1e-3, "{g} vs {gd}");
    }
}
