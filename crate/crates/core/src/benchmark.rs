//! Offline benchmark (best fixed policy under the true means) and regret series.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::confidence::Hypercube;
use crate::error::{check_len, invalid, Result};
use crate::geometry::{ConvexSet, Norm};
use crate::model::{InstanceModel, PolicyDistribution, RunHistory};
use crate::objective::Objective;
use crate::solvers::{solve_lp, solve_ucb_step, LpProblem, LpSolution, UcbStep};

/// Containment tolerance used when a grid point is tested against the target set.
pub const GRID_FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    /// Best fixed policy; `None` when no policy reaches the target set.
    pub p_star: Option<PolicyDistribution>,
    /// `V p*`.
    pub point: Option<DVector<f64>>,
    /// `f(V p*)`; absent when infeasible or when there is no objective.
    pub opt_value: Option<f64>,
    pub feasible: bool,
}

impl BenchmarkResult {
    fn infeasible() -> Self {
        Self { p_star: None, point: None, opt_value: None, feasible: false }
    }

    fn from_policy(means: &DMatrix<f64>, f: Option<&Objective>, policy: PolicyDistribution) -> Self {
        let point = means * policy.weights();
        let opt_value = f.map(|f| f.value(&point));
        Self { p_star: Some(policy), point: Some(point), opt_value, feasible: true }
    }
}

/// Exact benchmark: the optimistic program with a confidence box collapsed onto the true means.
pub fn compute_opt(instance: &InstanceModel, f: Option<&Objective>, set: Option<&ConvexSet>) -> Result<BenchmarkResult> {
    if f.is_none() && set.is_none() {
        return Err(invalid("benchmark needs an objective or a target set"));
    }
    let cube = Hypercube::degenerate(instance.means());
    Ok(match solve_ucb_step(&cube, f, set)? {
        UcbStep::Feasible { policy, .. } => BenchmarkResult::from_policy(instance.means(), f, policy),
        UcbStep::Infeasible => BenchmarkResult::infeasible(),
    })
}

/// Grid benchmark over the simplex with spacing `step`, refined by pairwise mass
/// transfers down to `refine_to`. Only sensible for a handful of arms.
pub fn compute_opt_grid(
    instance: &InstanceModel,
    f: Option<&Objective>,
    set: Option<&ConvexSet>,
    step: f64,
    refine_to: f64,
) -> Result<BenchmarkResult> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(invalid("grid step must lie in (0, 1]"));
    }
    let means = instance.means();
    let m = instance.arms();
    let score = |p: &DVector<f64>| -> Option<f64> {
        let x = means * p;
        if let Some(s) = set {
            if !s.contains(&x, GRID_FEAS_TOL) {
                return None;
            }
        }
        Some(f.map_or(0.0, |f| f.value(&x)))
    };
    let n = libm::round(1.0 / step) as usize;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for_each_composition(n, m, |counts| {
        let p = DVector::from_iterator(m, counts.iter().map(|&c| c as f64 / n as f64));
        if let Some(v) = score(&p) {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, p));
            }
        }
    });
    let Some((mut value, mut p)) = best else {
        return Ok(BenchmarkResult::infeasible());
    };
    if f.is_some() {
        let mut h = 1.0 / n as f64;
        while h >= refine_to {
            let mut improved = true;
            while improved {
                improved = false;
                for from in 0..m {
                    for to in 0..m {
                        if from == to || p[from] <= 0.0 {
                            continue;
                        }
                        let mut q = p.clone();
                        let moved = h.min(q[from]);
                        q[from] -= moved;
                        q[to] += moved;
                        if let Some(v) = score(&q) {
                            if v > value + 1e-15 {
                                value = v;
                                p = q;
                                improved = true;
                            }
                        }
                    }
                }
            }
            h *= 0.5;
        }
    }
    let policy = PolicyDistribution::from_raw(p, false)?;
    Ok(BenchmarkResult::from_policy(means, f, policy))
}

/// Calls `visit` with every vector of `parts` nonnegative integers summing to `total`.
pub fn for_each_composition(total: usize, parts: usize, mut visit: impl FnMut(&[usize])) {
    if parts == 0 {
        return;
    }
    let mut counts = vec![0usize; parts];
    fn recurse(counts: &mut [usize], index: usize, left: usize, visit: &mut dyn FnMut(&[usize])) {
        if index + 1 == counts.len() {
            counts[index] = left;
            visit(counts);
            return;
        }
        for c in 0..=left {
            counts[index] = c;
            recurse(counts, index + 1, left - c, visit);
        }
    }
    recurse(&mut counts, 0, total, &mut visit);
}

/// `LP(r, C)` for a knapsack instance (reward in component 0); `T` times this
/// value stands in for the optimal expected reward.
pub fn knapsack_lp_value(instance: &InstanceModel, budget: f64, horizon: usize) -> Result<Option<(PolicyDistribution, f64)>> {
    let means = instance.means();
    if means.nrows() < 2 {
        return Err(invalid("knapsack instances need a reward and at least one resource"));
    }
    let problem = LpProblem {
        rewards: means.row(0).transpose(),
        consumption: means.rows(1, means.nrows() - 1).into_owned(),
        budget_ratio: budget / horizon as f64,
        eps: 0.0,
    };
    Ok(match solve_lp(&problem)? {
        LpSolution::Optimal { policy, value } => Some((policy, value)),
        LpSolution::Infeasible => None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackRegret {
    pub total_reward: f64,
    /// `T · LP(r, C) − Σ r_t`.
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// `opt − f(mean observation up to t)`; signed. Empty without an objective.
    pub areg1: Vec<f64>,
    /// Distance of the mean observation up to `t` from the set. Empty without a set.
    pub areg2: Vec<f64>,
    pub knapsack: Option<KnapsackRegret>,
}

impl RegretTrace {
    pub fn final_areg1(&self) -> Option<f64> {
        self.areg1.last().copied()
    }

    pub fn final_areg2(&self) -> Option<f64> {
        self.areg2.last().copied()
    }
}

/// Regret series computed from the stored observations.
///
/// The mean observation at step `t` divides by `t`; for a run that stopped early the
/// last entry is the mean over the steps actually played.
pub fn regret_trace(
    history: &RunHistory,
    bench: &BenchmarkResult,
    f: Option<&Objective>,
    set: Option<&ConvexSet>,
    norm: Norm,
) -> Result<RegretTrace> {
    if history.is_empty() {
        return Err(invalid("empty history"));
    }
    let d = history.observations[0].len();
    let mut sum = DVector::zeros(d);
    let mut areg1 = Vec::new();
    let mut areg2 = Vec::new();
    let opt = bench.opt_value;
    for (t, v) in history.observations.iter().enumerate() {
        check_len(d, v.len())?;
        sum += v;
        let mean = &sum / (t + 1) as f64;
        if let (Some(f), Some(opt)) = (f, opt) {
            areg1.push(opt - f.value(&mean));
        }
        if let Some(s) = set {
            areg2.push(s.distance(&mean, norm).max(0.0));
        }
    }
    Ok(RegretTrace { areg1, areg2, knapsack: None })
}

/// Final-step regrets only, skipping the per-step series.
pub fn final_regrets(
    history: &RunHistory,
    bench: &BenchmarkResult,
    f: Option<&Objective>,
    set: Option<&ConvexSet>,
    norm: Norm,
) -> Result<(Option<f64>, Option<f64>)> {
    let sum = history.observation_sum(history.len()).ok_or_else(|| invalid("empty history"))?;
    let mean = sum / history.len() as f64;
    let areg1 = match (f, bench.opt_value) {
        (Some(f), Some(opt)) => Some(opt - f.value(&mean)),
        _ => None,
    };
    let areg2 = set.map(|s| s.distance(&mean, norm).max(0.0));
    Ok((areg1, areg2))
}

/// Knapsack regret `T · LP − Σ r_t` with the reward in component 0.
pub fn knapsack_regret(history: &RunHistory, lp_value: f64, horizon: usize) -> KnapsackRegret {
    let total_reward: f64 = history.observations.iter().map(|v| v[0]).sum();
    KnapsackRegret { total_reward, regret: horizon as f64 * lp_value - total_reward }
}

/// The two terms bounding the objective regret: optimization error of the estimates and
/// their distance from the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretDecomposition {
    pub areg1: f64,
    /// `f(x*) − f(x̄)` for the average estimate `x̄`.
    pub optimization: f64,
    /// `L · ‖x̄ − mean observation‖`.
    pub estimation: f64,
}

impl RegretDecomposition {
    pub fn holds(&self, tol: f64) -> bool {
        self.areg1 <= self.optimization + self.estimation + tol
    }
}

pub fn decompose_regret(
    opt_value: f64,
    f: &Objective,
    norm: Norm,
    estimate_average: &DVector<f64>,
    observation_mean: &DVector<f64>,
) -> RegretDecomposition {
    RegretDecomposition {
        areg1: opt_value - f.value(observation_mean),
        optimization: opt_value - f.value(estimate_average),
        estimation: f.lipschitz(norm) * norm.of(&(estimate_average - observation_mean)),
    }
}
