//! Dense two-phase simplex, largest-coefficient pivoting with Bland's rule as the
//! anti-cycling fallback.
//!
//! Problems here have at most a few dozen variables, so a full tableau is the
//! simplest correct choice.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, invalid, Error, Result};
use crate::model::PolicyDistribution;

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `maximize c·x` subject to linear rows and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    vars: usize,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        Self { vars, objective: vec![0.0; vars], rows: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// Appends `extra` variables with zero coefficients in every existing row.
    pub fn widen(&mut self, extra: usize) -> &mut Self {
        self.vars += extra;
        self.objective.resize(self.vars, 0.0);
        for row in &mut self.rows {
            row.0.resize(self.vars, 0.0);
        }
        self
    }

    pub fn maximize(&mut self, coefficients: Vec<f64>) -> &mut Self {
        assert_eq!(coefficients.len(), self.vars, "objective length");
        self.objective = coefficients;
        self
    }

    pub fn constrain(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coefficients.len(), self.vars, "constraint length");
        self.rows.push((coefficients, relation, rhs));
        self
    }

    pub fn solve(&self) -> LpStatus {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    /// Row-major, `rows × (cols + 1)`; the last column is the right-hand side.
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    vars: usize,
    basis: Vec<usize>,
    artificial_from: usize,
    live: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let slack_count = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let mut normalized: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(lp.rows.len());
        for (a, rel, b) in &lp.rows {
            if *b < 0.0 {
                let flipped = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                normalized.push((a.iter().map(|v| -v).collect(), flipped, -b));
            } else {
                normalized.push((a.clone(), *rel, *b));
            }
        }
        let art_count = normalized.iter().filter(|r| r.1 != Relation::Le).count();
        let rows = normalized.len();
        let artificial_from = lp.vars + slack_count;
        let cols = artificial_from + art_count;
        let width = cols + 1;
        let mut data = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut slack = lp.vars;
        let mut art = artificial_from;
        for (i, (a, rel, b)) in normalized.iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..lp.vars].copy_from_slice(a);
            row[cols] = *b;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Self { data, rows, cols, vars: lp.vars, basis, artificial_from, live: vec![true; rows] }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    /// Reduced-cost row `c_j − c_B·column_j`, with the negated objective value in the last slot.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.width()];
        z[..self.cols].copy_from_slice(cost);
        for r in 0..self.rows {
            if !self.live[r] {
                continue;
            }
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..self.width() {
                    z[c] -= cb * self.at(r, c);
                }
            }
        }
        z
    }

    fn pivot(&mut self, z: &mut [f64], pr: usize, pc: usize) {
        let w = self.width();
        let pv = self.at(pr, pc);
        for c in 0..w {
            self.data[pr * w + c] /= pv;
        }
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let factor = row[pc];
            if factor != 0.0 {
                for c in 0..w {
                    row[c] -= factor * prow[c];
                }
                row[pc] = 0.0;
            }
        }
        let factor = z[pc];
        if factor != 0.0 {
            for c in 0..w {
                z[c] -= factor * prow[c];
            }
            z[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations over columns `< allowed`: largest reduced cost first, then
    /// Bland's rule once pivots stop making progress (which rules out cycling).
    fn optimize(&mut self, z: &mut [f64], allowed: usize) -> bool {
        let mut stalled = 0usize;
        loop {
            let entering = if stalled > STALL_LIMIT {
                (0..allowed).find(|&c| z[c] > PIVOT_TOL)
            } else {
                (0..allowed).filter(|&c| z[c] > PIVOT_TOL).max_by(|&a, &b| z[a].total_cmp(&z[b]))
            };
            let Some(pc) = entering else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                if !self.live[r] {
                    continue;
                }
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, self.cols) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12
                                || (ratio <= bratio + 1e-12 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match best {
                Some((pr, ratio)) => {
                    if ratio <= 1e-12 {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    self.pivot(z, pr, pc)
                }
                None => return false,
            }
        }
    }

    fn run(mut self, objective: &[f64]) -> LpStatus {
        let scale = 1.0 + (0..self.rows).map(|r| self.at(r, self.cols).abs()).fold(0.0, f64::max);
        if self.artificial_from < self.cols {
            let mut cost = vec![0.0; self.cols];
            for c in cost.iter_mut().skip(self.artificial_from) {
                *c = -1.0;
            }
            let mut z = self.reduced_costs(&cost);
            self.optimize(&mut z, self.cols);
            if -z[self.cols] < -FEAS_TOL * scale {
                return LpStatus::Infeasible;
            }
            // Drive remaining (zero-level) artificials out of the basis.
            for r in 0..self.rows {
                if self.basis[r] < self.artificial_from {
                    continue;
                }
                let entering = (0..self.artificial_from).find(|&c| self.at(r, c).abs() > 1e-9);
                match entering {
                    Some(c) => self.pivot(&mut z, r, c),
                    None => self.live[r] = false,
                }
            }
        }
        let mut cost = vec![0.0; self.cols];
        cost[..self.vars].copy_from_slice(objective);
        let mut z = self.reduced_costs(&cost);
        if !self.optimize(&mut z, self.artificial_from) {
            return LpStatus::Unbounded;
        }
        let mut x = vec![0.0; self.vars];
        for r in 0..self.rows {
            if self.live[r] && self.basis[r] < self.vars {
                x[self.basis[r]] = self.at(r, self.cols);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpStatus::Optimal { x, value }
    }
}

/// Linear relaxation of bandits with knapsacks: maximize `r·p` over the simplex
/// subject to `C p ≤ (1 − ε)·(B/T)` for every resource row of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub rewards: DVector<f64>,
    pub consumption: DMatrix<f64>,
    pub budget_ratio: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { policy: PolicyDistribution, value: f64 },
    Infeasible,
}

impl LpProblem {
    pub fn validate(&self) -> Result<()> {
        check_len(self.rewards.len(), self.consumption.ncols())?;
        let in_unit = |v: &f64| (0.0..=1.0).contains(v);
        if !self.rewards.iter().all(in_unit) || !self.consumption.iter().all(in_unit) {
            return Err(invalid("rewards and consumptions must lie in [0, 1]"));
        }
        if !(self.budget_ratio > 0.0) {
            return Err(invalid("budget ratio must be positive"));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(invalid("shrink parameter must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let m = problem.rewards.len();
    let cap = (1.0 - problem.eps) * problem.budget_ratio;
    let mut lp = LinearProgram::new(m);
    lp.maximize(problem.rewards.iter().copied().collect());
    lp.constrain(vec![1.0; m], Relation::Eq, 1.0);
    for row in problem.consumption.row_iter() {
        lp.constrain(row.iter().copied().collect(), Relation::Le, cap);
    }
    match lp.solve() {
        LpStatus::Optimal { x, .. } => {
            let policy = PolicyDistribution::from_raw(DVector::from_vec(x), false)?;
            let value = problem.rewards.dot(policy.weights());
            Ok(LpSolution::Optimal { policy, value })
        }
        LpStatus::Infeasible => Ok(LpSolution::Infeasible),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn value(s: &LpSolution) -> f64 {
        match s {
            LpSolution::Optimal { value, .. } => *value,
            LpSolution::Infeasible => f64::NAN,
        }
    }

    #[test]
    fn single_feasible_point() {
        let p = LpProblem { rewards: dvector![1.0], consumption: dmatrix![0.4], budget_ratio: 0.5, eps: 0.0 };
        let s = solve_lp(&p).unwrap();
        assert_eq!(value(&s), 1.0);
    }

    #[test]
    fn two_arm_knapsack() {
        let p = LpProblem {
            rewards: dvector![1.0, 0.5],
            consumption: dmatrix![1.0, 0.0],
            budget_ratio: 0.5,
            eps: 0.0,
        };
        match solve_lp(&p).unwrap() {
            LpSolution::Optimal { policy, value } => {
                assert!((value - 0.75).abs() < 1e-12);
                assert!((policy.weights()[0] - 0.5).abs() < 1e-12);
            }
            LpSolution::Infeasible => panic!("expected optimum"),
        }
    }

    #[test]
    fn infeasible_single_arm() {
        let p = LpProblem { rewards: dvector![1.0], consumption: dmatrix![0.9], budget_ratio: 0.5, eps: 0.0 };
        assert_eq!(solve_lp(&p).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn general_rows() {
        // max x + y s.t. x + 2y ≤ 4, 3x + y ≥ 3, x − y = 0.5
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 1.0])
            .constrain(vec![1.0, 2.0], Relation::Le, 4.0)
            .constrain(vec![3.0, 1.0], Relation::Ge, 3.0)
            .constrain(vec![1.0, -1.0], Relation::Eq, 0.5);
        match lp.solve() {
            LpStatus::Optimal { x, value } => {
                assert!((x[0] - 5.0 / 3.0).abs() < 1e-12);
                assert!((x[1] - 7.0 / 6.0).abs() < 1e-12);
                assert!((value - 17.0 / 6.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 0.0]).constrain(vec![-1.0, 1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        let mut lp = LinearProgram::new(3);
        lp.maximize(vec![1.0, 2.0, 3.0])
            .constrain(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0)
            .constrain(vec![2.0, 2.0, 2.0], Relation::Eq, 2.0)
            .constrain(vec![0.0, 0.0, 1.0], Relation::Le, 0.0);
        match lp.solve() {
            LpStatus::Optimal { value, .. } => assert!((value - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
