//! Acceptance checks: each criterion runs an oracle or a statistical experiment and
//! reports a verdict with the numbers behind it.

mod checks;
mod oracles;

use std::fmt;
use std::time::{Duration, Instant};

use bwcr_core::geometry::ConvexSet;
use bwcr_core::model::{InstanceModel, OutcomeKind};
use bwcr_core::objective::{Objective, ScalarTerm};
use nalgebra::{dmatrix, dvector};

use crate::error::Result;

pub use oracles::{ellipsoid_min_by_rejection, lp_value_by_vertices};

/// Outcome of one check: `passed` together with a human-readable account.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub time_limit: Option<Duration>,
    check: fn() -> Result<Verdict>,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let limit = self.time_limit.map_or(String::new(), |l| format!(", limit {:.0} s", l.as_secs_f64()));
        write!(
            f,
            "criterion {:>2} [{}] {}: {} ({:.2} s{limit})",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

impl Criterion {
    /// Runs the check; errors and overruns of the time limit count as failures.
    pub fn run(&self) -> CriterionReport {
        let start = Instant::now();
        let outcome = (self.check)();
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = match outcome {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(limit) = self.time_limit {
            if elapsed > limit {
                passed = false;
                detail.push_str("; exceeded the time limit");
            }
        }
        CriterionReport { id: self.id, title: self.title, passed, detail, elapsed, time_limit: self.time_limit }
    }
}

pub fn criteria() -> Vec<Criterion> {
    let secs = |s: u64| Some(Duration::from_secs(s));
    vec![
        Criterion { id: 1, title: "confidence coverage", time_limit: secs(60), check: checks::confidence_coverage },
        Criterion { id: 2, title: "vertex optimality", time_limit: secs(10), check: checks::vertex_optimality },
        Criterion { id: 3, title: "LP solver vs vertex enumeration", time_limit: secs(10), check: checks::lp_vs_vertices },
        Criterion { id: 4, title: "optimistic step vs simplex grid", time_limit: secs(120), check: checks::step_vs_grid },
        Criterion { id: 5, title: "Frank-Wolfe convergence", time_limit: secs(1), check: checks::frank_wolfe_rate },
        Criterion { id: 6, title: "smoothing sandwich and gradient", time_limit: secs(5), check: checks::smoothing },
        Criterion { id: 7, title: "regret scaling", time_limit: secs(300), check: checks::regret_scaling },
        Criterion { id: 8, title: "knapsack safety and shrinkage", time_limit: None, check: checks::knapsack_safety },
        Criterion { id: 9, title: "online gradient descent regret", time_limit: None, check: checks::ogd_regret },
        Criterion { id: 10, title: "regret decomposition", time_limit: None, check: checks::decomposition },
        Criterion { id: 11, title: "contextual coverage", time_limit: None, check: checks::contextual_coverage },
        Criterion { id: 12, title: "reproducible traces", time_limit: None, check: checks::reproducible_traces },
    ]
}

pub fn run_all() -> Vec<CriterionReport> {
    criteria().iter().map(Criterion::run).collect()
}

/// Five arms, three components: the instance used by the regret experiments.
pub fn reference_instance(outcome: OutcomeKind) -> InstanceModel {
    let means = dmatrix![
        0.9, 0.7, 0.5, 0.3, 0.1;
        0.8, 0.4, 0.6, 0.2, 0.1;
        0.3, 0.6, 0.2, 0.7, 0.1
    ];
    InstanceModel::new(means, outcome).expect("valid means")
}

pub fn reference_objective() -> Objective {
    Objective::separable(vec![
        ScalarTerm::Quadratic { weight: 1.0, center: 1.0 },
        ScalarTerm::Log1p { weight: 1.0 },
        ScalarTerm::Linear { weight: 0.5 },
    ])
    .expect("concave terms")
}

/// `x_2 ≤ 0.5` and `x_3 ≥ 0.45`, which cuts off the unconstrained optimum.
pub fn reference_set() -> ConvexSet {
    ConvexSet::halfspaces(dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, -1.0], dvector![0.5, -0.45]).expect("nonempty")
}
