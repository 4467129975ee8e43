//! The algorithm family as steppers: `decide` emits a policy (or stops), then
//! `observe` ingests the outcome of the drawn arm.

mod config;
mod knapsack;
mod simulate;

pub use config::{AlgorithmConfig, UpdateRule, Variant};
pub use knapsack::{greedy_ratio, solve_single_constraint, Mixture};
pub use simulate::{simulate, simulate_with, RunRecord};

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::confidence::{ConfidenceState, EllipsoidState, Hypercube};
use crate::error::{check_len, Result};
use crate::geometry::{smoothed_distance, ConvexSet, Norm, NormPair};
use crate::math;
use crate::model::PolicyDistribution;
use crate::objective::{Objective, SmoothedObjective};
use crate::solvers::{
    solve_lp, solve_ucb_step, solve_ucb_step_pooled, CutPool, LpProblem, LpSolution, OcoKind, OcoState, UcbStep,
    UcbStepOptions,
};

/// Per-step accuracy of the optimistic program; far below the statistical error.
const STEP_OPTIONS: UcbStepOptions = UcbStepOptions { tol_feas: 1e-6, max_iters: 200, gap_tol: 1e-6 };

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Play(PolicyDistribution),
    /// A resource budget is exhausted; the run ends.
    Stop,
}

#[derive(Debug, Clone)]
enum Estimator {
    Counts(ConfidenceState),
    Contextual { state: EllipsoidState, contexts: Vec<DMatrix<f64>> },
    /// The means are known: the hypercube is collapsed onto them and never changes.
    Known(Hypercube),
}

impl Estimator {
    fn hypercube(&self) -> Hypercube {
        match self {
            Estimator::Counts(state) => state.hypercube(),
            Estimator::Contextual { state, contexts } => state.hypercube(contexts),
            Estimator::Known(cube) => cube.clone(),
        }
    }

    fn record(&mut self, arm: Option<usize>, v: &DVector<f64>) -> Result<()> {
        match self {
            Estimator::Counts(state) => state.record(arm, v),
            Estimator::Contextual { state, contexts } => match arm {
                Some(i) => {
                    let xs: Vec<DVector<f64>> = contexts.iter().map(|c| c.column(i).into_owned()).collect();
                    state.record(&xs, v)
                }
                None => Ok(()),
            },
            Estimator::Known(_) => Ok(()),
        }
    }
}

/// What was decided at the current step, kept until the observation arrives.
#[derive(Debug, Clone)]
struct Pending {
    /// `x_t = Ã_t p_t` for the objective direction.
    estimate: DVector<f64>,
    /// `z_t` for the constraint direction (combined and greedy variants).
    constraint_estimate: Option<DVector<f64>>,
    theta: Option<DVector<f64>>,
    phi: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct Algorithm {
    config: AlgorithmConfig,
    dim: usize,
    arms: usize,
    estimator: Estimator,
    /// Objective in effect (the negated distance when only a set is given to the dual variant).
    objective: Option<Objective>,
    /// Target set in effect (shrunken when requested).
    set: Option<ConvexSet>,
    smoothed: Option<SmoothedObjective>,
    sigma: f64,
    theta_oco: Option<OcoState>,
    phi_oco: Option<OcoState>,
    estimate_sum: DVector<f64>,
    constraint_sum: DVector<f64>,
    steps: usize,
    budget_spent: DVector<f64>,
    stopped: bool,
    pending: Option<Pending>,
    /// Tangent cuts of the objective reused across optimistic programs.
    cuts: CutPool,
}

impl Algorithm {
    pub fn new(config: AlgorithmConfig, dim: usize, arms: usize) -> Result<Self> {
        let estimator = Estimator::Counts(ConfidenceState::new(dim, arms, config.gamma)?);
        Self::build(config, dim, arms, estimator)
    }

    /// Contextual estimation: `contexts[j]` is the `n × m` context matrix of component `j`.
    pub fn contextual(config: AlgorithmConfig, contexts: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = contexts.len();
        let arms = contexts.first().map_or(0, |c| c.ncols());
        let n = contexts.first().map_or(0, |c| c.nrows());
        for c in &contexts {
            check_len(n, c.nrows())?;
            check_len(arms, c.ncols())?;
        }
        let estimator = Estimator::Contextual { state: EllipsoidState::new(n, dim), contexts };
        Self::build(config, dim, arms, estimator)
    }

    /// Runs with the true mean matrix in place of confidence bounds.
    pub fn with_known_means(config: AlgorithmConfig, means: &DMatrix<f64>) -> Result<Self> {
        Self::build(config, means.nrows(), means.ncols(), Estimator::Known(Hypercube::degenerate(means)))
    }

    /// Contextual state, if this run estimates through contexts.
    pub fn ellipsoids(&self) -> Option<&EllipsoidState> {
        match &self.estimator {
            Estimator::Contextual { state, .. } => Some(state),
            _ => None,
        }
    }

    fn build(config: AlgorithmConfig, dim: usize, arms: usize, estimator: Estimator) -> Result<Self> {
        config.validate(dim, arms)?;
        let mut objective = config.objective.clone();
        let mut set = config.set.clone();
        if config.variant == Variant::DualOco && objective.is_none() {
            objective = set.clone().map(|s| Objective::neg_distance(s, config.norm.primal));
        }
        if config.variant == Variant::UcbBwcr {
            if let (Some(eps), Some(s)) = (config.eps, &set) {
                if eps > 0.0 {
                    set = Some(s.shrink(eps)?);
                }
            }
        }
        let sigma = config.sigma_or_default(dim);
        let wants_smoothing = match config.variant {
            Variant::FwPrimal => objective.as_ref().is_some_and(|f| f.smoothness().is_none()),
            Variant::Combined => config.theta_update == UpdateRule::PrimalSmoothed,
            _ => false,
        };
        let smoothed = match (&objective, wants_smoothing) {
            (Some(f), true) => Some(SmoothedObjective::new(f.clone(), sigma)?),
            _ => None,
        };
        let oco = |d: usize, radius: f64| -> Result<OcoState> {
            match config.oco {
                OcoKind::Ogd => OcoState::ogd(d, radius, config.norm),
                OcoKind::Entropic => OcoState::entropic(d, radius, config.norm, config.horizon),
            }
        };
        let theta_oco = match config.variant {
            Variant::DualOco => Some(oco(dim, objective.as_ref().expect("validated").lipschitz(config.norm.primal))?),
            Variant::Combined if config.theta_update == UpdateRule::Dual => {
                Some(oco(dim, objective.as_ref().expect("validated").lipschitz(config.norm.primal))?)
            }
            _ => None,
        };
        let phi_oco = match config.variant {
            Variant::Combined if config.phi_update == UpdateRule::Dual => Some(oco(dim, 1.0)?),
            // Resource prices only; the reward coordinate is handled by θ.
            Variant::GreedyBwk => Some(OcoState::entropic(dim - 1, 1.0, NormPair::new(Norm::LInf), config.horizon)?),
            _ => None,
        };
        Ok(Self {
            dim,
            arms,
            estimator,
            objective,
            set,
            smoothed,
            sigma,
            theta_oco,
            phi_oco,
            estimate_sum: DVector::zeros(dim),
            constraint_sum: DVector::zeros(dim),
            steps: 0,
            budget_spent: DVector::zeros(dim),
            stopped: false,
            pending: None,
            cuts: CutPool::default(),
            config,
        })
    }

    pub fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Objective in effect, if any.
    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    /// Target set in effect, if any (after shrinking).
    pub fn set(&self) -> Option<&ConvexSet> {
        self.set.as_ref()
    }

    /// Resource consumption so far; component 0 (reward) is left at zero.
    pub fn budget_spent(&self) -> &DVector<f64> {
        &self.budget_spent
    }

    pub fn hypercube(&self) -> Hypercube {
        self.estimator.hypercube()
    }

    /// `(1/t)·Σ_s Ã_s p_s` over the steps observed so far.
    pub fn estimate_average(&self) -> DVector<f64> {
        &self.estimate_sum / self.steps.max(1) as f64
    }

    /// Sum of the estimates `Ã_s p_s` over the steps observed so far.
    pub fn estimate_sum(&self) -> &DVector<f64> {
        &self.estimate_sum
    }

    /// The estimate `Ã_t p_t` chosen by the latest `decide`, until it is observed.
    pub fn pending_estimate(&self) -> Option<&DVector<f64>> {
        self.pending.as_ref().map(|p| &p.estimate)
    }

    pub fn theta(&self) -> Option<&DVector<f64>> {
        self.theta_oco.as_ref().map(OcoState::theta)
    }

    pub fn phi(&self) -> Option<&DVector<f64>> {
        self.phi_oco.as_ref().map(OcoState::theta)
    }

    pub fn decide(&mut self) -> Result<Decision> {
        if self.stopped {
            return Ok(Decision::Stop);
        }
        if self.config.variant.is_knapsack() {
            let budget = self.config.budget.expect("validated");
            if self.budget_spent.iter().skip(1).any(|&b| b > budget) {
                self.stopped = true;
                self.pending = None;
                return Ok(Decision::Stop);
            }
        }
        let cube = self.estimator.hypercube();
        let (policy, pending) = match self.config.variant {
            Variant::UcbBwcr => self.step_ucb_bwcr(&cube)?,
            Variant::UcbBwk => self.step_ucb_bwk(&cube)?,
            Variant::DualOco => self.step_dual(&cube),
            Variant::FwPrimal => self.step_fw_primal(&cube),
            Variant::FwBwc => self.step_fw_bwc(&cube),
            Variant::Combined => self.step_combined(&cube)?,
            Variant::GreedyBwk => self.step_greedy_bwk(&cube)?,
        };
        self.pending = Some(pending);
        Ok(Decision::Play(policy))
    }

    fn plain(estimate: DVector<f64>) -> Pending {
        Pending { estimate, constraint_estimate: None, theta: None, phi: None }
    }

    fn step_ucb_bwcr(&mut self, cube: &Hypercube) -> Result<(PolicyDistribution, Pending)> {
        let step = match &self.objective {
            Some(f) => solve_ucb_step_pooled(cube, f, self.set.as_ref(), &STEP_OPTIONS, &mut self.cuts)?,
            None => solve_ucb_step(cube, None, self.set.as_ref())?,
        };
        match step {
            UcbStep::Feasible { policy, estimate, .. } => Ok((policy, Self::plain(estimate))),
            UcbStep::Infeasible => {
                let policy = PolicyDistribution::uniform(self.arms);
                let p = policy.weights();
                let (lo, hi) = (&cube.lcb * p, &cube.ucb * p);
                let estimate = match &self.objective {
                    Some(f) => f.max_over_box(&lo, &hi).1,
                    None => (lo + hi) * 0.5,
                };
                Ok((policy, Self::plain(estimate)))
            }
        }
    }

    /// Reward row from the upper bounds, resource rows from the lower bounds.
    fn knapsack_matrix(cube: &Hypercube) -> DMatrix<f64> {
        let mut a = cube.lcb.clone();
        a.set_row(0, &cube.ucb.row(0));
        a
    }

    fn step_ucb_bwk(&self, cube: &Hypercube) -> Result<(PolicyDistribution, Pending)> {
        let problem = LpProblem {
            rewards: cube.ucb.row(0).transpose(),
            consumption: cube.lcb.rows(1, self.dim - 1).into_owned(),
            budget_ratio: self.config.budget.expect("validated") / self.config.horizon as f64,
            eps: self.config.effective_eps(self.arms),
        };
        let policy = match solve_lp(&problem)? {
            LpSolution::Optimal { policy, .. } => policy,
            LpSolution::Infeasible if self.config.allow_idle => PolicyDistribution::idle(self.arms),
            LpSolution::Infeasible => {
                let heaviest = |i: usize| problem.consumption.column(i).max();
                let arm = math::argmin((0..self.arms).map(heaviest)).unwrap_or(0);
                PolicyDistribution::point_mass(self.arms, arm)
            }
        };
        let estimate = Self::knapsack_matrix(cube) * policy.weights();
        Ok((policy, Self::plain(estimate)))
    }

    /// Arm minimizing `θ·Ã_i` at the hypercube vertex for `θ`, as a point mass with its estimate.
    fn linearized_choice(&self, cube: &Hypercube, theta: &DVector<f64>) -> (PolicyDistribution, DVector<f64>) {
        let arm = math::argmin(cube.vertex_scores(theta)).unwrap_or(0);
        let estimate = cube.vertex(theta).column(arm).into_owned();
        (PolicyDistribution::point_mass(self.arms, arm), estimate)
    }

    fn step_dual(&self, cube: &Hypercube) -> (PolicyDistribution, Pending) {
        let theta = self.theta_oco.as_ref().expect("dual state").theta().clone();
        let (policy, estimate) = self.linearized_choice(cube, &theta);
        (policy, Pending { estimate, constraint_estimate: None, theta: Some(theta), phi: None })
    }

    /// Running average before this step, or the uniform-policy upper estimate at the first step.
    fn previous_average(&self, cube: &Hypercube, sum: &DVector<f64>) -> DVector<f64> {
        if self.steps == 0 {
            &cube.ucb * PolicyDistribution::uniform(self.arms).weights()
        } else {
            sum / self.steps as f64
        }
    }

    fn objective_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.smoothed {
            Some(s) => s.gradient(x),
            None => self.objective.as_ref().expect("validated").supergradient(x),
        }
    }

    fn step_fw_primal(&self, cube: &Hypercube) -> (PolicyDistribution, Pending) {
        let xbar = self.previous_average(cube, &self.estimate_sum);
        let theta = -self.objective_gradient(&xbar);
        let (policy, estimate) = self.linearized_choice(cube, &theta);
        (policy, Self::plain(estimate))
    }

    fn step_fw_bwc(&self, cube: &Hypercube) -> (PolicyDistribution, Pending) {
        let set = self.set.as_ref().expect("validated");
        let xbar = self.previous_average(cube, &self.estimate_sum);
        let direction = &xbar - set.project(&xbar, Norm::L2);
        if direction.iter().all(|v| *v == 0.0) {
            let policy = PolicyDistribution::uniform(self.arms);
            let estimate = (&cube.lcb + &cube.ucb) * policy.weights() * 0.5;
            return (policy, Self::plain(estimate));
        }
        let (policy, estimate) = self.linearized_choice(cube, &direction);
        (policy, Self::plain(estimate))
    }

    fn step_combined(&self, cube: &Hypercube) -> Result<(PolicyDistribution, Pending)> {
        let set = self.set.as_ref().expect("validated");
        let theta = match self.config.theta_update {
            UpdateRule::Dual => self.theta_oco.as_ref().expect("dual state").theta().clone(),
            UpdateRule::Primal | UpdateRule::PrimalSmoothed => {
                let xbar = self.previous_average(cube, &self.estimate_sum);
                -self.objective_gradient(&xbar)
            }
        };
        let phi = match self.config.phi_update {
            UpdateRule::Dual => self.phi_oco.as_ref().expect("dual state").theta().clone(),
            UpdateRule::Primal => {
                let zbar = self.previous_average(cube, &self.constraint_sum);
                &zbar - set.project(&zbar, Norm::L2)
            }
            UpdateRule::PrimalSmoothed => {
                let zbar = self.previous_average(cube, &self.constraint_sum);
                smoothed_distance(&zbar, set, self.sigma)?.gradient
            }
        };
        let scores = cube.vertex_scores(&theta);
        let usage = cube.vertex_scores(&phi);
        let cap = set.support(&phi);
        let policy = match solve_single_constraint(&scores, &usage, cap, self.config.allow_idle) {
            Some(mix) => PolicyDistribution::from_raw(mix.weights, self.config.allow_idle)?,
            None => PolicyDistribution::uniform(self.arms),
        };
        let p = policy.weights();
        let pending = Pending {
            estimate: cube.vertex(&theta) * p,
            constraint_estimate: Some(cube.vertex(&phi) * p),
            theta: Some(theta),
            phi: Some(phi),
        };
        Ok((policy, pending))
    }

    fn step_greedy_bwk(&self, cube: &Hypercube) -> Result<(PolicyDistribution, Pending)> {
        let prices = self.phi_oco.as_ref().expect("price state").theta();
        let mut phi = DVector::zeros(self.dim);
        phi.rows_mut(1, self.dim - 1).copy_from(prices);
        let ratio = self.config.budget.expect("validated") / self.config.horizon as f64;
        let cap = ratio * prices.iter().map(|v| v.max(0.0)).sum::<f64>();
        let rewards: Vec<f64> = cube.ucb.row(0).iter().copied().collect();
        let usage = cube.vertex_scores(&phi);
        let mix = greedy_ratio(&rewards, &usage, cap);
        let policy = PolicyDistribution::from_raw(mix.weights, true)?;
        let mut price_matrix = cube.vertex(&phi);
        price_matrix.set_row(0, &cube.ucb.row(0));
        let estimate = price_matrix * policy.weights();
        let pending = Pending {
            constraint_estimate: Some(estimate.clone()),
            estimate,
            theta: None,
            phi: Some(phi),
        };
        Ok((policy, pending))
    }

    /// Ingests the outcome of the step decided last; `None` is an idle step.
    pub fn observe(&mut self, arm: Option<usize>, observation: &DVector<f64>) -> Result<()> {
        check_len(self.dim, observation.len())?;
        self.estimator.record(arm, observation)?;
        if self.config.variant.is_knapsack() {
            for j in 1..self.dim {
                self.budget_spent[j] += observation[j];
            }
        }
        let pending = self.pending.take();
        self.steps += 1;
        let Some(pending) = pending else { return Ok(()) };
        self.estimate_sum += &pending.estimate;
        if let Some(z) = &pending.constraint_estimate {
            self.constraint_sum += z;
        }
        if let (Some(oco), Some(theta)) = (self.theta_oco.as_mut(), pending.theta.as_ref()) {
            let f = self.objective.as_ref().expect("validated");
            let grad = f.fenchel_argmax(theta) - &pending.estimate;
            oco.step(&grad)?;
        }
        if let (Some(oco), Some(phi)) = (self.phi_oco.as_mut(), pending.phi.as_ref()) {
            let z = pending.constraint_estimate.as_ref().expect("constraint estimate");
            if self.config.variant == Variant::GreedyBwk {
                let ratio = self.config.budget.expect("validated") / self.config.horizon as f64;
                let grad = DVector::from_fn(self.dim - 1, |j, _| {
                    let support = if phi[j + 1] > 0.0 { ratio } else { 0.0 };
                    support - z[j + 1]
                });
                oco.step(&grad)?;
            } else {
                let set = self.set.as_ref().expect("validated");
                oco.step(&(set.support_point(phi) - z))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InstanceModel, OutcomeKind};
    use alloc::vec;
    use nalgebra::{dmatrix, dvector};

    fn play(alg: &mut Algorithm) -> PolicyDistribution {
        match alg.decide().unwrap() {
            Decision::Play(p) => p,
            Decision::Stop => panic!("unexpected stop"),
        }
    }

    #[test]
    fn ucb_linear_one_dim_picks_highest_upper_bound() {
        let f = Objective::linear(dvector![1.0]);
        let cfg = AlgorithmConfig::new(Variant::UcbBwcr, 100, 0.05).with_objective(f);
        let mut alg = Algorithm::new(cfg, 1, 3).unwrap();
        for (arm, v) in [(0, 1.0), (0, 1.0), (1, 0.0), (2, 1.0), (2, 0.0), (1, 0.0)] {
            play(&mut alg);
            alg.observe(Some(arm), &dvector![v]).unwrap();
        }
        let ucb = alg.hypercube().ucb;
        let best = math::argmax(ucb.row(0).iter().copied()).unwrap();
        let p = play(&mut alg);
        assert_eq!(p, PolicyDistribution::point_mass(3, best));
    }

    #[test]
    fn knapsack_stops_once_budget_exceeded() {
        let cfg = AlgorithmConfig::new(Variant::UcbBwk, 10, 1.0).with_budget(1.5);
        let mut alg = Algorithm::new(cfg, 2, 2).unwrap();
        for _ in 0..2 {
            play(&mut alg);
            alg.observe(Some(0), &dvector![1.0, 1.0]).unwrap();
        }
        assert_eq!(alg.decide().unwrap(), Decision::Stop);
        assert!(alg.is_stopped());
        assert_eq!(alg.budget_spent()[1], 2.0);
    }

    #[test]
    fn knapsack_zero_budget_idles() {
        let cfg = AlgorithmConfig::new(Variant::UcbBwk, 10, 0.01).with_budget(5.0).with_eps(1.0).with_idle(true);
        let mut alg = Algorithm::new(cfg, 2, 2).unwrap();
        // Vacuous lower bounds are zero, so the LP is feasible at first.
        assert_eq!(play(&mut alg).weights().len(), 2);
        alg.observe(Some(0), &dvector![1.0, 1.0]).unwrap();
        alg.decide().unwrap();
        alg.observe(Some(1), &dvector![1.0, 1.0]).unwrap();
        let cube = alg.hypercube();
        assert!(cube.lcb.row(1).iter().all(|&v| v > 0.0));
        assert_eq!(play(&mut alg), PolicyDistribution::idle(2));
    }

    #[test]
    fn dual_drives_average_into_set() {
        let set = ConvexSet::halfspaces(dmatrix![1.0], dvector![0.5]).unwrap();
        let inst = InstanceModel::new(dmatrix![0.9, 0.3], OutcomeKind::Fixed).unwrap();
        let cfg = AlgorithmConfig::new(Variant::DualOco, 2000, 0.01).with_set(set.clone());
        let mut alg = Algorithm::new(cfg, 1, 2).unwrap();
        let mut rng = crate::rng::substream(1, crate::rng::Stream::Outcomes);
        let mut sum = 0.0;
        for _ in 0..2000 {
            let p = play(&mut alg);
            let arm = math::argmax(p.weights().iter().copied()).unwrap();
            let v = inst.sample_observation(arm, &mut rng).unwrap();
            sum += v[0];
            alg.observe(Some(arm), &v).unwrap();
        }
        assert!(alg.theta().unwrap()[0] > 0.0);
        assert_eq!(play(&mut alg), PolicyDistribution::point_mass(2, 1));
        assert!(sum / 2000.0 < 0.55);
    }

    #[test]
    fn frank_wolfe_linear_settles_on_one_arm() {
        let f = Objective::linear(dvector![1.0, 0.0]);
        let inst = InstanceModel::new(dmatrix![0.2, 0.8; 0.5, 0.5], OutcomeKind::Fixed).unwrap();
        let cfg = AlgorithmConfig::new(Variant::FwPrimal, 200, 1.0).with_objective(f);
        let rec = simulate(&inst, &cfg, 3).unwrap();
        let late = rec.history.arms[100..].iter().filter(|a| **a == Some(1)).count();
        assert!(late >= 90, "{late}");
    }

    #[test]
    fn approach_plays_uniform_inside_set() {
        let set = ConvexSet::cube(2);
        let cfg = AlgorithmConfig::new(Variant::FwBwc, 10, 1.0).with_set(set);
        let mut alg = Algorithm::new(cfg, 2, 3).unwrap();
        assert_eq!(play(&mut alg), PolicyDistribution::uniform(3));
    }

    #[test]
    fn approach_uses_lower_bounds_above_the_set() {
        let set = ConvexSet::halfspaces(dmatrix![1.0], dvector![0.5]).unwrap();
        let cfg = AlgorithmConfig::new(Variant::FwBwc, 10, 1.0).with_set(set);
        let mut alg = Algorithm::new(cfg, 1, 2).unwrap();
        // The initial point is the upper-bound estimate 1 > 0.5: the direction is positive,
        // so arms are scored by their lower bounds (all zero; lowest index wins).
        assert_eq!(play(&mut alg), PolicyDistribution::point_mass(2, 0));
        assert_eq!(alg.pending_estimate().unwrap()[0], 0.0);
        alg.observe(Some(0), &dvector![1.0]).unwrap();
        assert_eq!(play(&mut alg), PolicyDistribution::uniform(2));
    }

    #[test]
    fn combined_without_binding_constraint_is_point_mass() {
        let f = Objective::linear(dvector![1.0, 1.0]);
        let cfg = AlgorithmConfig::new(Variant::Combined, 10, 1.0)
            .with_objective(f)
            .with_set(ConvexSet::cube(2))
            .with_updates(UpdateRule::Primal, UpdateRule::Primal);
        let mut alg = Algorithm::new(cfg, 2, 3).unwrap();
        let p = play(&mut alg);
        assert_eq!(p.weights().iter().filter(|&&w| w > 0.0).count(), 1);
    }

    #[test]
    fn greedy_first_step_plays_best_upper_bound() {
        let cfg = AlgorithmConfig::new(Variant::GreedyBwk, 100, 1.0).with_budget(25.0);
        let mut alg = Algorithm::new(cfg, 2, 2).unwrap();
        // Zero prices make every arm free; ties go to the lowest index.
        assert_eq!(play(&mut alg).weights(), &dvector![1.0, 0.0]);
    }

    #[test]
    fn idle_step_leaves_counts() {
        let cfg = AlgorithmConfig::new(Variant::GreedyBwk, 10, 1.0).with_budget(5.0);
        let mut alg = Algorithm::new(cfg, 2, 2).unwrap();
        let before = alg.hypercube();
        play(&mut alg);
        alg.observe(None, &dvector![0.0, 0.0]).unwrap();
        assert_eq!(alg.hypercube(), before);
        assert_eq!(alg.steps(), 1);
    }

    #[test]
    fn running_average_matches_estimates() {
        let f = Objective::separable(vec![crate::objective::ScalarTerm::Quadratic { weight: 1.0, center: 0.5 }]).unwrap();
        let inst = InstanceModel::new(dmatrix![0.2, 0.9], OutcomeKind::Bernoulli).unwrap();
        let cfg = AlgorithmConfig::new(Variant::FwPrimal, 50, 0.5).with_objective(f);
        let rec = simulate(&inst, &cfg, 9).unwrap();
        let mean = rec.estimates.iter().fold(DVector::zeros(1), |acc, e| acc + e) / 50.0;
        assert!((mean - &rec.estimate_average).norm() < 1e-12);
    }

    #[test]
    fn knapsack_consumption_bounded() {
        let inst = InstanceModel::new(dmatrix![0.9, 0.5, 0.1; 0.8, 0.3, 0.05], OutcomeKind::Bernoulli).unwrap();
        for variant in [Variant::UcbBwk, Variant::GreedyBwk] {
            let cfg = AlgorithmConfig::new(variant, 400, 2.0).with_budget(40.0);
            for seed in 0..5 {
                let rec = simulate(&inst, &cfg, seed).unwrap();
                assert!(rec.budget_spent[1] <= 41.0);
                assert!(rec.history.stop_time <= 401);
            }
        }
    }
}
