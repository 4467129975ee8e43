//! Ground-truth instances, policies over arms and the record of a run.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{check_len, invalid, Error, Result};

/// Per-entry distribution of an observation given its mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum OutcomeKind {
    #[default]
    Bernoulli,
    /// Observations equal the mean; useful for deterministic checks.
    Fixed,
    /// `Beta(κ·μ, κ·(1−μ))`, which has mean `μ` and variance `μ(1−μ)/(κ+1)`.
    ScaledBeta { concentration: f64 },
}

/// Linear contextual structure: entry `(j, i)` of the mean matrix is `contexts[j][i] · weights[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualModel {
    /// One `n × m` matrix per component; column `i` is the context of arm `i`.
    pub contexts: Vec<DMatrix<f64>>,
    /// `n × d`; column `j` is the weight vector of component `j`.
    pub weights: DMatrix<f64>,
}

impl ContextualModel {
    pub fn context_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn context(&self, component: usize, arm: usize) -> DVector<f64> {
        self.contexts[component].column(arm).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceModel {
    means: DMatrix<f64>,
    outcome: OutcomeKind,
    contextual: Option<ContextualModel>,
}

const CONTEXT_TOL: f64 = 1e-12;

impl InstanceModel {
    /// `means` is `d × m` with entries in `[0, 1]`.
    pub fn new(means: DMatrix<f64>, outcome: OutcomeKind) -> Result<Self> {
        if means.nrows() == 0 || means.ncols() == 0 {
            return Err(invalid("mean matrix must have at least one row and one column"));
        }
        if means.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("mean matrix entries must lie in [0, 1]"));
        }
        if let OutcomeKind::ScaledBeta { concentration } = outcome {
            if !(concentration > 0.0 && concentration.is_finite()) {
                return Err(invalid("beta concentration must be positive"));
            }
        }
        Ok(Self { means, outcome, contextual: None })
    }

    /// Builds the mean matrix from contexts and weights.
    pub fn contextual(model: ContextualModel, outcome: OutcomeKind) -> Result<Self> {
        let d = model.weights.ncols();
        let n = model.weights.nrows();
        check_len(d, model.contexts.len())?;
        let m = model.contexts.first().map_or(0, |c| c.ncols());
        let mut means = DMatrix::zeros(d, m);
        for (j, ctx) in model.contexts.iter().enumerate() {
            check_len(n, ctx.nrows())?;
            check_len(m, ctx.ncols())?;
            if ctx.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(invalid("contexts must lie in [0, 1]^n"));
            }
            for i in 0..m {
                let v = ctx.column(i).dot(&model.weights.column(j));
                if !(-CONTEXT_TOL..=1.0 + CONTEXT_TOL).contains(&v) {
                    return Err(invalid("context · weight must lie in [0, 1]"));
                }
                means[(j, i)] = v.clamp(0.0, 1.0);
            }
        }
        let mut inst = Self::new(means, outcome)?;
        inst.contextual = Some(model);
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        self.means.nrows()
    }

    pub fn arms(&self) -> usize {
        self.means.ncols()
    }

    pub fn means(&self) -> &DMatrix<f64> {
        &self.means
    }

    pub fn outcome(&self) -> OutcomeKind {
        self.outcome
    }

    pub fn contextual_model(&self) -> Option<&ContextualModel> {
        self.contextual.as_ref()
    }

    /// Expected observation `V p` under a policy (idle mass contributes zero).
    pub fn mean_outcome(&self, policy: &PolicyDistribution) -> DVector<f64> {
        &self.means * policy.weights()
    }

    pub fn sample_observation<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<DVector<f64>> {
        if arm >= self.arms() {
            return Err(Error::ArmOutOfRange { arm, arms: self.arms() });
        }
        let col = self.means.column(arm);
        let mut out = DVector::zeros(self.dim());
        for (j, &mean) in col.iter().enumerate() {
            out[j] = match self.outcome {
                OutcomeKind::Fixed => mean,
                OutcomeKind::Bernoulli => {
                    if rng.random::<f64>() < mean {
                        1.0
                    } else {
                        0.0
                    }
                }
                OutcomeKind::ScaledBeta { concentration } => {
                    if mean <= 0.0 || mean >= 1.0 {
                        mean
                    } else {
                        // Parameters are positive and finite here, so construction cannot fail.
                        let beta = Beta::new(concentration * mean, concentration * (1.0 - mean))
                            .map_err(|_| invalid("beta parameters"))?;
                        beta.sample(rng)
                    }
                }
            };
        }
        Ok(out)
    }
}

const POLICY_TOL: f64 = 1e-9;

/// A distribution over arms, optionally leaving some mass on "play nothing".
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    weights: DVector<f64>,
    allow_idle: bool,
}

impl PolicyDistribution {
    pub fn new(weights: DVector<f64>, allow_idle: bool) -> Result<Self> {
        if weights.iter().any(|p| !p.is_finite() || *p < -POLICY_TOL) {
            return Err(invalid("policy weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        let ok = if allow_idle { total <= 1.0 + POLICY_TOL } else { (total - 1.0).abs() <= POLICY_TOL };
        if !ok {
            return Err(invalid("policy weights must sum to one (or at most one when idling is allowed)"));
        }
        let weights = weights.map(|p| p.max(0.0));
        Ok(Self { weights, allow_idle })
    }

    /// Cleans up solver output: clips negatives and rescales onto the simplex
    /// (or caps the mass at one when idling is allowed).
    pub fn from_raw(raw: DVector<f64>, allow_idle: bool) -> Result<Self> {
        let clipped = raw.map(|p| if p.is_finite() { p.max(0.0) } else { 0.0 });
        let total: f64 = clipped.iter().sum();
        let weights = if allow_idle && total <= 1.0 {
            clipped
        } else if total > 0.0 {
            clipped / total
        } else {
            return Err(invalid("policy has no mass"));
        };
        Self::new(weights, allow_idle)
    }

    pub fn uniform(arms: usize) -> Self {
        Self { weights: DVector::from_element(arms, 1.0 / arms as f64), allow_idle: false }
    }

    pub fn point_mass(arms: usize, arm: usize) -> Self {
        let mut weights = DVector::zeros(arms);
        weights[arm] = 1.0;
        Self { weights, allow_idle: false }
    }

    pub fn idle(arms: usize) -> Self {
        Self { weights: DVector::zeros(arms), allow_idle: true }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn allow_idle(&self) -> bool {
        self.allow_idle
    }

    pub fn arms(&self) -> usize {
        self.weights.len()
    }

    /// Samples an arm; `None` means idle.
    pub fn draw_arm<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = None;
        for (i, &p) in self.weights.iter().enumerate() {
            if p > 0.0 {
                last_positive = Some(i);
                acc += p;
                if u < acc {
                    return Some(i);
                }
            }
        }
        if self.allow_idle {
            None
        } else {
            // Only reachable through rounding when the weights sum to just below one.
            last_positive
        }
    }
}

/// Everything observed during one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunHistory {
    pub observations: Vec<DVector<f64>>,
    pub arms: Vec<Option<usize>>,
    pub policies: Vec<PolicyDistribution>,
    /// First step at which the run stopped (BwK), or `T + 1` if it never did.
    pub stop_time: usize,
}

impl RunHistory {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn push(&mut self, policy: PolicyDistribution, arm: Option<usize>, observation: DVector<f64>) {
        self.policies.push(policy);
        self.arms.push(arm);
        self.observations.push(observation);
    }

    /// Sum of the observations over the first `steps` steps.
    pub fn observation_sum(&self, steps: usize) -> Option<DVector<f64>> {
        let mut iter = self.observations.iter().take(steps);
        let first = iter.next()?.clone();
        Some(iter.fold(first, |acc, v| acc + v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use nalgebra::dmatrix;
    use nalgebra::dvector;

    #[test]
    fn fixed_kind_returns_mean() {
        let inst = InstanceModel::new(dmatrix![0.1, 0.3; 0.2, 0.7], OutcomeKind::Fixed).unwrap();
        let mut rng = substream(1, Stream::Outcomes);
        assert_eq!(inst.sample_observation(1, &mut rng).unwrap(), dvector![0.3, 0.7]);
    }

    #[test]
    fn degenerate_bernoulli() {
        let inst = InstanceModel::new(dmatrix![1.0, 0.0], OutcomeKind::Bernoulli).unwrap();
        let mut rng = substream(2, Stream::Outcomes);
        for _ in 0..1000 {
            assert_eq!(inst.sample_observation(0, &mut rng).unwrap()[0], 1.0);
            assert_eq!(inst.sample_observation(1, &mut rng).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn bernoulli_sample_mean() {
        let inst = InstanceModel::new(dmatrix![0.25], OutcomeKind::Bernoulli).unwrap();
        let mut rng = substream(3, Stream::Outcomes);
        let n = 100_000;
        let total: f64 = (0..n).map(|_| inst.sample_observation(0, &mut rng).unwrap()[0]).sum();
        assert!((total / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn scaled_beta_sample_mean() {
        let inst =
            InstanceModel::new(dmatrix![0.4], OutcomeKind::ScaledBeta { concentration: 5.0 }).unwrap();
        let mut rng = substream(4, Stream::Outcomes);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| inst.sample_observation(0, &mut rng).unwrap()[0]).collect();
        assert!(draws.iter().all(|v| (0.0..=1.0).contains(v)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.4).abs() < 0.01);
    }

    #[test]
    fn arm_out_of_range() {
        let inst = InstanceModel::new(dmatrix![0.5, 0.5], OutcomeKind::Fixed).unwrap();
        let mut rng = substream(1, Stream::Outcomes);
        assert_eq!(
            inst.sample_observation(2, &mut rng),
            Err(Error::ArmOutOfRange { arm: 2, arms: 2 })
        );
    }

    #[test]
    fn rejects_out_of_range_means() {
        assert!(InstanceModel::new(dmatrix![1.5], OutcomeKind::Fixed).is_err());
    }

    #[test]
    fn point_mass_and_idle() {
        let mut rng = substream(5, Stream::Arms);
        let p = PolicyDistribution::new(dvector![1.0, 0.0, 0.0], false).unwrap();
        let idle = PolicyDistribution::new(dvector![0.0, 0.0], true).unwrap();
        for _ in 0..1000 {
            assert_eq!(p.draw_arm(&mut rng), Some(0));
            assert_eq!(idle.draw_arm(&mut rng), None);
        }
    }

    #[test]
    fn draw_frequencies() {
        let mut rng = substream(6, Stream::Arms);
        let p = PolicyDistribution::new(dvector![0.5, 0.5], false).unwrap();
        let n = 100_000;
        let zeros = (0..n).filter(|_| p.draw_arm(&mut rng) == Some(0)).count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn policy_validation() {
        assert!(PolicyDistribution::new(dvector![0.5, 0.4], false).is_err());
        assert!(PolicyDistribution::new(dvector![0.5, 0.4], true).is_ok());
        assert!(PolicyDistribution::new(dvector![-0.1, 1.1], false).is_err());
        assert!(PolicyDistribution::new(dvector![0.7, 0.7], true).is_err());
    }

    #[test]
    fn contextual_means() {
        let contexts = alloc::vec![DMatrix::identity(2, 2)];
        let model = ContextualModel { contexts, weights: dmatrix![0.3; 0.6] };
        let inst = InstanceModel::contextual(model, OutcomeKind::Fixed).unwrap();
        assert_eq!(inst.means(), &dmatrix![0.3, 0.6]);
    }
}
