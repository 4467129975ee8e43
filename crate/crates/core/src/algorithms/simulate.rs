use alloc::vec::Vec;
use nalgebra::DVector;

use super::{Algorithm, AlgorithmConfig, Decision};
use crate::error::Result;
use crate::model::{InstanceModel, RunHistory};
use crate::rng::{substream, Stream};

/// A finished run: the history plus the estimates `Ã_t p_t` behind each step.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub history: RunHistory,
    pub estimates: Vec<DVector<f64>>,
    /// `(1/T)·Σ_t Ã_t p_t` with the horizon normalization.
    pub estimate_average: DVector<f64>,
    pub budget_spent: DVector<f64>,
}

/// Runs one seeded simulation. Contextual instances use ellipsoid estimation.
pub fn simulate(instance: &InstanceModel, config: &AlgorithmConfig, seed: u64) -> Result<RunRecord> {
    simulate_with(instance, config, seed, |_, _| {})
}

/// Like [`simulate`], calling `after_step(t, &algorithm)` once step `t` has been observed.
pub fn simulate_with(
    instance: &InstanceModel,
    config: &AlgorithmConfig,
    seed: u64,
    mut after_step: impl FnMut(usize, &Algorithm),
) -> Result<RunRecord> {
    let mut alg = match instance.contextual_model() {
        Some(ctx) => Algorithm::contextual(config.clone(), ctx.contexts.clone())?,
        None => Algorithm::new(config.clone(), instance.dim(), instance.arms())?,
    };
    let mut outcomes = substream(seed, Stream::Outcomes);
    let mut draws = substream(seed, Stream::Arms);
    let horizon = config.horizon;
    let mut history = RunHistory { stop_time: horizon + 1, ..RunHistory::default() };
    let mut estimates = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let policy = match alg.decide()? {
            Decision::Stop => {
                history.stop_time = t;
                break;
            }
            Decision::Play(policy) => policy,
        };
        let estimate = alg.pending_estimate().cloned().unwrap_or_else(|| DVector::zeros(instance.dim()));
        let arm = policy.draw_arm(&mut draws);
        let v = match arm {
            Some(i) => instance.sample_observation(i, &mut outcomes)?,
            None => DVector::zeros(instance.dim()),
        };
        alg.observe(arm, &v)?;
        after_step(t, &alg);
        history.push(policy, arm, v);
        estimates.push(estimate);
    }
    let estimate_average = alg.estimate_sum() / horizon as f64;
    Ok(RunRecord { history, estimates, estimate_average, budget_spent: alg.budget_spent().clone() })
}
