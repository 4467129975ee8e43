//! Instance generators. Random generators resample until the target set is reachable
//! by some fixed policy, giving up after [`MAX_TRIES`] attempts.

use bwcr_core::benchmark::{compute_opt, knapsack_lp_value};
use bwcr_core::geometry::ConvexSet;
use bwcr_core::model::{ContextualModel, InstanceModel, OutcomeKind};
use bwcr_core::objective::Objective;
use bwcr_core::rng::{substream, SimRng, Stream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::config::{matrix_from_rows, InstanceKind, InstanceSpec};
use crate::error::{Result, SimError};

pub const MAX_TRIES: usize = 1000;

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: InstanceModel,
    /// Objective implied by the scenario, if any.
    pub objective: Option<Objective>,
    /// Target set implied by the scenario, if any.
    pub set: Option<ConvexSet>,
    /// Per-step budget implied by the scenario (knapsack instances).
    pub budget_ratio: Option<f64>,
}

impl Generated {
    fn plain(instance: InstanceModel) -> Self {
        Self { instance, objective: None, set: None, budget_ratio: None }
    }
}

/// Builds the instance described by `spec`. When `target` is given, random instances are
/// resampled until some fixed policy reaches it.
pub fn generate_instance(spec: &InstanceSpec, seed: u64, target: Option<&ConvexSet>) -> Result<Generated> {
    let outcome: OutcomeKind = spec.outcome.into();
    let mut rng = substream(seed, Stream::Generator);
    match &spec.kind {
        InstanceKind::Explicit { means } => {
            let means = matrix_from_rows(means, "instance.means")?;
            let instance = InstanceModel::new(means, outcome).map_err(|e| SimError::Config(e.to_string()))?;
            Ok(Generated::plain(instance))
        }
        InstanceKind::RandomBernoulli { d, m } => {
            check_sizes(&[(*d, "d"), (*m, "m")])?;
            retry(|| {
                let means = DMatrix::from_fn(*d, *m, |_, _| rng.random::<f64>());
                let inst = InstanceModel::new(means, outcome)?;
                Ok(reaches(&inst, target)?.then(|| Generated::plain(inst)))
            })
        }
        InstanceKind::Bwk { m, resources, budget_ratio } => {
            check_sizes(&[(*m, "m"), (*resources, "resources")])?;
            if !(*budget_ratio > 0.0 && *budget_ratio <= 1.0) {
                return Err(SimError::Config("budget_ratio must lie in (0, 1]".into()));
            }
            let d = resources + 1;
            let mut upper = DVector::from_element(d, *budget_ratio);
            upper[0] = 1.0;
            let set = ConvexSet::boxed(DVector::zeros(d), upper)?;
            let mut reward = DVector::zeros(d);
            reward[0] = 1.0;
            retry(|| {
                let means = DMatrix::from_fn(d, *m, |_, _| rng.random::<f64>());
                let inst = InstanceModel::new(means, outcome)?;
                // The horizon cancels in the per-step LP; any value works here.
                let ok = knapsack_lp_value(&inst, *budget_ratio, 1)?.is_some() && reaches(&inst, target)?;
                Ok(ok.then(|| Generated {
                    instance: inst,
                    objective: Some(Objective::linear(reward.clone())),
                    set: Some(set.clone()),
                    budget_ratio: Some(*budget_ratio),
                }))
            })
        }
        InstanceKind::SensorNetwork { sensors, points, quota, coverage, success, coverage_prob } => {
            sensor_network(&mut rng, outcome, *sensors, *points, *quota, coverage.as_deref(), success.as_deref(), *coverage_prob)
        }
        InstanceKind::Contextual { n, m, d } => {
            check_sizes(&[(*n, "n"), (*m, "m"), (*d, "d")])?;
            retry(|| {
                let model = random_contextual(&mut rng, *n, *m, *d);
                let inst = InstanceModel::contextual(model, outcome)?;
                Ok(reaches(&inst, target)?.then(|| Generated::plain(inst)))
            })
        }
    }
}

fn check_sizes(sizes: &[(usize, &str)]) -> Result<()> {
    match sizes.iter().find(|(v, _)| *v == 0) {
        Some((_, name)) => Err(SimError::Config(format!("instance parameter {name} must be positive"))),
        None => Ok(()),
    }
}

fn retry(mut attempt: impl FnMut() -> Result<Option<Generated>>) -> Result<Generated> {
    for _ in 0..MAX_TRIES {
        if let Some(g) = attempt()? {
            return Ok(g);
        }
    }
    Err(SimError::Generation(format!("no instance reached the target set in {MAX_TRIES} attempts")))
}

/// Whether some fixed policy has its mean observation in `target`.
fn reaches(inst: &InstanceModel, target: Option<&ConvexSet>) -> Result<bool> {
    match target {
        None => Ok(true),
        Some(s) => Ok(compute_opt(inst, None, Some(s))?.feasible),
    }
}

/// Weights uniform on the simplex and contexts uniform in the unit cube, so every mean
/// `x · w` lies in `[0, 1]`.
pub fn random_contextual(rng: &mut SimRng, n: usize, m: usize, d: usize) -> ContextualModel {
    let mut weights = DMatrix::zeros(n, d);
    for j in 0..d {
        let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        for k in 0..n {
            weights[(k, j)] = draws[k] / total;
        }
    }
    let contexts = (0..d).map(|_| DMatrix::from_fn(n, m, |_, _| rng.random::<f64>())).collect();
    ContextualModel { contexts, weights }
}

/// Success probabilities on the diagonal of the mean matrix; the target set asks every
/// point to collect at least `quota` successful readings per step in expectation:
/// `−Σ_{i covers k} x_i ≤ −quota` for each point `k`.
#[allow(clippy::too_many_arguments)]
fn sensor_network(
    rng: &mut SimRng,
    outcome: OutcomeKind,
    sensors: usize,
    points: usize,
    quota: f64,
    coverage: Option<&[Vec<usize>]>,
    success: Option<&[f64]>,
    coverage_prob: f64,
) -> Result<Generated> {
    check_sizes(&[(sensors, "sensors"), (points, "points")])?;
    if !(quota > 0.0 && quota <= 1.0) {
        return Err(SimError::Config("quota must lie in (0, 1]".into()));
    }
    if let Some(cov) = coverage {
        if cov.len() != sensors || cov.iter().flatten().any(|&k| k >= points) {
            return Err(SimError::Config("coverage must list valid points for every sensor".into()));
        }
    }
    if let Some(q) = success {
        if q.len() != sensors || q.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(SimError::Config("success must hold one probability per sensor".into()));
        }
    }
    let random = coverage.is_none() || success.is_none();
    let tries = if random { MAX_TRIES } else { 1 };
    for _ in 0..tries {
        let covers: Vec<Vec<bool>> = match coverage {
            Some(cov) => (0..sensors).map(|i| (0..points).map(|k| cov[i].contains(&k)).collect()).collect(),
            None => (0..sensors).map(|_| (0..points).map(|_| rng.random::<f64>() < coverage_prob).collect()).collect(),
        };
        let probs: Vec<f64> = match success {
            Some(q) => q.to_vec(),
            None => (0..sensors).map(|_| rng.random_range(0.5..=1.0)).collect(),
        };
        let means = DMatrix::from_diagonal(&DVector::from_vec(probs));
        let normals = DMatrix::from_fn(points, sensors, |k, i| if covers[i][k] { -1.0 } else { 0.0 });
        let offsets = DVector::from_element(points, -quota);
        let set = match ConvexSet::halfspaces(normals, offsets) {
            Ok(s) => s,
            Err(bwcr_core::Error::EmptySet) => continue,
            Err(e) => return Err(e.into()),
        };
        let instance = InstanceModel::new(means, outcome)?;
        if reaches(&instance, Some(&set))? {
            return Ok(Generated { instance, objective: None, set: Some(set), budget_ratio: None });
        }
    }
    Err(SimError::Generation(if random {
        format!("no sensor network met the quota in {MAX_TRIES} attempts")
    } else {
        "the given sensor network cannot meet the quota".into()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OutcomeSpec;

    fn spec(kind: InstanceKind) -> InstanceSpec {
        InstanceSpec { kind, outcome: OutcomeSpec::Bernoulli }
    }

    #[test]
    fn disjoint_sensors_give_identity() {
        let m = 4;
        let kind = InstanceKind::SensorNetwork {
            sensors: m,
            points: m,
            quota: 1.0 / m as f64,
            coverage: Some((0..m).map(|i| vec![i]).collect()),
            success: Some(vec![1.0; m]),
            coverage_prob: 0.3,
        };
        let g = generate_instance(&spec(kind), 0, None).unwrap();
        assert_eq!(g.instance.means(), &DMatrix::identity(m, m));
        let set = g.set.unwrap();
        let uniform = DVector::from_element(m, 1.0 / m as f64);
        assert!(set.contains(&uniform, 1e-12));
        assert!(!set.contains(&DVector::from_element(m, 0.2), 1e-12));
    }

    #[test]
    fn impossible_sensor_quota_is_a_generation_error() {
        let kind = InstanceKind::SensorNetwork {
            sensors: 2,
            points: 3,
            quota: 0.4,
            coverage: Some(vec![vec![0], vec![1]]),
            success: Some(vec![1.0, 1.0]),
            coverage_prob: 0.3,
        };
        let err = generate_instance(&spec(kind), 0, None).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn random_sensor_networks_are_feasible() {
        let kind = InstanceKind::SensorNetwork {
            sensors: 6,
            points: 20,
            quota: 0.1,
            coverage: None,
            success: None,
            coverage_prob: 0.3,
        };
        for seed in 0..5 {
            let g = generate_instance(&spec(kind.clone()), seed, None).unwrap();
            let b = compute_opt(&g.instance, None, g.set.as_ref()).unwrap();
            assert!(b.feasible);
        }
    }

    #[test]
    fn bwk_generator_emits_feasible_lp() {
        let kind = InstanceKind::Bwk { m: 4, resources: 2, budget_ratio: 0.2 };
        let g = generate_instance(&spec(kind), 3, None).unwrap();
        assert_eq!(g.instance.dim(), 3);
        assert!(knapsack_lp_value(&g.instance, 20.0, 100).unwrap().is_some());
        assert_eq!(g.budget_ratio, Some(0.2));
    }

    #[test]
    fn orthonormal_contexts_reproduce_weights() {
        let weights = DMatrix::from_row_slice(2, 1, &[0.3, 0.7]);
        let model = ContextualModel { contexts: vec![DMatrix::identity(2, 2)], weights };
        let inst = InstanceModel::contextual(model, OutcomeKind::Fixed).unwrap();
        assert_eq!(inst.means(), &DMatrix::from_row_slice(1, 2, &[0.3, 0.7]));
    }

    #[test]
    fn random_contextual_means_are_in_range() {
        let kind = InstanceKind::Contextual { n: 3, m: 10, d: 2 };
        let g = generate_instance(&spec(kind), 9, None).unwrap();
        assert_eq!(g.instance.means().shape(), (2, 10));
        assert!(g.instance.contextual_model().is_some());
    }

    #[test]
    fn unreachable_target_exhausts_retries() {
        let kind = InstanceKind::RandomBernoulli { d: 1, m: 2 };
        // Means are drawn below one, so the point 1 is never reached.
        let target = ConvexSet::boxed(DVector::from_element(1, 1.0), DVector::from_element(1, 1.0)).unwrap();
        let err = generate_instance(&spec(kind), 0, Some(&target)).unwrap_err();
        assert!(matches!(err, SimError::Generation(_)));
    }

    #[test]
    fn generation_is_seeded() {
        let kind = InstanceKind::RandomBernoulli { d: 3, m: 5 };
        let a = generate_instance(&spec(kind.clone()), 4, None).unwrap();
        let b = generate_instance(&spec(kind.clone()), 4, None).unwrap();
        let c = generate_instance(&spec(kind), 5, None).unwrap();
        assert_eq!(a.instance, b.instance);
        assert_ne!(a.instance, c.instance);
    }
}
