//! JSON experiment documents and their conversion into core types.

use std::path::{Path, PathBuf};

use bwcr_core::algorithms::{AlgorithmConfig, UpdateRule, Variant};
use bwcr_core::confidence::default_gamma;
use bwcr_core::geometry::{ConvexSet, Norm};
use bwcr_core::model::OutcomeKind;
use bwcr_core::objective::{Objective, ScalarTerm};
use bwcr_core::solvers::OcoKind;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default)]
    pub set: Option<SetSpec>,
    pub algorithm: AlgorithmSpec,
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Seed of the instance generator (ignored for explicit instances).
    #[serde(default)]
    pub generator_seed: u64,
    /// Output directory for traces and the summary.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    #[serde(flatten)]
    pub kind: InstanceKind,
    #[serde(default)]
    pub outcome: OutcomeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceKind {
    /// Mean matrix given row by row (one row per component).
    Explicit { means: Vec<Vec<f64>> },
    RandomBernoulli { d: usize, m: usize },
    /// Reward in component 0 and `resources` consumption components; emits a linear
    /// objective on the reward and the box `{x : x_k ≤ budget_ratio}` on resources.
    Bwk { m: usize, resources: usize, budget_ratio: f64 },
    /// Sensors covering points; a reading succeeds with the sensor's probability and every
    /// point needs `quota` successful readings per step on average.
    SensorNetwork {
        sensors: usize,
        points: usize,
        quota: f64,
        /// `coverage[i]` lists the points seen by sensor `i`; random when absent.
        #[serde(default)]
        coverage: Option<Vec<Vec<usize>>>,
        /// Success probabilities; random in `[0.5, 1]` when absent.
        #[serde(default)]
        success: Option<Vec<f64>>,
        #[serde(default = "default_coverage_prob")]
        coverage_prob: f64,
    },
    /// `n`-dimensional contexts for `m` arms and `d` components.
    Contextual { n: usize, m: usize, d: usize },
}

fn default_coverage_prob() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeSpec {
    #[default]
    Bernoulli,
    Fixed,
    ScaledBeta { concentration: f64 },
}

impl From<OutcomeSpec> for OutcomeKind {
    fn from(spec: OutcomeSpec) -> Self {
        match spec {
            OutcomeSpec::Bernoulli => OutcomeKind::Bernoulli,
            OutcomeSpec::Fixed => OutcomeKind::Fixed,
            OutcomeSpec::ScaledBeta { concentration } => OutcomeKind::ScaledBeta { concentration },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Linear { coefficients: Vec<f64> },
    /// Negated distance to the configured set.
    NegDistance {
        #[serde(default)]
        norm: NormSpec,
    },
    Separable { terms: Vec<TermSpec> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    Linear { weight: f64 },
    Sqrt { weight: f64 },
    Log1p { weight: f64 },
    Quadratic { weight: f64, center: f64 },
}

impl From<TermSpec> for ScalarTerm {
    fn from(t: TermSpec) -> Self {
        match t {
            TermSpec::Linear { weight } => ScalarTerm::Linear { weight },
            TermSpec::Sqrt { weight } => ScalarTerm::Sqrt { weight },
            TermSpec::Log1p { weight } => ScalarTerm::Log1p { weight },
            TermSpec::Quadratic { weight, center } => ScalarTerm::Quadratic { weight, center },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{x in [lower, upper] : normals · x ≤ offsets}`; the box defaults to the unit cube.
    Halfspaces {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        #[serde(default)]
        lower: Option<Vec<f64>>,
        #[serde(default)]
        upper: Option<Vec<f64>>,
        #[serde(default)]
        downward_closed: Option<bool>,
    },
    /// Convex hull of the listed points.
    Vertices { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    #[default]
    L2,
    Linf,
    L1,
}

impl From<NormSpec> for Norm {
    fn from(n: NormSpec) -> Self {
        match n {
            NormSpec::L2 => Norm::L2,
            NormSpec::Linf => Norm::LInf,
            NormSpec::L1 => Norm::L1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    UcbBwcr,
    UcbBwk,
    DualOco,
    FwPrimal,
    FwBwc,
    Combined,
    GreedyBwk,
}

impl From<VariantSpec> for Variant {
    fn from(v: VariantSpec) -> Self {
        match v {
            VariantSpec::UcbBwcr => Variant::UcbBwcr,
            VariantSpec::UcbBwk => Variant::UcbBwk,
            VariantSpec::DualOco => Variant::DualOco,
            VariantSpec::FwPrimal => Variant::FwPrimal,
            VariantSpec::FwBwc => Variant::FwBwc,
            VariantSpec::Combined => Variant::Combined,
            VariantSpec::GreedyBwk => Variant::GreedyBwk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcoSpec {
    #[default]
    Ogd,
    Entropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateSpec {
    #[default]
    Dual,
    Primal,
    PrimalSmoothed,
}

impl From<UpdateSpec> for UpdateRule {
    fn from(u: UpdateSpec) -> Self {
        match u {
            UpdateSpec::Dual => UpdateRule::Dual,
            UpdateSpec::Primal => UpdateRule::Primal,
            UpdateSpec::PrimalSmoothed => UpdateRule::PrimalSmoothed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub variant: VariantSpec,
    /// Absolute budget per resource.
    #[serde(default)]
    pub budget: Option<f64>,
    /// Budget as a fraction of the horizon; used when `budget` is absent.
    #[serde(default)]
    pub budget_ratio: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    /// Confidence parameter; defaults to `ln(m·T·d/δ)`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub norm: NormSpec,
    #[serde(default)]
    pub oco: OcoSpec,
    #[serde(default)]
    pub theta_update: UpdateSpec,
    #[serde(default)]
    pub phi_update: UpdateSpec,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub allow_idle: Option<bool>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(SimError::io(path))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|source| SimError::Json { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(SimError::Config("horizons must be a nonempty list of positive integers".into()));
        }
        if self.seeds.is_empty() {
            return Err(SimError::Config("seeds must be nonempty".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SimError::Config("delta must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(SimError::Config(format!("{what} must be a nonempty rectangular list of rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn vector(values: &[f64], dim: usize, what: &str) -> Result<DVector<f64>> {
    if values.len() != dim {
        return Err(SimError::Config(format!("{what} has length {}, expected {dim}", values.len())));
    }
    Ok(DVector::from_column_slice(values))
}

impl SetSpec {
    pub fn build(&self) -> Result<ConvexSet> {
        match self {
            SetSpec::Box { lower, upper } => {
                let d = lower.len();
                ConvexSet::boxed(vector(lower, d, "set.lower")?, vector(upper, d, "set.upper")?).map_err(config_err)
            }
            SetSpec::Halfspaces { normals, offsets, lower, upper, downward_closed } => {
                let a = matrix_from_rows(normals, "set.normals")?;
                let d = a.ncols();
                let b = vector(offsets, a.nrows(), "set.offsets")?;
                let lo = match lower {
                    Some(l) => vector(l, d, "set.lower")?,
                    None => DVector::zeros(d),
                };
                let hi = match upper {
                    Some(u) => vector(u, d, "set.upper")?,
                    None => DVector::from_element(d, 1.0),
                };
                let set = ConvexSet::halfspaces_in_box(a, b, lo, hi).map_err(config_err)?;
                Ok(match downward_closed {
                    Some(flag) => set.with_downward_closed(*flag),
                    None => set,
                })
            }
            SetSpec::Vertices { points } => {
                let cols = matrix_from_rows(points, "set.points")?;
                ConvexSet::polytope(cols.transpose()).map_err(config_err)
            }
        }
    }
}

impl ObjectiveSpec {
    pub fn build(&self, set: Option<&ConvexSet>) -> Result<Objective> {
        match self {
            ObjectiveSpec::Linear { coefficients } => Ok(Objective::linear(DVector::from_column_slice(coefficients))),
            ObjectiveSpec::NegDistance { norm } => {
                let set = set.ok_or_else(|| SimError::Config("neg_distance objective needs a set".into()))?;
                Ok(Objective::neg_distance(set.clone(), (*norm).into()))
            }
            ObjectiveSpec::Separable { terms } => {
                Objective::separable(terms.iter().map(|&t| t.into()).collect()).map_err(config_err)
            }
        }
    }
}

impl AlgorithmSpec {
    /// Builds the core configuration for horizon `horizon` on an instance with `arms` arms
    /// and `dim` components. `budget_ratio` is a fallback supplied by the instance generator.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        &self,
        horizon: usize,
        arms: usize,
        dim: usize,
        delta: f64,
        objective: Option<Objective>,
        set: Option<ConvexSet>,
        budget_ratio: Option<f64>,
    ) -> Result<AlgorithmConfig> {
        let variant: Variant = self.variant.into();
        let gamma = self.gamma.unwrap_or_else(|| default_gamma(arms, horizon, dim, delta));
        let mut cfg = AlgorithmConfig::new(variant, horizon, gamma).with_norm(self.norm.into());
        cfg = cfg.with_updates(self.theta_update.into(), self.phi_update.into());
        cfg = cfg.with_oco(match self.oco {
            OcoSpec::Ogd => OcoKind::Ogd,
            OcoSpec::Entropic => OcoKind::Entropic,
        });
        if variant.is_knapsack() {
            let budget = self.budget.or_else(|| self.budget_ratio.or(budget_ratio).map(|r| r * horizon as f64));
            if let Some(b) = budget {
                cfg = cfg.with_budget(b);
            }
        } else {
            if let Some(f) = objective {
                cfg = cfg.with_objective(f);
            }
            if let Some(s) = set {
                cfg = cfg.with_set(s);
            }
        }
        if let Some(eps) = self.eps {
            cfg = cfg.with_eps(eps);
        }
        if let Some(sigma) = self.sigma {
            cfg = cfg.with_sigma(sigma);
        }
        if let Some(idle) = self.allow_idle {
            cfg = cfg.with_idle(idle);
        }
        cfg.validate(dim, arms).map_err(config_err)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "instance": {"kind": "explicit", "means": [[0.9, 0.1], [0.2, 0.8]], "outcome": "fixed"},
        "objective": {"kind": "separable", "terms": [{"kind": "log1p", "weight": 1.0}, {"kind": "linear", "weight": 0.5}]},
        "set": {"kind": "halfspaces", "normals": [[0.0, 1.0]], "offsets": [0.6]},
        "algorithm": {"variant": "ucb_bwcr"},
        "horizons": [100],
        "seeds": [1, 2]
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.delta, 0.05);
        assert_eq!(cfg.instance.outcome, OutcomeSpec::Fixed);
        let set = cfg.set.as_ref().unwrap().build().unwrap();
        let f = cfg.objective.as_ref().unwrap().build(Some(&set)).unwrap();
        let alg = cfg.algorithm.build(100, 2, 2, cfg.delta, Some(f), Some(set), None).unwrap();
        assert_eq!(alg.variant, Variant::UcbBwcr);
        assert!((alg.gamma - (2.0f64 * 100.0 * 2.0 / 0.05).ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(ExperimentConfig::from_json("{}").is_err());
        let no_seeds = SAMPLE.replace("[1, 2]", "[]");
        assert!(matches!(ExperimentConfig::from_json(&no_seeds), Err(SimError::Config(_))));
        let bad_delta = SAMPLE.replace("\"seeds\"", "\"delta\": 1.5, \"seeds\"");
        assert!(ExperimentConfig::from_json(&bad_delta).is_err());
    }

    #[test]
    fn variant_requirements_surface_as_config_errors() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        let mut spec = cfg.algorithm.clone();
        spec.variant = VariantSpec::UcbBwk;
        let err = spec.build(100, 2, 2, 0.05, None, None, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn budget_ratio_scales_with_horizon() {
        let spec = AlgorithmSpec { budget_ratio: Some(0.25), ..serde_json::from_str(r#"{"variant": "ucb_bwk"}"#).unwrap() };
        let cfg = spec.build(400, 3, 2, 0.05, None, None, None).unwrap();
        assert_eq!(cfg.budget, Some(100.0));
    }
}
