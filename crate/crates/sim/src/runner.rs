//! Runs an experiment: one trace file per (horizon, seed) plus a JSON summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bwcr_core::algorithms::{simulate, AlgorithmConfig, RunRecord, Variant};
use bwcr_core::benchmark::{
    compute_opt, decompose_regret, knapsack_lp_value, knapsack_regret, regret_trace, BenchmarkResult,
    RegretTrace,
};
use bwcr_core::geometry::{ConvexSet, Norm};
use bwcr_core::model::InstanceModel;
use bwcr_core::objective::Objective;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::generate::{generate_instance, Generated};
use crate::stats::Quantiles;

/// Instance, objective and set after generation, shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub instance: InstanceModel,
    pub objective: Option<Objective>,
    pub set: Option<ConvexSet>,
    pub budget_ratio: Option<f64>,
}

impl Resolved {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let configured_set = cfg.set.as_ref().map(|s| s.build()).transpose()?;
        let Generated { instance, objective, set, budget_ratio } =
            generate_instance(&cfg.instance, cfg.generator_seed, configured_set.as_ref())?;
        let set = configured_set.or(set);
        let objective = match &cfg.objective {
            Some(spec) => Some(spec.build(set.as_ref())?),
            None => objective,
        };
        if let Some(f) = &objective {
            if f.dim() != instance.dim() {
                return Err(SimError::Config(format!(
                    "objective dimension {} does not match the instance dimension {}",
                    f.dim(),
                    instance.dim()
                )));
            }
        }
        if let Some(s) = &set {
            if s.dim() != instance.dim() {
                return Err(SimError::Config(format!(
                    "set dimension {} does not match the instance dimension {}",
                    s.dim(),
                    instance.dim()
                )));
            }
        }
        Ok(Self { instance, objective, set, budget_ratio })
    }

    pub fn algorithm(&self, cfg: &ExperimentConfig, horizon: usize) -> Result<AlgorithmConfig> {
        cfg.algorithm.build(
            horizon,
            self.instance.arms(),
            self.instance.dim(),
            cfg.delta,
            self.objective.clone(),
            self.set.clone(),
            self.budget_ratio,
        )
    }

    pub fn benchmark(&self) -> Result<Option<BenchmarkResult>> {
        if self.objective.is_none() && self.set.is_none() {
            return Ok(None);
        }
        Ok(Some(compute_opt(&self.instance, self.objective.as_ref(), self.set.as_ref())?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub feasible: bool,
    pub opt_value: Option<f64>,
    pub p_star: Option<Vec<f64>>,
    pub point: Option<Vec<f64>>,
}

impl From<&BenchmarkResult> for BenchmarkSummary {
    fn from(b: &BenchmarkResult) -> Self {
        Self {
            feasible: b.feasible,
            opt_value: b.opt_value,
            p_star: b.p_star.as_ref().map(|p| p.weights().iter().copied().collect()),
            point: b.point.as_ref().map(|x| x.iter().copied().collect()),
        }
    }
}

/// The two terms that bound the objective regret of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub areg1: f64,
    pub optimization: f64,
    pub estimation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: usize,
    pub seed: u64,
    /// First step at which the run stopped, or `horizon + 1`.
    pub stop_time: usize,
    pub steps: usize,
    pub areg1: Option<f64>,
    pub areg2: Option<f64>,
    pub total_reward: Option<f64>,
    /// `T · LP − Σ r_t` for knapsack variants.
    pub knapsack_regret: Option<f64>,
    pub decomposition: Option<DecompositionSummary>,
    pub budget_spent: Vec<f64>,
    pub trace: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub horizon: usize,
    pub runs: usize,
    pub areg1: Option<Quantiles>,
    pub areg2: Option<Quantiles>,
    /// Knapsack regret divided by the horizon.
    pub knapsack_regret_per_step: Option<Quantiles>,
    pub knapsack_lp_value: Option<f64>,
    pub early_stop_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub variant: String,
    pub benchmark: Option<BenchmarkSummary>,
    pub horizons: Vec<HorizonSummary>,
    pub runs: Vec<RunSummary>,
    pub wall_clock_seconds: f64,
}

pub const SUMMARY_FILE: &str = "summary.json";

pub fn trace_file_name(horizon: usize, seed: u64) -> String {
    format!("trace_T{horizon}_seed{seed}.csv")
}

/// Runs every (horizon, seed) pair, writing traces and `summary.json` into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentSummary> {
    let start = Instant::now();
    cfg.validate()?;
    let resolved = Resolved::from_config(cfg)?;
    fs::create_dir_all(out).map_err(SimError::io(out))?;
    let bench = resolved.benchmark()?;
    if let Some(b) = &bench {
        log::debug!("benchmark feasible={} value={:?}", b.feasible, b.opt_value);
    }
    let norm = Norm::from(cfg.algorithm.norm);
    let mut runs = Vec::new();
    let mut horizons = Vec::new();
    for &horizon in &cfg.horizons {
        let alg = resolved.algorithm(cfg, horizon)?;
        let lp_value = match alg.budget {
            Some(b) if alg.variant.is_knapsack() => knapsack_lp_value(&resolved.instance, b, horizon)?.map(|(_, v)| v),
            _ => None,
        };
        let ctx = RunContext { resolved: &resolved, alg: &alg, bench: bench.as_ref(), lp_value, norm };
        let batch: Vec<RunSummary> =
            cfg.seeds.par_iter().map(|&seed| ctx.run(seed, out)).collect::<Result<Vec<_>>>()?;
        let h = summarize(horizon, &batch, lp_value);
        log::info!("T={horizon}: {} runs, early stops {:.3}", h.runs, h.early_stop_fraction);
        horizons.push(h);
        runs.extend(batch);
    }
    let summary = ExperimentSummary {
        variant: Variant::from(cfg.algorithm.variant).name().to_string(),
        benchmark: bench.as_ref().map(BenchmarkSummary::from),
        horizons,
        runs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let path = out.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).map_err(|source| SimError::Json { path: path.clone(), source })?;
    fs::write(&path, text + "\n").map_err(SimError::io(&path))?;
    Ok(summary)
}

struct RunContext<'a> {
    resolved: &'a Resolved,
    alg: &'a AlgorithmConfig,
    bench: Option<&'a BenchmarkResult>,
    lp_value: Option<f64>,
    norm: Norm,
}

impl RunContext<'_> {
    fn run(&self, seed: u64, out: &Path) -> Result<RunSummary> {
        let horizon = self.alg.horizon;
        let rec = simulate(&self.resolved.instance, self.alg, seed)?;
        let path = out.join(trace_file_name(horizon, seed));
        let mut summary = RunSummary {
            horizon,
            seed,
            stop_time: rec.history.stop_time,
            steps: rec.history.len(),
            areg1: None,
            areg2: None,
            total_reward: None,
            knapsack_regret: None,
            decomposition: None,
            budget_spent: rec.budget_spent.iter().copied().collect(),
            trace: path.clone(),
        };
        let f = self.resolved.objective.as_ref();
        let s = self.resolved.set.as_ref();
        let trace = match self.bench {
            Some(b) if !rec.history.is_empty() => Some(regret_trace(&rec.history, b, f, s, self.norm)?),
            _ => None,
        };
        if let Some(t) = &trace {
            summary.areg1 = t.final_areg1();
            summary.areg2 = t.final_areg2();
        }
        if self.alg.variant.is_knapsack() {
            let k = knapsack_regret(&rec.history, self.lp_value.unwrap_or(0.0), horizon);
            summary.total_reward = Some(k.total_reward);
            summary.knapsack_regret = self.lp_value.map(|_| k.regret);
        }
        let complete = rec.history.len() == horizon;
        if let (Some(f), Some(opt), true) = (f, self.bench.and_then(|b| b.opt_value), complete) {
            summary.decomposition = Some(decomposition(&rec, f, opt, self.norm, horizon));
        }
        write_trace(&path, &rec, trace.as_ref(), horizon, self.alg.variant.is_knapsack())?;
        Ok(summary)
    }
}

fn decomposition(rec: &RunRecord, f: &Objective, opt: f64, norm: Norm, horizon: usize) -> DecompositionSummary {
    let mean = rec.history.observation_sum(horizon).expect("nonempty") / horizon as f64;
    let d = decompose_regret(opt, f, norm, &rec.estimate_average, &mean);
    DecompositionSummary { areg1: d.areg1, optimization: d.optimization, estimation: d.estimation }
}

/// Seventeen significant digits: enough to round-trip every `f64`.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_trace(
    path: &Path,
    rec: &RunRecord,
    trace: Option<&RegretTrace>,
    horizon: usize,
    knapsack: bool,
) -> Result<()> {
    let csv_err = |source| SimError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(csv_err)?;
    let d = rec.history.observations.first().map_or(0, |v| v.len());
    let mut header = vec!["t".to_string(), "arm".to_string()];
    header.extend((1..=d).map(|j| format!("v_{j}")));
    header.extend(["areg1".to_string(), "areg2".to_string()]);
    if knapsack {
        header.push("reward_bwk".to_string());
    }
    header.push("stopped".to_string());
    w.write_record(&header).map_err(csv_err)?;
    let n = rec.history.len();
    // The last row carries the flag when the run ended before its horizon.
    let stopped = rec.history.stop_time <= horizon;
    let mut reward = 0.0;
    for (k, v) in rec.history.observations.iter().enumerate() {
        let mut row = vec![(k + 1).to_string(), rec.history.arms[k].map_or(String::new(), |a| a.to_string())];
        row.extend(v.iter().map(|&x| fmt_float(x)));
        let pick = |series: Option<&Vec<f64>>| series.and_then(|s| s.get(k)).map_or(String::new(), |&x| fmt_float(x));
        row.push(pick(trace.map(|t| &t.areg1)));
        row.push(pick(trace.map(|t| &t.areg2)));
        if knapsack {
            reward += v[0];
            row.push(fmt_float(reward));
        }
        row.push(if stopped && k + 1 == n { "1" } else { "0" }.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(SimError::io(path))?;
    Ok(())
}

fn summarize(horizon: usize, runs: &[RunSummary], lp_value: Option<f64>) -> HorizonSummary {
    let collect = |f: &dyn Fn(&RunSummary) -> Option<f64>| -> Option<Quantiles> {
        let values: Vec<f64> = runs.iter().filter_map(f).collect();
        Quantiles::of(values)
    };
    HorizonSummary {
        horizon,
        runs: runs.len(),
        areg1: collect(&|r| r.areg1),
        areg2: collect(&|r| r.areg2),
        knapsack_regret_per_step: collect(&|r| r.knapsack_regret.map(|x| x / horizon as f64)),
        knapsack_lp_value: lp_value,
        early_stop_fraction: runs.iter().filter(|r| r.stop_time <= horizon).count() as f64 / runs.len().max(1) as f64,
    }
}
