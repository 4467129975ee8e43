use std::path::PathBuf;
use std::process::ExitCode;

use bwcr_core::benchmark::knapsack_lp_value;
use bwcr_sim::config::ExperimentConfig;
use bwcr_sim::runner::{run_experiment, Resolved};
use bwcr_sim::verify;
use bwcr_sim::{Result, SimError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bwcr", version, about = "Bandits with concave rewards and convex knapsacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-run traces plus summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Replace the configured seed list with this single seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Output directory; overrides the one in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the best fixed policy for the configured instance.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Verify {
        /// Run only these criteria (by number).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, seed_override, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed_override {
                cfg.seeds = vec![seed];
            }
            let out = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| SimError::Config("no output directory: pass --out or set \"output\"".into()))?;
            let summary = run_experiment(&cfg, &out)?;
            for h in &summary.horizons {
                let med = |q: &Option<bwcr_sim::stats::Quantiles>| q.as_ref().map(|q| format!("{:.5}", q.median));
                println!(
                    "T={} runs={} areg1={} areg2={} knapsack_regret/T={} early_stop={:.3}",
                    h.horizon,
                    h.runs,
                    med(&h.areg1).unwrap_or_else(|| "-".into()),
                    med(&h.areg2).unwrap_or_else(|| "-".into()),
                    med(&h.knapsack_regret_per_step).unwrap_or_else(|| "-".into()),
                    h.early_stop_fraction
                );
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Benchmark { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let resolved = Resolved::from_config(&cfg)?;
            match resolved.benchmark()? {
                Some(b) if b.feasible => {
                    if let Some(v) = b.opt_value {
                        println!("opt {v:.10}");
                    }
                    if let Some(p) = &b.p_star {
                        println!("p* {:?}", p.weights().as_slice());
                    }
                    if let Some(x) = &b.point {
                        println!("V p* {:?}", x.as_slice());
                    }
                }
                Some(_) => println!("infeasible: no fixed policy reaches the target set"),
                None => println!("no objective or target set configured"),
            }
            for &horizon in &cfg.horizons {
                let alg = resolved.algorithm(&cfg, horizon)?;
                if let (true, Some(budget)) = (alg.variant.is_knapsack(), alg.budget) {
                    match knapsack_lp_value(&resolved.instance, budget, horizon)? {
                        Some((_, v)) => println!("T={horizon} knapsack LP value {v:.10}"),
                        None => println!("T={horizon} knapsack LP infeasible"),
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { only } => {
            let mut all_passed = true;
            for criterion in verify::criteria().iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
                let report = criterion.run();
                println!("{report}");
                all_passed &= report.passed;
            }
            Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
