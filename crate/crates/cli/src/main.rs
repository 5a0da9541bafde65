//! `simmer` — train, sweep, and inspect budget-scheduled safe-RL runs.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use simmer_core::harness::{
    self, run_experiment, summary_csv, SweepJob, TrainConfig,
};
use simmer_core::oracle;

#[derive(Parser)]
#[command(name = "simmer", version, about = "Safe RL with scheduled safety budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run(RunArgs),
    /// Run a config over a seed range, in parallel.
    Sweep(SweepArgs),
    /// Aggregate finished runs into a CSV and SVG line plots.
    Report(ReportArgs),
    /// Exact-oracle utilities.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct RunArgs {
    /// Config file (TOML key-value; all keys optional).
    #[arg(long)]
    config: PathBuf,
    /// Seed; falls back to $SIMMER_SEED, then to the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for config snapshot, CSV, policy, and summary.
    #[arg(long)]
    out: PathBuf,
    /// Dotted-path overrides, e.g. --set ppo.lr=1e-3 --set controller=pi.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// Glob of config files, e.g. 'configs/*.toml' (quote it) or one path.
    #[arg(long)]
    configs: String,
    /// Seed range `a..b` (inclusive), e.g. 0..2, or a single seed.
    #[arg(long)]
    seeds: String,
    /// Parallel jobs.
    #[arg(long, default_value_t = 2)]
    jobs: usize,
    /// Output root; one subdirectory per (config, seed).
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Dotted-path overrides applied to every config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing run directories (each with an epochs.csv).
    #[arg(long)]
    runs: PathBuf,
    /// Where to write aggregate.csv and the SVG plots (defaults to --runs).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Recompute the crossing-fixture golden numbers.
    Regen {
        /// Golden file to write.
        #[arg(long, default_value = "crates/core/fixtures/crossing.golden")]
        out: PathBuf,
    },
}

fn parse_sets(sets: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    sets.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .with_context(|| format!("--set expects KEY=VALUE, got {s:?}"))
        })
        .collect()
}

fn parse_seed_range(spec: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().context("bad seed range start")?;
        let b: u64 = b.trim().parse().context("bad seed range end")?;
        if b < a {
            bail!("seed range end {b} is below start {a}");
        }
        Ok((a..=b).collect())
    } else {
        Ok(vec![spec.trim().parse().context("bad seed")?])
    }
}

/// Seed priority: --seed, then $SIMMER_SEED, then the config file.
fn resolve_seed(flag: Option<u64>) -> anyhow::Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SIMMER_SEED") {
        Ok(v) => Ok(Some(v.parse().context("bad $SIMMER_SEED")?)),
        Err(_) => Ok(None),
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let overrides = parse_sets(&args.sets)?;
    let mut cfg = TrainConfig::load(&args.config, &overrides)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = resolve_seed(args.seed)? {
        cfg.seed = seed;
    }
    let summary = run_experiment(&cfg, &args.out)?;
    println!(
        "{}: {} epochs, final return {:.3}, final cost {:.3}, \
         violations {}, total target violation {:.3}",
        summary.status,
        summary.epochs_run,
        summary.final_mean_return,
        summary.final_cost_stat,
        summary.total_violating_trajectories,
        summary.total_target_violation,
    );
    println!("artifacts in {}", args.out.display());
    if !summary.is_ok() {
        bail!("run failed");
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let overrides = parse_sets(&args.sets)?;
    let seeds = parse_seed_range(&args.seeds)?;
    let mut config_paths: Vec<PathBuf> = glob::glob(&args.configs)
        .context("bad --configs glob")?
        .collect::<Result<_, _>>()?;
    config_paths.sort();
    if config_paths.is_empty() {
        bail!("no config files match {:?}", args.configs);
    }

    let mut jobs = Vec::new();
    for path in &config_paths {
        let cfg = TrainConfig::load(path, &overrides)
            .with_context(|| format!("loading {}", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        for &seed in &seeds {
            jobs.push(SweepJob { name: name.clone(), config: cfg.clone(), seed });
        }
    }
    let rows = harness::sweep(&jobs, args.jobs, &args.out)?;
    for row in &rows {
        match &row.outcome {
            Ok(s) => println!(
                "{} seed {}: ok (return {:.3}, cost {:.3})",
                row.name, row.seed, s.final_mean_return, s.final_cost_stat
            ),
            Err(e) => println!("{} seed {}: FAILED ({e})", row.name, row.seed),
        }
    }
    let csv = summary_csv(&rows);
    let path = args.out.join("sweep_summary.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("summary written to {}", path.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let out = args.out.clone().unwrap_or_else(|| args.runs.clone());
    let n = harness::report(&args.runs, &out)?;
    println!("aggregated {n} runs into {}", out.display());
    Ok(())
}

fn cmd_oracle(cmd: OracleCommand) -> anyhow::Result<()> {
    match cmd {
        OracleCommand::Regen { out } => {
            let golden = oracle::compute_crossing_golden()?;
            golden.write_to(&out)?;
            print!("{}", golden.to_key_value());
            println!("written to {}", out.display());
            if golden.margin <= 0.0 {
                bail!("expected a strictly positive separation margin");
            }
            Ok(())
        }
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
        Command::Oracle(cmd) => cmd_oracle(cmd),
    }
}
