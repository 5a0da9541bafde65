//! Seed sweeps: independent runs, one summary table.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::config::TrainConfig;
use super::run::{run_experiment, RunSummary};

/// One (config, seed) job of a sweep.
#[derive(Debug, Clone)]
pub struct SweepJob {
    /// Label used for the run directory and the summary rows.
    pub name: String,
    pub config: TrainConfig,
    pub seed: u64,
}

/// Result row of one job.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub name: String,
    pub seed: u64,
    pub dir: PathBuf,
    pub outcome: std::result::Result<RunSummary, String>,
}

/// Sample mean and the n-1 (Bessel) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Runs every job, `jobs` at a time, each into
/// `out_root/<name>_seed<seed>/`. Individual failures are recorded and the
/// sweep continues.
pub fn sweep(jobs_list: &[SweepJob], parallelism: usize, out_root: &Path) -> crate::Result<Vec<SweepRow>> {
    if jobs_list.is_empty() {
        return Err(crate::Error::InvalidConfig("sweep needs at least one job".into()));
    }
    fs::create_dir_all(out_root).map_err(|e| crate::Error::io(out_root, e))?;

    let queue = Mutex::new((0usize, Vec::<SweepRow>::new()));
    let workers = parallelism.max(1).min(jobs_list.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = {
                    let mut q = queue.lock().expect("queue lock");
                    if q.0 >= jobs_list.len() {
                        break;
                    }
                    q.0 += 1;
                    q.0 - 1
                };
                let job = &jobs_list[idx];
                let mut config = job.config.clone();
                config.seed = job.seed;
                let dir = out_root.join(format!("{}_seed{}", job.name, job.seed));
                let outcome = match run_experiment(&config, &dir) {
                    Ok(summary) if summary.is_ok() => Ok(summary),
                    Ok(summary) => Err(summary.status),
                    Err(e) => Err(e.to_string()),
                };
                let row = SweepRow { name: job.name.clone(), seed: job.seed, dir, outcome };
                queue.lock().expect("queue lock").1.push(row);
            });
        }
    });

    let mut rows = queue.into_inner().expect("queue lock").1;
    rows.sort_by(|a, b| (&a.name, a.seed).cmp(&(&b.name, b.seed)));
    Ok(rows)
}

/// Aggregates sweep rows per config name: mean and n-1 std of the final
/// return, final cost, violating-trajectory count, and total target
/// violation, over the seeds that finished.
pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    names.dedup();
    let mut out = String::from(
        "name,seeds,failures,return_mean,return_std,cost_mean,cost_std,\
         violations_mean,violations_std,target_violation_mean,target_violation_std\n",
    );
    for name in names {
        let group: Vec<&SweepRow> = rows.iter().filter(|r| r.name == name).collect();
        let ok: Vec<&RunSummary> =
            group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let failures = group.len() - ok.len();
        let col = |f: &dyn Fn(&RunSummary) -> f64| -> (f64, f64) {
            mean_std(&ok.iter().map(|s| f(s)).collect::<Vec<f64>>())
        };
        let (rm, rs) = col(&|s| s.final_mean_return);
        let (cm, cs) = col(&|s| s.final_cost_stat);
        let (vm, vs) = col(&|s| s.total_violating_trajectories as f64);
        let (tm, ts) = col(&|s| s.total_target_violation);
        out.push_str(&format!(
            "{name},{},{failures},{rm},{rs},{cm},{cs},{vm},{vs},{tm},{ts}\n",
            group.len()
        ));
    }
    out
}
