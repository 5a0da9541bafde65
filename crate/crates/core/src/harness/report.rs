//! Aggregate reports: per-epoch CSV across runs and SVG line plots.

use std::fs;
use std::path::Path;

use super::run::{find_runs, read_epochs_csv, EpochStats};
use super::sweep::mean_std;

/// A named series per run, aligned by epoch.
struct Metric {
    key: &'static str,
    extract: fn(&EpochStats) -> f64,
}

const METRICS: [Metric; 3] = [
    Metric { key: "return", extract: |r| r.mean_return },
    Metric { key: "cost", extract: |r| r.cost_stat },
    Metric { key: "budget", extract: |r| r.budget },
];

/// Reads every run under `runs_root`, writes `aggregate.csv` plus one SVG
/// line plot per metric (return, cost, budget) into `out_dir`. Returns the
/// number of runs aggregated.
pub fn report(runs_root: &Path, out_dir: &Path) -> crate::Result<usize> {
    let dirs = find_runs(runs_root)?;
    if dirs.is_empty() {
        return Err(crate::Error::InvalidConfig(format!(
            "no runs with epochs.csv under {}",
            runs_root.display()
        )));
    }
    let mut runs = Vec::new();
    for dir in &dirs {
        runs.push(read_epochs_csv(dir.join("epochs.csv"))?);
    }
    fs::create_dir_all(out_dir).map_err(|e| crate::Error::io(out_dir, e))?;

    let max_epochs = runs.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut csv = String::from(
        "k,return_mean,return_std,cost_mean,cost_std,budget_mean,budget_std\n",
    );
    for k in 0..max_epochs {
        let mut cols = Vec::new();
        for metric in &METRICS {
            let values: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.get(k))
                .map(|row| (metric.extract)(row))
                .collect();
            let (m, s) = mean_std(&values);
            cols.push(format!("{m},{s}"));
        }
        csv.push_str(&format!("{k},{}\n", cols.join(",")));
    }
    let csv_path = out_dir.join("aggregate.csv");
    fs::write(&csv_path, csv).map_err(|e| crate::Error::io(&csv_path, e))?;

    for metric in &METRICS {
        let series: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| r.iter().map(|row| (metric.extract)(row)).collect())
            .collect();
        let svg = line_plot(&series, &format!("{} vs epoch", metric.key));
        let path = out_dir.join(format!("{}.svg", metric.key));
        fs::write(&path, svg).map_err(|e| crate::Error::io(&path, e))?;
    }
    Ok(runs.len())
}

/// A minimal SVG line plot: one thin polyline per run plus the pointwise
/// mean, drawn thick.
pub fn line_plot(series: &[Vec<f64>], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 45.0;

    let n = series.iter().map(|s| s.len()).max().unwrap_or(0);
    let finite = series.iter().flatten().copied().filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let x = |k: usize| MARGIN + (W - 2.0 * MARGIN) * k as f64 / (n.max(2) - 1) as f64;
    let y = |v: f64| H - MARGIN - (H - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{title}</text>\n",
        W / 2.0
    );
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <text x=\"{MARGIN}\" y=\"{2}\" font-family=\"sans-serif\" font-size=\"11\">{lo:.3}</text>\n\
         <text x=\"{MARGIN}\" y=\"{3}\" font-family=\"sans-serif\" font-size=\"11\">{hi:.3}</text>\n",
        H - MARGIN,
        W - MARGIN,
        H - MARGIN + 14.0,
        MARGIN - 6.0,
    ));

    let polyline = |vals: &[f64], style: &str| -> String {
        let pts: Vec<String> = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, v)| format!("{:.2},{:.2}", x(k), y(*v)))
            .collect();
        format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", pts.join(" "))
    };
    for s in series {
        svg.push_str(&polyline(s, "stroke=\"#88aadd\" stroke-width=\"1\" opacity=\"0.6\""));
    }
    let mean: Vec<f64> = (0..n)
        .map(|k| {
            let vals: Vec<f64> = series.iter().filter_map(|s| s.get(k)).copied().collect();
            vals.iter().sum::<f64>() / vals.len().max(1) as f64
        })
        .collect();
    svg.push_str(&polyline(&mean, "stroke=\"#003366\" stroke-width=\"2.5\""));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_emits_wellformed_svg() {
        let svg = line_plot(&[vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]], "demo");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 3);
    }

    #[test]
    fn constant_series_does_not_divide_by_zero() {
        let svg = line_plot(&[vec![5.0; 10]], "flat");
        assert!(!svg.contains("NaN"));
    }
}
