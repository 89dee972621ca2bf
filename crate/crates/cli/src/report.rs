//! Plot data and gnuplot scripts from a `summary.json`.
//!
//! `scaling.dat` holds one row per size: `m n`, the medians of
//! `s_i/√(mn)` for `i = 1..r`, the median of `s_{r+1}/√(m+n)` and the
//! median `‖W‖/√(m+n)`. `scaling.gp` plots them against `√(mn)`; protruding
//! values stay flat while the bulk stays bounded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::experiment::Summary;

pub const DATA_FILE: &str = "scaling.dat";
pub const SCRIPT_FILE: &str = "scaling.gp";

/// Writes `scaling.dat` and `scaling.gp` into `out_dir` and returns their
/// paths. Nothing is written when the summary is unusable.
pub fn render_report(summary_path: &Path, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let text = fs::read_to_string(summary_path).map_err(|e| CliError::io(summary_path, e))?;
    let summary: Summary = serde_json::from_str(&text).map_err(|e| CliError::malformed(summary_path, e.to_string()))?;
    let (data, script) = render(&summary).map_err(|msg| CliError::malformed(summary_path, msg))?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let data_path = out_dir.join(DATA_FILE);
    let script_path = out_dir.join(SCRIPT_FILE);
    fs::write(&data_path, data).map_err(|e| CliError::io(&data_path, e))?;
    fs::write(&script_path, script).map_err(|e| CliError::io(&script_path, e))?;
    Ok((data_path, script_path))
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.10e}"),
        _ => "NaN".into(),
    }
}

/// `(data table, gnuplot script)`.
pub fn render(summary: &Summary) -> std::result::Result<(String, String), String> {
    if summary.sizes.is_empty() {
        return Err("summary lists no sizes".into());
    }
    if summary.sizes.iter().all(|s| s.completed == 0) {
        return Err("summary has no completed trials".into());
    }
    let r = summary.rank;
    if r == 0 {
        return Err("rank must be positive".into());
    }
    let mut data = String::from("# m n");
    for i in 1..=r {
        let _ = write!(data, " s_{i}/sqrt(mn)");
    }
    let _ = writeln!(data, " s_{}/sqrt(m+n) norm(W)/sqrt(m+n)", r + 1);
    let mut rows: Vec<_> = summary.sizes.iter().filter(|s| s.completed > 0).collect();
    rows.sort_by_key(|s| (s.m * s.n, s.m));
    for s in rows {
        let _ = write!(data, "{} {}", s.m, s.n);
        for i in 0..r {
            let _ = write!(data, " {}", num(s.median_top_scaled.get(i).copied()));
        }
        let _ = writeln!(data, " {} {}", num(s.median_next_scaled), num(s.median_noise_ratio));
    }

    let mut script = String::new();
    script.push_str("set terminal pngcairo size 900,600\n");
    script.push_str("set output 'scaling.png'\n");
    script.push_str("set logscale x 2\n");
    script.push_str("set xlabel 'sqrt(mn)'\n");
    script.push_str("set ylabel 'scaled singular value'\n");
    script.push_str("set key outside right\n");
    script.push_str("set grid\n");
    let mut plots = Vec::new();
    for i in 1..=r {
        plots.push(format!("'{DATA_FILE}' using (sqrt($1*$2)):{} with linespoints title 's_{i}/sqrt(mn)'", i + 2));
    }
    plots.push(format!("'{DATA_FILE}' using (sqrt($1*$2)):{} with linespoints title 's_{}/sqrt(m+n)'", r + 3, r + 1));
    plots.push(format!("'{DATA_FILE}' using (sqrt($1*$2)):{} with linespoints dashtype 2 title 'norm(W)/sqrt(m+n)'", r + 4));
    let _ = writeln!(script, "plot {}", plots.join(", \\\n     "));
    Ok((data, script))
}
