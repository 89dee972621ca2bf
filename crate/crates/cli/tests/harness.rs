use std::fs;
use std::path::{Path, PathBuf};

use twoway_cli::experiment::{corr_in_band, median, trial_header};
use twoway_cli::{render_report, run_experiment, CliError, ExperimentConfig, Summary};
use twoway_core::NoiseKind;

fn write_pattern(dir: &Path, pattern: &str, rows: &str, cols: &str) -> PathBuf {
    let path = dir.join("pattern.json");
    fs::write(&path, format!(r#"{{"pattern": {pattern}, "row_sizes": {rows}, "col_sizes": {cols}}}"#)).unwrap();
    path
}

fn config(pattern_file: PathBuf, sizes: Vec<(usize, usize)>, noise: NoiseKind, seeds: u64, out: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        pattern_file,
        sizes,
        noise,
        seeds,
        seed_base: 11,
        tau: 0.4,
        gap_threshold: 3.0,
        restarts: 5,
        workers: 1,
        trial_time_limit_secs: 300.0,
        out_dir: out,
    }
}

fn read_trials(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> Option<f64> {
    (!s.is_empty()).then(|| s.parse().unwrap())
}

#[test]
fn noiseless_rank_one() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = write_pattern(dir.path(), "[[1.0]]", "[1]", "[1]");
    let mut cfg = config(pattern, vec![(10, 10)], NoiseKind::Uniform { bound: 0.0 }, 1, dir.path().join("out"));
    // 10 = √(10·10) sits below 3·√20, so the detector needs a lower threshold
    cfg.gap_threshold = 2.0;
    let outcome = run_experiment(&cfg).unwrap();
    assert_eq!(outcome.failed(), 0);
    let (header, rows) = read_trials(&dir.path().join("out/trials.csv"));
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0][col(&header, "s_1")]).unwrap() - 10.0).abs() < 1e-12);
    assert_eq!(rows[0][col(&header, "gap_k")], "1");
    assert_eq!(rows[0][col(&header, "status")], "ok");
    assert_eq!(num(&rows[0][col(&header, "noise_norm")]), Some(0.0));
}

#[test]
fn noiseless_identity_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = write_pattern(dir.path(), "[[1, 0], [0, 1]]", "[1, 1]", "[1, 1]");
    let cfg = config(pattern, vec![(100, 100)], NoiseKind::Uniform { bound: 0.0 }, 1, dir.path().join("out"));
    run_experiment(&cfg).unwrap();
    let (header, rows) = read_trials(&dir.path().join("out/trials.csv"));
    let s: Vec<f64> = (1..=5).map(|i| num(&rows[0][col(&header, &format!("s_{i}"))]).unwrap()).collect();
    assert!((s[0] - 50.0).abs() < 1e-10 && (s[1] - 50.0).abs() < 1e-10);
    assert!(s[2..].iter().all(|v| v.abs() < 1e-10));
    assert_eq!(rows[0][col(&header, "gap_k")], "2");
    assert_eq!(rows[0][col(&header, "recovered")], "true");
    assert!(num(&rows[0][col(&header, "residual_norm")]).unwrap() < 1e-8 * 50.0);
}

fn noisy_config(dir: &Path, workers: usize, out: &str) -> ExperimentConfig {
    let pattern = write_pattern(dir, "[[0.2, 0.8, 0.8], [0.8, 0.8, 0.2]]", "[1, 1]", "[1, 1, 1]");
    let mut cfg = config(pattern, vec![(120, 120), (240, 240)], NoiseKind::Bernoulli, 3, dir.join(out));
    cfg.workers = workers;
    cfg
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&noisy_config(dir.path(), 1, "first")).unwrap();
    run_experiment(&noisy_config(dir.path(), 2, "second")).unwrap();
    let first = fs::read(dir.path().join("first/trials.csv")).unwrap();
    let second = fs::read(dir.path().join("second/trials.csv")).unwrap();
    assert_eq!(first, second);
    let s1 = fs::read(dir.path().join("first/summary.json")).unwrap();
    let s2 = fs::read(dir.path().join("second/summary.json")).unwrap();
    assert_eq!(s1, s2);
}

/// Recomputes summary aggregates from trials.csv alone.
#[test]
fn summary_recomputes_from_trials() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&noisy_config(dir.path(), 1, "out")).unwrap();
    let summary: Summary = serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary, outcome.summary);
    let (header, rows) = read_trials(&dir.path().join("out/trials.csv"));
    assert_eq!(header, trial_header(summary.rank));
    let r = summary.rank;
    assert_eq!(r, 2);

    for size in &summary.sizes {
        let (m, n) = (size.m, size.n);
        let here: Vec<&Vec<String>> =
            rows.iter().filter(|row| row[0] == m.to_string() && row[1] == n.to_string() && row[col(&header, "status")] == "ok").collect();
        assert_eq!(here.len(), size.completed);
        let column = |name: &str| -> Vec<f64> { here.iter().filter_map(|row| num(&row[col(&header, name)])).collect() };
        let (mn, sum) = ((m * n) as f64, (m + n) as f64);

        for i in 0..r {
            let scaled: Vec<f64> = column(&format!("s_{}", i + 1)).iter().map(|s| s / mn.sqrt()).collect();
            assert_close(median(&scaled), Some(size.median_top_scaled[i]));
        }
        let next: Vec<f64> = column(&format!("s_{}", r + 1)).iter().map(|s| s / sum.sqrt()).collect();
        assert_close(median(&next), size.median_next_scaled);
        let noise: Vec<f64> = column("noise_norm").iter().map(|w| w / sum.sqrt()).collect();
        assert_close(median(&noise), size.median_noise_ratio);
        assert_close(noise.iter().copied().reduce(f64::max), size.max_noise_ratio);

        let gap_hits = here.iter().filter(|row| row[col(&header, "gap_k")] == r.to_string()).count();
        assert_close(Some(gap_hits as f64 / here.len() as f64), size.gap_rate);
        let recovered = here.iter().filter(|row| row[col(&header, "recovered")] == "true").count();
        assert_close(Some(recovered as f64 / here.len() as f64), size.recovery_rate);

        let rv: Vec<f64> = column("row_variance").iter().map(|v| v * mn / sum).collect();
        assert_close(median(&rv), size.median_row_variance_scaled);
        let resid: Vec<f64> = column("residual_norm").iter().map(|e| e / sum.sqrt()).collect();
        assert_close(median(&resid), size.median_residual_ratio);

        let delta = size.delta_hat.unwrap();
        let in_band = here
            .iter()
            .filter(|row| {
                let vals: Vec<f64> = (1..=r + 1).map(|i| num(&row[col(&header, &format!("corr_{i}"))]).unwrap()).collect();
                corr_in_band(&vals, r, delta, size.eps_hat)
            })
            .count();
        assert_close(Some(in_band as f64 / here.len() as f64), size.corr_band_rate);
    }
}

fn assert_close(a: Option<f64>, b: Option<f64>) {
    match (a, b) {
        (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}"),
        (x, y) => assert_eq!(x, y),
    }
}

#[test]
fn report_outputs_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = write_pattern(dir.path(), "[[0.2, 0.8, 0.8], [0.8, 0.8, 0.2]]", "[1, 1]", "[1, 1, 1]");
    let cfg = config(pattern, vec![(60, 60), (90, 90), (120, 120)], NoiseKind::Uniform { bound: 0.3 }, 2, dir.path().join("out"));
    run_experiment(&cfg).unwrap();
    let data = fs::read_to_string(dir.path().join("out/scaling.dat")).unwrap();
    let rows: Vec<&str> = data.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    let script = fs::read_to_string(dir.path().join("out/scaling.gp")).unwrap();
    assert!(script.contains("plot 'scaling.dat'"));
    // rendering again is idempotent
    render_report(&dir.path().join("out/summary.json"), &dir.path().join("out")).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("out/scaling.dat")).unwrap(), data);
}

#[test]
fn report_rejects_empty_and_malformed_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(
        &empty,
        r#"{"rank": 1, "pattern": [[1.0]], "noise": {"kind": "bernoulli"}, "seeds": 1, "seed_base": 0, "tau": 0.4, "gap_threshold": 3.0, "sizes": []}"#,
    )
    .unwrap();
    let out = dir.path().join("plots");
    let err = render_report(&empty, &out).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{not json").unwrap();
    assert!(matches!(render_report(&broken, &out), Err(CliError::Malformed { .. })));
    assert!(!out.exists());
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, r#"{"pattern_file": "missing.json", "sizes": [[10, 10]], "noise": {"kind": "uniform", "bound": 1}, "tau": 0.7}"#).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap_err().exit_code(), 2);
    fs::write(&path, r#"{"pattern_file": "missing.json", "sizes": [[10, 10]], "noise": {"kind": "uniform", "bound": 1}}"#).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(run_experiment(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn timed_out_trials_are_marked() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = noisy_config(dir.path(), 1, "out");
    cfg.trial_time_limit_secs = 1e-9;
    let outcome = run_experiment(&cfg).unwrap();
    assert_eq!(outcome.failed(), outcome.trials.len());
    let (header, rows) = read_trials(&dir.path().join("out/trials.csv"));
    assert!(rows.iter().all(|r| r[col(&header, "status")] == "timeout"));
}
