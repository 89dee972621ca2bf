//! Seeded sweeps over matrix sizes.
//!
//! Every `(size, seed index)` cell is one trial: build the blow-up, add
//! noise, then measure the spectrum, the gap, the row/column clusterings,
//! the correspondence spectrum (nonnegative data only) and the
//! reconstruction residual. Trial seeds are
//! `derive_seed(derive_seed(seed_base, seed_index), m << 32 | n)`, so adding
//! sizes or seeds never changes the trials already in a sweep.
//!
//! Outputs in `out_dir`:
//!
//! * `trials.csv`: one row per trial, columns in this order: `m, n,
//!   seed_index, seed, status, s_1 .. s_{r+3}, noise_norm, gap_k,
//!   gap_threshold, gap_ratio, row_variance, col_variance, recovered,
//!   corr_1 .. corr_{r+1}, residual_norm, residual_bound, error`. Empty
//!   cells mark values that were not computed.
//! * `timings.csv`: `m, n, seed_index, wall_time_secs`. Kept apart so that
//!   `trials.csv` is byte-identical across reruns.
//! * `summary.json`: per-size aggregates (see [`SizeSummary`]).
//! * `scaling.dat`, `scaling.gp`: see [`crate::report`]; skipped when no
//!   trial completed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twoway_core::clustering::same_partition;
use twoway_core::correspondence::pattern_corr_spectrum;
use twoway_core::model::PatternFile;
use twoway_core::rng::derive_seed;
use twoway_core::{
    blow_up, corr_transform, detect_gap, exact_blownup_svd, kmeans, reconstruct_with, sample_bernoulli_noise, sample_noise,
    spectral_norm, thin_svd, BlockStructure, DenseMatrix, NoiseKind, NoiseSpec, PatternMatrix, ReconstructOptions,
    Representation,
};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::render_report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
    Timeout,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Failed => "failed",
            TrialStatus::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialRecord {
    pub m: usize,
    pub n: usize,
    pub seed_index: u64,
    pub seed: u64,
    pub status: Option<TrialStatus>,
    /// Top `r + 3` singular values of `A` (fewer if the matrix is smaller).
    pub singular_values: Vec<f64>,
    pub noise_norm: Option<f64>,
    pub gap_k: Option<usize>,
    pub gap_threshold: Option<f64>,
    pub gap_ratio: Option<f64>,
    pub row_variance: Option<f64>,
    pub col_variance: Option<f64>,
    pub recovered: Option<bool>,
    /// Top `r + 1` singular values of the correspondence matrix.
    pub corr_values: Vec<f64>,
    pub residual_norm: Option<f64>,
    pub residual_bound: Option<f64>,
    pub error: String,
    pub wall_time_secs: f64,
}

impl TrialRecord {
    pub fn completed(&self) -> bool {
        self.status == Some(TrialStatus::Ok)
    }
}

/// Aggregates over the completed trials of one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub completed: usize,
    pub failed: usize,
    /// Median of `s_i / √(mn)` for `i = 1..r`.
    pub median_top_scaled: Vec<f64>,
    /// Median of `s_{r+1} / √(m+n)`.
    pub median_next_scaled: Option<f64>,
    /// `‖W‖ / √(m+n)`.
    pub median_noise_ratio: Option<f64>,
    pub max_noise_ratio: Option<f64>,
    /// Fraction of completed trials whose gap detector found exactly `r`.
    pub gap_rate: Option<f64>,
    /// Fraction of completed trials recovering both partitions.
    pub recovery_rate: Option<f64>,
    /// Median of `S_a² · mn/(m+n)` and `S_b² · mn/(m+n)`.
    pub median_row_variance_scaled: Option<f64>,
    pub median_col_variance_scaled: Option<f64>,
    /// Median of `‖A − B̂‖ / √(m+n)`.
    pub median_residual_ratio: Option<f64>,
    /// Largest `‖A − B̂‖ / ‖W‖` (absent for noiseless runs).
    pub max_residual_over_noise: Option<f64>,
    /// Exact `r`-th correspondence singular value of the noiseless blow-up.
    pub delta_hat: Option<f64>,
    /// `max(m^{-τ}, n^{-τ})`.
    pub eps_hat: f64,
    /// Fraction of trials with `corr_{r+1} ≤ ε̂` and the top `r` values in
    /// `[δ̂ − ε̂, 1 + ε̂]`.
    pub corr_band_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rank: usize,
    pub pattern: Vec<Vec<f64>>,
    pub noise: NoiseKind,
    pub seeds: u64,
    pub seed_base: u64,
    pub tau: f64,
    pub gap_threshold: f64,
    pub sizes: Vec<SizeSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
    pub out_dir: PathBuf,
}

impl ExperimentOutcome {
    pub fn failed(&self) -> usize {
        self.trials.iter().filter(|t| !t.completed()).count()
    }
}

pub fn trial_seed(seed_base: u64, seed_index: u64, m: usize, n: usize) -> u64 {
    derive_seed(derive_seed(seed_base, seed_index), ((m as u64) << 32) | n as u64)
}

struct Setup {
    pattern: PatternMatrix,
    proportions: BlockStructure,
    rank: usize,
}

fn load_setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let file = PatternFile::load(&cfg.pattern_file).map_err(|e| match e {
        twoway_core::Error::Io(io) => CliError::io(&cfg.pattern_file, io),
        other => CliError::malformed(&cfg.pattern_file, other.to_string()),
    })?;
    let (pattern, proportions) = file.parts().map_err(|e| CliError::malformed(&cfg.pattern_file, e.to_string()))?;
    if matches!(cfg.noise, NoiseKind::Bernoulli) && !pattern.is_probability() {
        return Err(CliError::Usage("bernoulli noise needs pattern entries in [0, 1]".into()));
    }
    let rank = exact_blownup_svd(&pattern, &proportions)?.k();
    Ok(Setup { pattern, proportions, rank })
}

/// Runs the sweep and writes every output file. Numerical failures inside
/// trials are recorded, not returned; check [`ExperimentOutcome::failed`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let setup = load_setup(cfg)?;
    let mut structures = Vec::with_capacity(cfg.sizes.len());
    for &(m, n) in &cfg.sizes {
        let bs = setup.proportions.scaled_to(m, n).map_err(|e| CliError::Usage(format!("size ({m}, {n}): {e}")))?;
        structures.push(bs);
    }
    let cells: Vec<(usize, u64)> = (0..cfg.sizes.len()).flat_map(|s| (0..cfg.seeds).map(move |i| (s, i))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let trials: Vec<TrialRecord> =
        pool.install(|| cells.par_iter().map(|&(s, i)| run_trial(cfg, &setup, &structures[s], i)).collect());

    let summary = summarize(cfg, &setup.pattern, setup.rank, &structures, &trials);
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    write_trials(&cfg.out_dir.join("trials.csv"), &trials, setup.rank)?;
    write_timings(&cfg.out_dir.join("timings.csv"), &trials)?;
    let summary_path = cfg.out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(|e| CliError::io(&summary_path, e))?;
    if summary.sizes.iter().any(|s| s.completed > 0) {
        render_report(&summary_path, &cfg.out_dir)?;
    }
    Ok(ExperimentOutcome { trials, summary, out_dir: cfg.out_dir.clone() })
}

enum Stop {
    Failed(String),
    Timeout,
}

impl From<twoway_core::Error> for Stop {
    fn from(e: twoway_core::Error) -> Self {
        Stop::Failed(e.to_string())
    }
}

fn run_trial(cfg: &ExperimentConfig, setup: &Setup, bs: &BlockStructure, seed_index: u64) -> TrialRecord {
    let (m, n) = (bs.m(), bs.n());
    let seed = trial_seed(cfg.seed_base, seed_index, m, n);
    let mut rec = TrialRecord { m, n, seed_index, seed, ..Default::default() };
    let start = Instant::now();
    let outcome = trial_stages(cfg, setup, bs, seed, &mut rec, &start);
    rec.wall_time_secs = start.elapsed().as_secs_f64();
    rec.status = Some(match outcome {
        Ok(()) => TrialStatus::Ok,
        Err(Stop::Failed(msg)) => {
            rec.error = msg;
            TrialStatus::Failed
        }
        Err(Stop::Timeout) => {
            rec.error = format!("exceeded {} s", cfg.trial_time_limit_secs);
            TrialStatus::Timeout
        }
    });
    rec
}

fn trial_stages(
    cfg: &ExperimentConfig,
    setup: &Setup,
    bs: &BlockStructure,
    seed: u64,
    rec: &mut TrialRecord,
    start: &Instant,
) -> std::result::Result<(), Stop> {
    let check = || if start.elapsed().as_secs_f64() > cfg.trial_time_limit_secs { Err(Stop::Timeout) } else { Ok(()) };
    let (m, n) = (bs.m(), bs.n());
    let r = setup.rank;
    let b = blow_up(&setup.pattern, bs)?;
    let (a, w) = match cfg.noise {
        NoiseKind::Uniform { bound: 0.0 } => (b.clone(), DenseMatrix::zeros(m, n)),
        NoiseKind::Uniform { bound } => noisy(&b, NoiseSpec::uniform(bound, seed))?,
        NoiseKind::Gaussian { variance } => noisy(&b, NoiseSpec::gaussian(variance, seed))?,
        NoiseKind::Bernoulli => sample_bernoulli_noise(&setup.pattern, bs, seed)?,
    };
    rec.noise_norm = Some(spectral_norm(&w));
    check()?;

    let svd = thin_svd(&a, (r + 3).min(m.min(n)))?;
    rec.singular_values = svd.singular_values.clone();
    let gap = detect_gap(&svd.singular_values, m, n, cfg.gap_threshold)?;
    rec.gap_k = Some(gap.k);
    rec.gap_threshold = Some(gap.threshold);
    rec.gap_ratio = gap.gap_ratio;
    check()?;

    let y = svd.left_vectors.columns(0, r).into_owned();
    let x = svd.right_vectors.columns(0, r).into_owned();
    let rows = kmeans(&Representation::unweighted(y)?, bs.a(), seed, cfg.restarts)?;
    let cols = kmeans(&Representation::unweighted(x)?, bs.b(), seed, cfg.restarts)?;
    rec.row_variance = Some(rows.within_variance);
    rec.col_variance = Some(cols.within_variance);
    rec.recovered = Some(same_partition(&rows.assignment, &bs.row_labels()) && same_partition(&cols.assignment, &bs.col_labels()));
    check()?;

    if a.as_matrix().iter().all(|&v| v >= 0.0) {
        if let Ok(dec) = corr_transform(&a) {
            let dec = dec.decompose((r + 1).min(m.min(n)))?;
            rec.corr_values = dec.singular_values().to_vec();
        }
        check()?;
    }

    let res = reconstruct_with(&a, r, bs.a(), bs.b(), seed, ReconstructOptions { restarts: cfg.restarts })?;
    rec.residual_norm = Some(res.residual_norm);
    rec.residual_bound = Some(res.residual_bound);
    check()
}

fn noisy(b: &DenseMatrix, spec: NoiseSpec) -> twoway_core::Result<(DenseMatrix, DenseMatrix)> {
    let w = sample_noise(b.nrows(), b.ncols(), &spec)?;
    Ok((b + &w, w))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[h] } else { 0.5 * (v[h - 1] + v[h]) })
}

fn max(values: &[f64]) -> Option<f64> {
    values.iter().copied().reduce(f64::max)
}

fn rate(flags: &[bool]) -> Option<f64> {
    (!flags.is_empty()).then(|| flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

fn summarize(cfg: &ExperimentConfig, p: &PatternMatrix, r: usize, structures: &[BlockStructure], trials: &[TrialRecord]) -> Summary {
    let sizes = structures
        .iter()
        .map(|bs| {
            let (m, n) = (bs.m(), bs.n());
            let all: Vec<&TrialRecord> = trials.iter().filter(|t| t.m == m && t.n == n).collect();
            let done: Vec<&TrialRecord> = all.iter().copied().filter(|t| t.completed()).collect();
            let sqrt_mn = ((m * n) as f64).sqrt();
            let sqrt_sum = ((m + n) as f64).sqrt();
            let scale = (m * n) as f64 / (m + n) as f64;
            let collect = |f: &dyn Fn(&TrialRecord) -> Option<f64>| -> Vec<f64> { done.iter().filter_map(|t| f(t)).collect() };

            let median_top_scaled = (0..r)
                .filter_map(|i| median(&collect(&|t| t.singular_values.get(i).map(|s| s / sqrt_mn))))
                .collect();
            let noise = collect(&|t| t.noise_norm.map(|w| w / sqrt_sum));
            let residual_over_noise = collect(&|t| match (t.residual_norm, t.noise_norm) {
                (Some(e), Some(w)) if w > 0.0 => Some(e / w),
                _ => None,
            });
            let delta_hat = pattern_corr_spectrum(p, bs).ok().and_then(|s| s.singular_values.get(r - 1).copied());
            let eps_hat = (m as f64).powf(-cfg.tau).max((n as f64).powf(-cfg.tau));
            let corr_band: Vec<bool> = match delta_hat {
                Some(delta) => done
                    .iter()
                    .filter(|t| t.corr_values.len() > r)
                    .map(|t| corr_in_band(&t.corr_values, r, delta, eps_hat))
                    .collect(),
                None => Vec::new(),
            };
            SizeSummary {
                m,
                n,
                trials: all.len(),
                completed: done.len(),
                failed: all.len() - done.len(),
                median_top_scaled,
                median_next_scaled: median(&collect(&|t| t.singular_values.get(r).map(|s| s / sqrt_sum))),
                median_noise_ratio: median(&noise),
                max_noise_ratio: max(&noise),
                gap_rate: rate(&done.iter().map(|t| t.gap_k == Some(r)).collect::<Vec<_>>()),
                recovery_rate: rate(&done.iter().map(|t| t.recovered == Some(true)).collect::<Vec<_>>()),
                median_row_variance_scaled: median(&collect(&|t| t.row_variance.map(|v| v * scale))),
                median_col_variance_scaled: median(&collect(&|t| t.col_variance.map(|v| v * scale))),
                median_residual_ratio: median(&collect(&|t| t.residual_norm.map(|e| e / sqrt_sum))),
                max_residual_over_noise: max(&residual_over_noise),
                delta_hat,
                eps_hat,
                corr_band_rate: rate(&corr_band),
            }
        })
        .collect();
    Summary {
        rank: r,
        pattern: p.to_rows(),
        noise: cfg.noise,
        seeds: cfg.seeds,
        seed_base: cfg.seed_base,
        tau: cfg.tau,
        gap_threshold: cfg.gap_threshold,
        sizes,
    }
}

pub fn corr_in_band(values: &[f64], r: usize, delta: f64, eps: f64) -> bool {
    values[r] <= eps && values[..r].iter().all(|&v| v >= delta - eps && v <= 1.0 + eps)
}

pub fn trial_header(r: usize) -> Vec<String> {
    let mut h: Vec<String> = ["m", "n", "seed_index", "seed", "status"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=r + 3).map(|i| format!("s_{i}")));
    h.extend(["noise_norm", "gap_k", "gap_threshold", "gap_ratio", "row_variance", "col_variance", "recovered"].map(String::from));
    h.extend((1..=r + 1).map(|i| format!("corr_{i}")));
    h.extend(["residual_norm", "residual_bound", "error"].map(String::from));
    h
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn padded(values: &[f64], len: usize) -> impl Iterator<Item = String> + '_ {
    (0..len).map(move |i| cell(values.get(i)))
}

fn write_trials(path: &Path, trials: &[TrialRecord], r: usize) -> Result<()> {
    let csv_err = |e: csv::Error| CliError::malformed(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(trial_header(r)).map_err(csv_err)?;
    for t in trials {
        let mut row = vec![
            t.m.to_string(),
            t.n.to_string(),
            t.seed_index.to_string(),
            t.seed.to_string(),
            t.status.map_or("", |s| s.as_str()).to_string(),
        ];
        row.extend(padded(&t.singular_values, r + 3));
        row.extend([
            cell(t.noise_norm),
            cell(t.gap_k),
            cell(t.gap_threshold),
            cell(t.gap_ratio),
            cell(t.row_variance),
            cell(t.col_variance),
            cell(t.recovered),
        ]);
        row.extend(padded(&t.corr_values, r + 1));
        row.extend([cell(t.residual_norm), cell(t.residual_bound), t.error.clone()]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_timings(path: &Path, trials: &[TrialRecord]) -> Result<()> {
    let csv_err = |e: csv::Error| CliError::malformed(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["m", "n", "seed_index", "wall_time_secs"]).map_err(csv_err)?;
    for t in trials {
        w.write_record([t.m.to_string(), t.n.to_string(), t.seed_index.to_string(), format!("{:.3}", t.wall_time_secs)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
