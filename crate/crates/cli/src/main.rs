use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twoway_cli::commands::{self, CorrespondArgs, GenerateArgs, NoiseChoice, ReconstructArgs};
use twoway_cli::{render_report, run_experiment, CliError, ExperimentConfig};
use twoway_core::clustering::DEFAULT_RESTARTS;
use twoway_core::DEFAULT_GAP_THRESHOLD;

/// Spectral two-way classification of noisy block matrices.
#[derive(Parser)]
#[command(name = "twoway", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    None,
    Uniform,
    Gaussian,
    Bernoulli,
}

#[derive(Subcommand)]
enum Command {
    /// Blow up a pattern file and add noise; writes a, b, w and structure.json.
    Generate {
        /// Pattern JSON: {"pattern": [[..]], "row_sizes": [..], "col_sizes": [..]}.
        pattern: PathBuf,
        /// Rescale the block sizes to this many rows.
        #[arg(long, requires = "cols")]
        rows: Option<usize>,
        #[arg(long, requires = "rows")]
        cols: Option<usize>,
        #[arg(long, value_enum, default_value = "none")]
        noise: Noise,
        /// Uniform noise bound K.
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        /// Gaussian noise variance.
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write CSV instead of the `m n` text format.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top-k singular triplets of a matrix file.
    Svd {
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        /// Directory for left.csv and right.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count singular values at or above t·√(m+n).
    Gap {
        /// Descending singular values, whitespace or comma separated.
        values: PathBuf,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
        gap_threshold: f64,
    },
    /// Weighted k-means of the rows of a matrix file.
    Cluster {
        points: PathBuf,
        #[arg(long)]
        k: usize,
        /// One weight per point.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// CSV file for the labels.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correspondence spectrum and coordinates of a nonnegative matrix.
    Correspond {
        matrix: PathBuf,
        /// Factor pairs, counting the trivial one.
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.4)]
        tau: f64,
        /// Row and column cluster counts for the weighted variances.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        parts: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild a blown-up matrix; writes b_hat.txt, partitions and report.json.
    Reconstruct {
        matrix: PathBuf,
        /// Protruding singular values; detected from the gap when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Row clusters; estimated by a variance-drop heuristic when omitted.
        #[arg(long)]
        a: Option<usize>,
        /// Column clusters; estimated like `--a` when omitted.
        #[arg(long)]
        b: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
        gap_threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded sweep from a JSON config.
    Experiment {
        config: PathBuf,
        /// Overrides the config's seed_base.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        gap_threshold: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate scaling.dat and scaling.gp from a summary.json.
    Report {
        summary: PathBuf,
        /// Defaults to the summary's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Generate { pattern, rows, cols, noise, bound, variance, seed, csv, out } => {
            let noise = match noise {
                Noise::None => NoiseChoice::None,
                Noise::Uniform => NoiseChoice::Uniform,
                Noise::Gaussian => NoiseChoice::Gaussian,
                Noise::Bernoulli => NoiseChoice::Bernoulli,
            };
            let size = rows.zip(cols);
            commands::generate(&GenerateArgs { pattern, size, noise, bound, variance, seed, out, csv })
        }
        Command::Svd { matrix, k, out } => commands::svd(&matrix, k, out.as_deref()),
        Command::Gap { values, rows, cols, gap_threshold } => commands::gap(&values, rows, cols, gap_threshold),
        Command::Cluster { points, k, weights, seed, restarts, out } => {
            commands::cluster(&points, k, weights.as_deref(), seed, restarts, out.as_deref())
        }
        Command::Correspond { matrix, k, tau, parts, seed, restarts, out } => {
            let parts = parts.map(|p| (p[0], p[1]));
            commands::correspond(&CorrespondArgs { matrix, k, tau, parts, seed, restarts, out })
        }
        Command::Reconstruct { matrix, k, a, b, seed, restarts, gap_threshold, out } => {
            commands::reconstruct(&ReconstructArgs { matrix, k, a, b, seed, restarts, gap_threshold, out })
        }
        Command::Experiment { config, seed, tau, gap_threshold, restarts, workers, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed_base = s;
            }
            if let Some(t) = tau {
                cfg.tau = t;
            }
            if let Some(t) = gap_threshold {
                cfg.gap_threshold = t;
            }
            if let Some(r) = restarts {
                cfg.restarts = r;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let outcome = run_experiment(&cfg)?;
            let failed = outcome.failed();
            println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
            if failed > 0 {
                return Err(CliError::PartialFailure { failed, total: outcome.trials.len() });
            }
            Ok(serde_json::Value::Null)
        }
        Command::Report { summary, out } => {
            let dir = out.unwrap_or_else(|| summary.parent().map(|p| p.to_path_buf()).unwrap_or_default());
            let (data, script) = render_report(&summary, &dir)?;
            Ok(serde_json::json!({ "data": data, "script": script }))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(serde_json::Value::Null) => ExitCode::SUCCESS,
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("output serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("twoway: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
