//! Implementations of the `twoway` subcommands. Each returns the JSON
//! document printed on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use twoway_core::clustering::{suggest_cluster_count, DEFAULT_RESTARTS};
use twoway_core::correspondence::{nontrivial, write_coordinates};
use twoway_core::model::PatternFile;
use twoway_core::{
    blow_up, corr_transform, corr_vectors, corr_weighted_variance, detect_gap, kmeans, reconstruct_with, representatives,
    sample_bernoulli_noise, sample_noise, singular_values, spectral_norm, thin_svd, DenseMatrix, NoiseSpec, ReconstructOptions,
    Representation, Side,
};

use crate::error::{CliError, Result};

fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    DenseMatrix::load(path).map_err(|e| match e {
        twoway_core::Error::Io(io) => CliError::io(path, io),
        other => CliError::malformed(path, other.to_string()),
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn save_matrix(m: &DenseMatrix, path: &Path) -> Result<()> {
    m.save(path).map_err(|e| match e {
        twoway_core::Error::Io(io) => CliError::io(path, io),
        other => other.into(),
    })
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut text = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        text.push_str(&format!("{i},{l}\n"));
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseChoice {
    None,
    Uniform,
    Gaussian,
    Bernoulli,
}

pub struct GenerateArgs {
    pub pattern: PathBuf,
    pub size: Option<(usize, usize)>,
    pub noise: NoiseChoice,
    pub bound: f64,
    pub variance: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub csv: bool,
}

/// Writes `b`, `w` and `a = b + w` plus the block structure actually used.
pub fn generate(args: &GenerateArgs) -> Result<Value> {
    let file = PatternFile::load(&args.pattern).map_err(|e| match e {
        twoway_core::Error::Io(io) => CliError::io(&args.pattern, io),
        other => CliError::malformed(&args.pattern, other.to_string()),
    })?;
    let (p, mut bs) = file.parts().map_err(|e| CliError::malformed(&args.pattern, e.to_string()))?;
    if let Some((m, n)) = args.size {
        bs = bs.scaled_to(m, n)?;
    }
    let b = blow_up(&p, &bs)?;
    let (a, w) = match args.noise {
        NoiseChoice::None => (b.clone(), DenseMatrix::zeros(bs.m(), bs.n())),
        NoiseChoice::Uniform => {
            let w = sample_noise(bs.m(), bs.n(), &NoiseSpec::uniform(args.bound, args.seed))?;
            (&b + &w, w)
        }
        NoiseChoice::Gaussian => {
            let w = sample_noise(bs.m(), bs.n(), &NoiseSpec::gaussian(args.variance, args.seed))?;
            (&b + &w, w)
        }
        NoiseChoice::Bernoulli => sample_bernoulli_noise(&p, &bs, args.seed)?,
    };
    create_dir(&args.out)?;
    let ext = if args.csv { "csv" } else { "txt" };
    for (name, m) in [("b", &b), ("w", &w), ("a", &a)] {
        save_matrix(m, &args.out.join(format!("{name}.{ext}")))?;
    }
    let structure = args.out.join("structure.json");
    PatternFile::from_parts(&p, &bs).save(&structure).map_err(CliError::Core)?;
    Ok(json!({
        "m": bs.m(),
        "n": bs.n(),
        "row_sizes": bs.row_sizes(),
        "col_sizes": bs.col_sizes(),
        "noise_norm": spectral_norm(&w),
        "out": args.out,
    }))
}

pub fn svd(matrix: &Path, k: usize, out: Option<&Path>) -> Result<Value> {
    let a = load_matrix(matrix)?;
    let svd = thin_svd(&a, k)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        save_matrix(&DenseMatrix::from_matrix(svd.left_vectors.clone())?, &dir.join("left.csv"))?;
        save_matrix(&DenseMatrix::from_matrix(svd.right_vectors.clone())?, &dir.join("right.csv"))?;
    }
    Ok(json!({ "m": a.nrows(), "n": a.ncols(), "singular_values": svd.singular_values }))
}

/// Reads whitespace- or comma-separated values.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| CliError::malformed(path, format!("`{t}`: {e}"))))
        .collect()
}

pub fn gap(values: &Path, m: usize, n: usize, threshold: f64) -> Result<Value> {
    let values = read_values(values)?;
    let decision = detect_gap(&values, m, n, threshold)?;
    Ok(json!({
        "k": decision.k,
        "threshold": decision.threshold,
        "gap_ratio": decision.gap_ratio.map(finite_or_null),
    }))
}

pub fn cluster(points: &Path, k: usize, weights: Option<&Path>, seed: u64, restarts: usize, out: Option<&Path>) -> Result<Value> {
    let pts = load_matrix(points)?.into_matrix();
    let rep = match weights {
        Some(w) => Representation::new(pts, read_values(w)?)?,
        None => Representation::unweighted(pts)?,
    };
    let c = kmeans(&rep, k, seed, restarts)?;
    if let Some(path) = out {
        write_labels(path, &c.assignment)?;
    }
    Ok(json!({
        "k": c.k(),
        "within_variance": c.within_variance,
        "cluster_sizes": c.cluster_sizes(),
        "labels": c.assignment,
    }))
}

pub struct CorrespondArgs {
    pub matrix: PathBuf,
    pub k: usize,
    pub tau: f64,
    pub parts: Option<(usize, usize)>,
    pub seed: u64,
    pub restarts: usize,
    pub out: Option<PathBuf>,
}

/// Correspondence spectrum, coordinates and (with `parts`) weighted
/// variances. `k` counts factor pairs including the trivial one.
pub fn correspond(args: &CorrespondArgs) -> Result<Value> {
    if !(args.tau > 0.0 && args.tau < 0.5) {
        return Err(CliError::Usage(format!("--tau {} must lie in (0, 1/2)", args.tau)));
    }
    let a = load_matrix(&args.matrix)?;
    let (m, n) = a.shape();
    let p = m.min(n);
    if args.k == 0 || args.k > p {
        return Err(CliError::Usage(format!("--k must be in 1..={p}")));
    }
    let dec = corr_transform(&a)?.decompose((args.k + 1).min(p))?;
    let eps_hat = (m as f64).powf(-args.tau).max((n as f64).powf(-args.tau));
    let values = dec.singular_values().to_vec();
    let (left, right) = corr_vectors(&dec, args.k)?;
    let (left, right) = (nontrivial(&left), nontrivial(&right));
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        for (name, coords, weights) in [("row_coords.csv", &left, &dec.row_sums), ("col_coords.csv", &right, &dec.col_sums)] {
            let path = dir.join(name);
            let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_coordinates(std::io::BufWriter::new(file), coords, weights)?;
        }
    }
    let mut report = json!({
        "singular_values": values,
        "unit_multiplicity": dec.unit_multiplicity(),
        "eps_hat": eps_hat,
        "next_within_eps": values.get(args.k).map(|&s| s <= eps_hat),
    });
    if let Some((ra, cb)) = args.parts {
        if args.k < 2 {
            return Err(CliError::Usage("weighted variances need --k >= 2 (one nontrivial coordinate)".into()));
        }
        let rows = corr_weighted_variance(&left, &dec.row_sums, ra, args.seed, args.restarts)?;
        let cols = corr_weighted_variance(&right, &dec.col_sums, cb, args.seed, args.restarts)?;
        report["row_variance"] = json!(rows.within_variance);
        report["col_variance"] = json!(cols.within_variance);
        report["row_labels"] = json!(rows.assignment);
        report["col_labels"] = json!(cols.assignment);
    }
    Ok(report)
}

pub struct ReconstructArgs {
    pub matrix: PathBuf,
    pub k: Option<usize>,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub seed: u64,
    pub restarts: usize,
    pub gap_threshold: f64,
    pub out: PathBuf,
}

/// Cap for the cluster-count heuristic when `--a`/`--b` are omitted.
const MAX_SUGGESTED_CLUSTERS: usize = 10;

pub fn reconstruct(args: &ReconstructArgs) -> Result<Value> {
    let a = load_matrix(&args.matrix)?;
    let (m, n) = a.shape();
    let k = match args.k {
        Some(k) => k,
        None => detect_gap(&singular_values(&a), m, n, args.gap_threshold)?.k,
    };
    if k == 0 {
        return Err(twoway_core::Error::NoStructure.into());
    }
    let suggest = |side: Side, limit: usize| -> Result<usize> {
        let svd = thin_svd(&a, k)?;
        let rep = representatives(&svd, side, k)?;
        Ok(suggest_cluster_count(&rep, MAX_SUGGESTED_CLUSTERS.min(limit), args.seed, DEFAULT_RESTARTS)?.max(k))
    };
    let (row_blocks, row_source) = match args.a {
        Some(a) => (a, "given"),
        None => (suggest(Side::Left, m)?, "heuristic"),
    };
    let (col_blocks, col_source) = match args.b {
        Some(b) => (b, "given"),
        None => (suggest(Side::Right, n)?, "heuristic"),
    };
    let res = reconstruct_with(&a, k, row_blocks, col_blocks, args.seed, ReconstructOptions { restarts: args.restarts })?;
    create_dir(&args.out)?;
    save_matrix(&res.b_hat, &args.out.join("b_hat.txt"))?;
    write_labels(&args.out.join("row_partition.csv"), &res.row_partition)?;
    write_labels(&args.out.join("col_partition.csv"), &res.col_partition)?;
    let mut report = serde_json::to_value(res.report()).expect("report serializes");
    report["row_blocks_source"] = json!(row_source);
    report["col_blocks_source"] = json!(col_source);
    let path = args.out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report).expect("report serializes") + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}
