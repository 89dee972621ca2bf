//! Pattern matrices, block structures, blow-up and noise sampling.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::rng_from_seed;

/// The `a × b` matrix of nonnegative block intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatrix {
    entries: DMatrix<f64>,
}

impl PatternMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let a = rows.len();
        let b = rows.first().map_or(0, Vec::len);
        if a == 0 || b == 0 {
            return Err(Error::Structural("pattern matrix must be at least 1x1".into()));
        }
        if rows.iter().any(|r| r.len() != b) {
            return Err(Error::Structural("pattern rows have different lengths".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::Parameter(format!("pattern entry ({i}, {j}) = {p} is not a nonnegative real")));
                }
            }
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(Self { entries: DMatrix::from_row_slice(a, b, &flat) })
    }

    /// Number of row blocks `a`.
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of column blocks `b`.
    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| self.entries.row(i).iter().copied().collect()).collect()
    }

    /// Whether every entry is a probability, as the 0-1 noise model needs.
    pub fn is_probability(&self) -> bool {
        self.entries.iter().all(|&p| p <= 1.0)
    }

    /// Fails on the first identically zero row or column.
    pub fn check_no_zero_lines(&self) -> Result<()> {
        for i in 0..self.rows() {
            if self.entries.row(i).iter().all(|&p| p == 0.0) {
                return Err(Error::ZeroRow(i));
            }
        }
        for j in 0..self.cols() {
            if self.entries.column(j).iter().all(|&p| p == 0.0) {
                return Err(Error::ZeroColumn(j));
            }
        }
        Ok(())
    }

    pub fn scale(&self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Parameter(format!("scale factor {alpha} must be positive")));
        }
        Ok(Self { entries: &self.entries * alpha })
    }
}

/// Row block sizes `m_1..m_a` and column block sizes `n_1..n_b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
}

impl BlockStructure {
    pub fn new(row_sizes: Vec<usize>, col_sizes: Vec<usize>) -> Result<Self> {
        if row_sizes.is_empty() || col_sizes.is_empty() {
            return Err(Error::Structural("block structure needs at least one row and one column block".into()));
        }
        if let Some(i) = row_sizes.iter().position(|&s| s == 0) {
            return Err(Error::Structural(format!("row block {i} has size 0")));
        }
        if let Some(j) = col_sizes.iter().position(|&s| s == 0) {
            return Err(Error::Structural(format!("column block {j} has size 0")));
        }
        Ok(Self { row_sizes, col_sizes })
    }

    /// `a` row blocks over `m` rows and `b` column blocks over `n` columns,
    /// as equal as possible; the first `m mod a` blocks get one extra row.
    pub fn equal(a: usize, m: usize, b: usize, n: usize) -> Result<Self> {
        if a == 0 || b == 0 || m < a || n < b {
            return Err(Error::Structural(format!("cannot split {m}x{n} into {a}x{b} nonempty blocks")));
        }
        Self::new(split_even(m, a), split_even(n, b))
    }

    /// Block sizes proportional to this structure's, rescaled to `m × n` by
    /// largest-remainder rounding. Every block keeps at least one line.
    pub fn scaled_to(&self, m: usize, n: usize) -> Result<Self> {
        Self::new(scale_sizes(&self.row_sizes, m)?, scale_sizes(&self.col_sizes, n)?)
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    pub fn col_sizes(&self) -> &[usize] {
        &self.col_sizes
    }

    pub fn a(&self) -> usize {
        self.row_sizes.len()
    }

    pub fn b(&self) -> usize {
        self.col_sizes.len()
    }

    pub fn m(&self) -> usize {
        self.row_sizes.iter().sum()
    }

    pub fn n(&self) -> usize {
        self.col_sizes.iter().sum()
    }

    /// GC1 constants `c = min m_i / m` and `d = min n_j / n`.
    pub fn gc1_constants(&self) -> (f64, f64) {
        let c = *self.row_sizes.iter().min().unwrap() as f64 / self.m() as f64;
        let d = *self.col_sizes.iter().min().unwrap() as f64 / self.n() as f64;
        (c, d)
    }

    /// Planted block label of every row.
    pub fn row_labels(&self) -> Vec<usize> {
        expand_labels(&self.row_sizes)
    }

    /// Planted block label of every column.
    pub fn col_labels(&self) -> Vec<usize> {
        expand_labels(&self.col_sizes)
    }

    fn check_fits(&self, p: &PatternMatrix) -> Result<()> {
        if self.a() != p.rows() || self.b() != p.cols() {
            return Err(Error::Structural(format!(
                "pattern is {}x{} but the block structure has {}x{} blocks",
                p.rows(),
                p.cols(),
                self.a(),
                self.b()
            )));
        }
        Ok(())
    }
}

fn split_even(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

fn scale_sizes(sizes: &[usize], target: usize) -> Result<Vec<usize>> {
    if target < sizes.len() {
        return Err(Error::Structural(format!("cannot fit {} nonempty blocks into {target} lines", sizes.len())));
    }
    let total: usize = sizes.iter().sum();
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * target as f64 / total as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|&x| (x.floor() as usize).max(1)).collect();
    let mut assigned: usize = out.iter().sum();
    // hand out the remaining lines by largest fractional part, lowest index first
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&i, &j| (exact[j] - exact[j].floor()).total_cmp(&(exact[i] - exact[i].floor())).then(i.cmp(&j)));
    let mut k = 0;
    while assigned < target {
        out[order[k % order.len()]] += 1;
        assigned += 1;
        k += 1;
    }
    while assigned > target {
        let i = (0..out.len()).filter(|&i| out[i] > 1).max_by_key(|&i| (out[i], std::cmp::Reverse(i))).unwrap();
        out[i] -= 1;
        assigned -= 1;
    }
    Ok(out)
}

fn expand_labels(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(i, &s)| std::iter::repeat_n(i, s)).collect()
}

/// `{"pattern": [[...]], "row_sizes": [...], "col_sizes": [...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternFile {
    pub pattern: Vec<Vec<f64>>,
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
}

impl PatternFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn parts(&self) -> Result<(PatternMatrix, BlockStructure)> {
        let p = PatternMatrix::new(self.pattern.clone())?;
        let bs = BlockStructure::new(self.row_sizes.clone(), self.col_sizes.clone())?;
        bs.check_fits(&p)?;
        Ok((p, bs))
    }

    pub fn from_parts(p: &PatternMatrix, bs: &BlockStructure) -> Self {
        Self { pattern: p.to_rows(), row_sizes: bs.row_sizes.clone(), col_sizes: bs.col_sizes.clone() }
    }
}

/// The `m × n` matrix equal to `p_ij` on block `(i, j)`.
pub fn blow_up(p: &PatternMatrix, bs: &BlockStructure) -> Result<DenseMatrix> {
    bs.check_fits(p)?;
    let rows = bs.row_labels();
    let cols = bs.col_labels();
    DenseMatrix::from_fn(rows.len(), cols.len(), |r, c| p.get(rows[r], cols[c]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// i.i.d. Uniform(-K, K): mean 0, variance K²/3.
    Uniform { bound: f64 },
    /// i.i.d. N(0, σ²). Unbounded, so not a bounded-noise model strictly.
    Gaussian { variance: f64 },
    /// 0-1 entries with block probabilities taken from the pattern.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn uniform(bound: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::Uniform { bound }, seed }
    }

    pub fn gaussian(variance: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::Gaussian { variance }, seed }
    }

    /// Whether the kind satisfies the bounded zero-mean independent-entry
    /// noise definition (Gaussian noise does not: it is unbounded).
    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, NoiseKind::Gaussian { .. })
    }

    /// Per-entry variance of the uniform and Gaussian kinds.
    pub fn entry_variance(&self) -> Option<f64> {
        match self.kind {
            NoiseKind::Uniform { bound } => Some(bound * bound / 3.0),
            NoiseKind::Gaussian { variance } => Some(variance),
            NoiseKind::Bernoulli => None,
        }
    }
}

/// An `m × n` matrix of independent noise entries. Same spec and seed give a
/// bit-identical matrix.
pub fn sample_noise(m: usize, n: usize, spec: &NoiseSpec) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::Parameter(format!("noise shape {m}x{n} must be positive")));
    }
    let mut rng = rng_from_seed(spec.seed);
    let values: Vec<f64> = match spec.kind {
        NoiseKind::Uniform { bound } => {
            if !(bound.is_finite() && bound > 0.0) {
                return Err(Error::Parameter(format!("uniform bound K = {bound} must be positive")));
            }
            let dist = Uniform::new_inclusive(-bound, bound).map_err(|e| Error::Parameter(e.to_string()))?;
            (0..m * n).map(|_| dist.sample(&mut rng)).collect()
        }
        NoiseKind::Gaussian { variance } => {
            if !(variance.is_finite() && variance > 0.0) {
                return Err(Error::Parameter(format!("variance {variance} must be positive")));
            }
            let dist = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::Parameter(e.to_string()))?;
            (0..m * n).map(|_| dist.sample(&mut rng)).collect()
        }
        NoiseKind::Bernoulli => {
            return Err(Error::Parameter("bernoulli noise needs a pattern; use sample_bernoulli_noise".into()));
        }
    };
    DenseMatrix::from_row_slice(m, n, &values)
}

/// Samples the 0-1 matrix `A` whose block `(i, j)` entries are 1 with
/// probability `p_ij`, and returns it with `W = A - blow_up(P)`.
pub fn sample_bernoulli_noise(p: &PatternMatrix, bs: &BlockStructure, seed: u64) -> Result<(DenseMatrix, DenseMatrix)> {
    bs.check_fits(p)?;
    if !p.is_probability() {
        return Err(Error::Parameter("bernoulli noise needs pattern entries in [0, 1]".into()));
    }
    let rows = bs.row_labels();
    let cols = bs.col_labels();
    let (m, n) = (rows.len(), cols.len());
    let mut rng = rng_from_seed(seed);
    let mut a = vec![0.0; m * n];
    let mut w = vec![0.0; m * n];
    for r in 0..m {
        for c in 0..n {
            let prob = p.get(rows[r], cols[c]);
            let one = rng.random::<f64>() < prob;
            let idx = r * n + c;
            a[idx] = if one { 1.0 } else { 0.0 };
            w[idx] = if one { 1.0 - prob } else { -prob };
        }
    }
    Ok((DenseMatrix::from_row_slice(m, n, &a)?, DenseMatrix::from_row_slice(m, n, &w)?))
}

/// Witness constants for GC2: `m ≤ C0·n^C` and `n ≤ D0·m^D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gc2Witness {
    pub c0: f64,
    pub c: f64,
    pub d0: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEntry {
    pub m: usize,
    pub n: usize,
    pub c: f64,
    pub d: f64,
    pub gc2_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub entries: Vec<GrowthEntry>,
    /// Smallest GC1 constants over the sweep.
    pub c_min: f64,
    pub d_min: f64,
    /// Whether the witness satisfies GC2 at every size of the sweep.
    pub gc2_holds: bool,
}

/// GC1 constants of every structure in a sweep and whether `witness`
/// certifies GC2 across it.
pub fn check_gc(sweep: &[BlockStructure], witness: Gc2Witness) -> GrowthReport {
    let entries: Vec<GrowthEntry> = sweep
        .iter()
        .map(|bs| {
            let (c, d) = bs.gc1_constants();
            let (m, n) = (bs.m() as f64, bs.n() as f64);
            let gc2_holds = m <= witness.c0 * n.powf(witness.c) && n <= witness.d0 * m.powf(witness.d);
            GrowthEntry { m: bs.m(), n: bs.n(), c, d, gc2_holds }
        })
        .collect();
    GrowthReport {
        c_min: entries.iter().map(|e| e.c).fold(f64::INFINITY, f64::min),
        d_min: entries.iter().map(|e| e.d).fold(f64::INFINITY, f64::min),
        gc2_holds: entries.iter().all(|e| e.gc2_holds),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pm(rows: &[&[f64]]) -> PatternMatrix {
        PatternMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn blow_up_single_block() {
        let b = blow_up(&pm(&[&[0.5]]), &BlockStructure::new(vec![2], vec![3]).unwrap()).unwrap();
        assert_eq!(b.shape(), (2, 3));
        assert!(b.as_matrix().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn blow_up_unit_blocks_reproduce_pattern() {
        let b = blow_up(&pm(&[&[1.0, 0.0], &[0.0, 1.0]]), &BlockStructure::new(vec![1, 1], vec![1, 1]).unwrap()).unwrap();
        assert_eq!(b.as_matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn blow_up_mixed_sizes() {
        let b = blow_up(&pm(&[&[0.2, 0.8], &[0.6, 0.4]]), &BlockStructure::new(vec![2, 1], vec![1, 2]).unwrap()).unwrap();
        let expected = vec![vec![0.2, 0.8, 0.8], vec![0.2, 0.8, 0.8], vec![0.6, 0.4, 0.4]];
        assert_eq!(b.to_rows(), expected);
    }

    #[test]
    fn blow_up_shape_mismatch() {
        let err = blow_up(&pm(&[&[0.5, 0.5]]), &BlockStructure::new(vec![2], vec![3]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn rejects_bad_patterns_and_sizes() {
        assert!(PatternMatrix::new(vec![vec![-0.1]]).is_err());
        assert!(PatternMatrix::new(vec![vec![0.1], vec![0.1, 0.2]]).is_err());
        assert!(PatternMatrix::new(vec![]).is_err());
        assert!(BlockStructure::new(vec![2, 0], vec![1]).is_err());
        let z = pm(&[&[0.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(z.check_no_zero_lines(), Err(Error::ZeroColumn(0))));
        assert!(matches!(pm(&[&[0.0, 0.0], &[1.0, 1.0]]).check_no_zero_lines(), Err(Error::ZeroRow(0))));
    }

    #[test]
    fn equal_and_scaled_structures() {
        let bs = BlockStructure::equal(3, 10, 2, 7).unwrap();
        assert_eq!(bs.row_sizes(), &[4, 3, 3]);
        assert_eq!(bs.col_sizes(), &[4, 3]);
        let s = BlockStructure::new(vec![1, 2], vec![1, 1, 1]).unwrap().scaled_to(300, 100).unwrap();
        assert_eq!(s.row_sizes(), &[100, 200]);
        assert_eq!(s.col_sizes(), &[34, 33, 33]);
        assert_eq!(s.m(), 300);
        assert_eq!(s.n(), 100);
    }

    #[test]
    fn uniform_noise_bounded_and_deterministic() {
        let spec = NoiseSpec::uniform(1.0, 42);
        let w = sample_noise(3, 4, &spec).unwrap();
        assert!(w.max_abs() <= 1.0);
        assert!(w.as_matrix().mean().is_finite());
        assert_eq!(w, sample_noise(3, 4, &spec).unwrap());
        assert_ne!(w, sample_noise(3, 4, &NoiseSpec::uniform(1.0, 43)).unwrap());
    }

    #[test]
    fn uniform_noise_mean_within_clt_band() {
        // sd of the mean of 10^6 entries is (K/√3)/1000
        let w = sample_noise(1000, 1000, &NoiseSpec::uniform(1.0, 7)).unwrap();
        let mean = w.as_matrix().mean();
        assert!(mean.abs() <= 4.0 * (1.0 / 3f64.sqrt()) / 1000.0, "mean {mean}");
    }

    #[test]
    fn uniform_noise_variance_matches() {
        let w = sample_noise(1000, 1000, &NoiseSpec::uniform(2.0, 11)).unwrap();
        let var = w.as_matrix().iter().map(|v| v * v).sum::<f64>() / 1e6;
        let expected = 4.0 / 3.0;
        assert!((var - expected).abs() <= 0.05 * expected, "variance {var}");
        assert!(w.max_abs() <= 2.0);
    }

    #[test]
    fn gaussian_noise_moments() {
        let spec = NoiseSpec::gaussian(0.25, 3);
        assert!(!spec.is_bounded());
        let w = sample_noise(500, 400, &spec).unwrap();
        let mean = w.as_matrix().mean();
        let var = w.as_matrix().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 2e5;
        assert!(mean.abs() < 5.0 * 0.5 / 2e5f64.sqrt());
        assert!((var - 0.25).abs() < 0.01, "{var}");
    }

    #[test]
    fn noise_parameter_errors() {
        assert!(matches!(sample_noise(2, 2, &NoiseSpec::uniform(0.0, 1)), Err(Error::Parameter(_))));
        assert!(matches!(sample_noise(2, 2, &NoiseSpec::gaussian(-1.0, 1)), Err(Error::Parameter(_))));
        assert!(matches!(sample_noise(0, 2, &NoiseSpec::uniform(1.0, 1)), Err(Error::Parameter(_))));
        let spec = NoiseSpec { kind: NoiseKind::Bernoulli, seed: 0 };
        assert!(sample_noise(2, 2, &spec).is_err());
    }

    #[test]
    fn bernoulli_degenerate_probabilities() {
        let bs = BlockStructure::new(vec![3, 2], vec![4]).unwrap();
        let (a, w) = sample_bernoulli_noise(&pm(&[&[1.0], &[1.0]]), &bs, 9).unwrap();
        assert!(a.as_matrix().iter().all(|&v| v == 1.0));
        assert!(w.as_matrix().iter().all(|&v| v == 0.0));
        let (a, w) = sample_bernoulli_noise(&pm(&[&[0.0], &[0.0]]), &bs, 9).unwrap();
        assert!(a.as_matrix().iter().all(|&v| v == 0.0));
        assert!(w.as_matrix().iter().all(|&v| v == 0.0));
        assert!(sample_bernoulli_noise(&pm(&[&[1.5], &[0.5]]), &bs, 9).is_err());
    }

    #[test]
    fn bernoulli_fraction_of_ones() {
        let bs = BlockStructure::new(vec![100], vec![100]).unwrap();
        let (a, _) = sample_bernoulli_noise(&pm(&[&[0.5]]), &bs, 2024).unwrap();
        let frac = a.as_matrix().sum() / 1e4;
        assert!((0.3..=0.7).contains(&frac));
        // frozen by seed 2024 with ChaCha8
        assert_eq!(a.as_matrix().sum(), BERNOULLI_ONES_SEED_2024);
    }

    const BERNOULLI_ONES_SEED_2024: f64 = 5028.0;

    #[test]
    fn bernoulli_blockwise_mean() {
        let p = pm(&[&[0.1, 0.6], &[0.9, 0.3]]);
        let bs = BlockStructure::new(vec![60, 90], vec![70, 50]).unwrap();
        let (a, w) = sample_bernoulli_noise(&p, &bs, 5).unwrap();
        let b = blow_up(&p, &bs).unwrap();
        assert_eq!(&(&a - &b), &w);
        assert!(w.max_abs() <= 1.0);
        let (rl, cl) = (bs.row_labels(), bs.col_labels());
        for i in 0..2 {
            for j in 0..2 {
                let mut sum = 0.0;
                let mut cnt = 0.0;
                for r in (0..150).filter(|&r| rl[r] == i) {
                    for c in (0..120).filter(|&c| cl[c] == j) {
                        let v = w.get(r, c);
                        let pij = p.get(i, j);
                        assert!(v == 1.0 - pij || v == -pij);
                        sum += v;
                        cnt += 1.0;
                    }
                }
                let sd = (p.get(i, j) * (1.0 - p.get(i, j)) / cnt).sqrt();
                assert!((sum / cnt).abs() <= 5.0 * sd);
            }
        }
    }

    #[test]
    fn gc_constants() {
        let r = check_gc(&[BlockStructure::new(vec![2, 2], vec![3, 3]).unwrap()], Gc2Witness { c0: 1.0, c: 1.0, d0: 1.0, d: 1.0 });
        assert_eq!((r.entries[0].c, r.entries[0].d), (0.5, 0.5));
        let (c, d) = BlockStructure::new(vec![1, 9], vec![5, 5]).unwrap().gc1_constants();
        assert_eq!((c, d), (0.1, 0.5));
        let sweep: Vec<_> = [100, 200, 400].iter().map(|&s| BlockStructure::equal(2, s, 2, s).unwrap()).collect();
        let r = check_gc(&sweep, Gc2Witness { c0: 1.0, c: 1.0, d0: 1.0, d: 1.0 });
        assert!(r.gc2_holds);
        let skewed = [BlockStructure::equal(1, 1000, 1, 10).unwrap()];
        assert!(!check_gc(&skewed, Gc2Witness { c0: 1.0, c: 1.0, d0: 1.0, d: 1.0 }).gc2_holds);
        assert!(check_gc(&skewed, Gc2Witness { c0: 1.0, c: 3.0, d0: 1.0, d: 1.0 }).gc2_holds);
    }

    #[test]
    fn pattern_file_round_trip() {
        let dir = std::env::temp_dir().join(format!("twoway-pattern-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.json");
        let pf = PatternFile { pattern: vec![vec![0.2, 0.8]], row_sizes: vec![3], col_sizes: vec![1, 2] };
        pf.save(&path).unwrap();
        let (p, bs) = PatternFile::load(&path).unwrap().parts().unwrap();
        assert_eq!(p.get(0, 1), 0.8);
        assert_eq!(bs.n(), 3);
        let bad = PatternFile { pattern: vec![vec![0.2]], row_sizes: vec![3], col_sizes: vec![1, 2] };
        assert!(bad.parts().is_err());
        std::fs::remove_dir_all(dir).ok();
    }

    proptest! {
        #[test]
        fn blow_up_reads_owning_block(
            (rows, cols, vals) in (1usize..4, 1usize..4).prop_flat_map(|(a, b)| (
                proptest::collection::vec(1usize..5, a),
                proptest::collection::vec(1usize..5, b),
                proptest::collection::vec(0.0f64..1.0, a * b),
            ))
        ) {
            let (a, b) = (rows.len(), cols.len());
            let p = PatternMatrix::new(vals.chunks(b).map(|c| c.to_vec()).collect()).unwrap();
            let bs = BlockStructure::new(rows, cols).unwrap();
            let m = blow_up(&p, &bs).unwrap();
            let (rl, cl) = (bs.row_labels(), bs.col_labels());
            prop_assert_eq!(m.shape(), (bs.m(), bs.n()));
            for r in 0..bs.m() {
                for c in 0..bs.n() {
                    prop_assert_eq!(m.get(r, c), vals[rl[r] * b + cl[c]]);
                }
            }
            prop_assert!(a >= 1);
        }
    }
}
