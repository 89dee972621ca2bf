//! Correspondence transformation.
//!
//! A nonnegative matrix `M` with row sums `r` and column sums `c` becomes
//! `M_corr = D_r^{-1/2} M D_c^{-1/2}`, whose top singular value is 1 and
//! which does not change when `M` is multiplied by a positive constant.
//! Correspondence vectors rescale the singular vectors back by
//! `D^{-1/2}`; the first pair is constant (the trivial factor) whenever
//! the singular value 1 is simple.

use std::io::Write;

use nalgebra::DMatrix;

use crate::clustering::{kmeans, Clustering, Representation};
use crate::error::{Error, Result};
use crate::matrix::{format_f64, DenseMatrix};
use crate::model::{BlockStructure, PatternMatrix};
use crate::spectra::{exact_blownup_svd, thin_svd, SvdResult};

/// Singular values within this distance of 1 count towards its multiplicity.
pub const UNIT_MULTIPLICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceDecomposition {
    pub normalized: DenseMatrix,
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
    /// Filled by [`CorrespondenceDecomposition::decompose`].
    pub svd: Option<SvdResult>,
}

/// Degree-normalizes a nonnegative matrix without zero rows or columns.
pub fn corr_transform(m: &DenseMatrix) -> Result<CorrespondenceDecomposition> {
    let mat = m.as_matrix();
    if let Some(idx) = mat.iter().position(|&v| v < 0.0) {
        let (r, c) = (idx % mat.nrows(), idx / mat.nrows());
        return Err(Error::Data(format!("negative entry at ({r}, {c}); the correspondence transform needs a nonnegative matrix")));
    }
    let row_sums: Vec<f64> = mat.row_iter().map(|r| r.sum()).collect();
    let col_sums: Vec<f64> = mat.column_iter().map(|c| c.sum()).collect();
    if let Some(i) = row_sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroRow(i));
    }
    if let Some(j) = col_sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let normalized = DMatrix::from_fn(mat.nrows(), mat.ncols(), |i, j| mat[(i, j)] / (row_sums[i] * col_sums[j]).sqrt());
    Ok(CorrespondenceDecomposition { normalized: DenseMatrix::from_matrix(normalized)?, row_sums, col_sums, svd: None })
}

impl CorrespondenceDecomposition {
    /// Computes the top `k` singular triplets of the normalized matrix.
    pub fn decompose(mut self, k: usize) -> Result<Self> {
        self.svd = Some(thin_svd(&self.normalized, k)?);
        Ok(self)
    }

    pub fn singular_values(&self) -> &[f64] {
        self.svd.as_ref().map_or(&[], |s| s.singular_values.as_slice())
    }

    /// How many computed singular values lie within 1e-6 of 1.
    pub fn unit_multiplicity(&self) -> usize {
        self.singular_values().iter().filter(|&&s| (s - 1.0).abs() <= UNIT_MULTIPLICITY_TOL).count()
    }
}

/// `(D_row^{-1/2} Y_k, D_col^{-1/2} X_k)` for the first `k` singular pairs.
pub fn corr_vectors(dec: &CorrespondenceDecomposition, k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let svd = dec.svd.as_ref().ok_or_else(|| Error::Parameter("decomposition has no SVD; call decompose first".into()))?;
    if k == 0 || k > svd.k() {
        return Err(Error::Parameter(format!("need 1 <= k <= {} correspondence pairs, got {k}", svd.k())));
    }
    let left = DMatrix::from_fn(svd.left_vectors.nrows(), k, |i, c| svd.left_vectors[(i, c)] / dec.row_sums[i].sqrt());
    let right = DMatrix::from_fn(svd.right_vectors.nrows(), k, |j, c| svd.right_vectors[(j, c)] / dec.col_sums[j].sqrt());
    Ok((left, right))
}

/// Drops the first (trivial) correspondence coordinate.
pub fn nontrivial(coords: &DMatrix<f64>) -> DMatrix<f64> {
    coords.columns(1, coords.ncols().saturating_sub(1)).into_owned()
}

/// Weighted k-means of correspondence coordinates with marginal-sum weights.
pub fn corr_weighted_variance(
    points: &DMatrix<f64>,
    weights: &[f64],
    k_parts: usize,
    seed: u64,
    restarts: usize,
) -> Result<Clustering> {
    let rep = Representation::new(points.clone(), weights.to_vec())?;
    kmeans(&rep, k_parts, seed, restarts)
}

/// Exact spectrum of the correspondence-transformed blow-up of `p`.
///
/// The transformed matrix is itself the blow-up of the pattern
/// `p̃_ij = p_ij / √((∑_l p_il n_l)(∑_k p_kj m_k))`, so its nonzero
/// singular values come from the block-size reduction.
pub fn pattern_corr_spectrum(p: &PatternMatrix, bs: &BlockStructure) -> Result<SvdResult> {
    p.check_no_zero_lines()?;
    if bs.a() != p.rows() || bs.b() != p.cols() {
        return Err(Error::Structural("pattern and block structure disagree".into()));
    }
    let row_deg: Vec<f64> = (0..p.rows()).map(|i| (0..p.cols()).map(|l| p.get(i, l) * bs.col_sizes()[l] as f64).sum()).collect();
    let col_deg: Vec<f64> = (0..p.cols()).map(|j| (0..p.rows()).map(|k| p.get(k, j) * bs.row_sizes()[k] as f64).sum()).collect();
    let tilde: Vec<Vec<f64>> = (0..p.rows())
        .map(|i| (0..p.cols()).map(|j| p.get(i, j) / (row_deg[i] * col_deg[j]).sqrt()).collect())
        .collect();
    exact_blownup_svd(&PatternMatrix::new(tilde)?, bs)
}

/// CSV: index, coordinates..., weight (one row per category).
pub fn write_coordinates<W: Write>(out: W, coords: &DMatrix<f64>, weights: &[f64]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut header = vec!["index".to_string()];
    header.extend((0..coords.ncols()).map(|c| format!("coord_{}", c + 2)));
    header.push("weight".into());
    wtr.write_record(&header)?;
    for i in 0..coords.nrows() {
        let mut rec = vec![i.to_string()];
        rec.extend(coords.row(i).iter().map(|v| format_f64(*v)));
        rec.push(format_f64(weights[i]));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::blow_up;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn all_ones_normalizes_to_rank_one_unit() {
        let (m, n) = (6usize, 9usize);
        let dec = corr_transform(&DenseMatrix::from_fn(m, n, |_, _| 1.0).unwrap()).unwrap();
        let expected = 1.0 / ((n as f64) * (m as f64)).sqrt();
        assert!(dec.normalized.as_matrix().iter().all(|&v| v == expected));
        let dec = dec.decompose(2).unwrap();
        assert!((dec.singular_values()[0] - 1.0).abs() < 1e-12);
        assert!(dec.singular_values()[1].abs() < 1e-12);
        assert_eq!(dec.unit_multiplicity(), 1);
        let (l, r) = corr_vectors(&dec, 1).unwrap();
        assert!(l.column(0).iter().all(|v| (v - l[(0, 0)]).abs() < 1e-12));
        assert!(r.column(0).iter().all(|v| (v - r[(0, 0)]).abs() < 1e-12));
    }

    #[test]
    fn scaled_identity_normalizes_to_identity() {
        let m = DenseMatrix::from_matrix(DMatrix::identity(2, 2) * 5.0).unwrap();
        let dec = corr_transform(&m).unwrap();
        assert_eq!(dec.normalized.as_matrix(), &DMatrix::identity(2, 2));
        let dec = dec.decompose(2).unwrap();
        assert_eq!(dec.unit_multiplicity(), 2);
        let (l, _) = corr_vectors(&dec, 2).unwrap();
        let svd = dec.svd.as_ref().unwrap();
        // equal degrees: the correspondence vectors are the singular vectors over √5
        assert!((l - &svd.left_vectors / 5f64.sqrt()).amax() < 1e-15);
    }

    #[test]
    fn hand_computed_2x2() {
        let dec = corr_transform(&DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 3.0]]).unwrap()).unwrap();
        assert_eq!(dec.row_sums, vec![2.0, 4.0]);
        assert_eq!(dec.col_sums, vec![2.0, 4.0]);
        let n = dec.normalized.as_matrix();
        assert!((n[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((n[(0, 1)] - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((n[(1, 0)] - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((n[(1, 1)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_lines_and_negative_entries_rejected() {
        let zr = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(corr_transform(&zr), Err(Error::ZeroRow(1))));
        let zc = DenseMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(corr_transform(&zc), Err(Error::ZeroColumn(0))));
        let neg = DenseMatrix::from_rows(&[vec![-1.0, 2.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(corr_transform(&neg), Err(Error::Data(_))));
    }

    #[test]
    fn corr_vectors_errors() {
        let dec = corr_transform(&DenseMatrix::from_fn(3, 3, |i, j| (i + j + 1) as f64).unwrap()).unwrap();
        assert!(corr_vectors(&dec, 1).is_err());
        let dec = dec.decompose(2).unwrap();
        assert!(corr_vectors(&dec, 3).is_err());
        assert!(corr_vectors(&dec, 2).is_ok());
    }

    #[test]
    fn blown_up_correspondence_vectors_piecewise_constant() {
        let p = PatternMatrix::new(vec![vec![0.7, 0.1], vec![0.2, 0.9]]).unwrap();
        let bs = BlockStructure::new(vec![4, 6], vec![5, 3]).unwrap();
        let b = blow_up(&p, &bs).unwrap();
        let dec = corr_transform(&b).unwrap().decompose(2).unwrap();
        let exact = pattern_corr_spectrum(&p, &bs).unwrap();
        for i in 0..2 {
            assert!((dec.singular_values()[i] - exact.singular_values[i]).abs() < 1e-12);
        }
        assert!((exact.singular_values[0] - 1.0).abs() < 1e-12);
        let (l, r) = corr_vectors(&dec, 2).unwrap();
        let (rl, cl) = (bs.row_labels(), bs.col_labels());
        for c in 0..2 {
            for i in 1..10 {
                if rl[i] == rl[i - 1] {
                    assert!((l[(i, c)] - l[(i - 1, c)]).abs() < 1e-12);
                }
            }
            for j in 1..8 {
                if cl[j] == cl[j - 1] {
                    assert!((r[(j, c)] - r[(j - 1, c)]).abs() < 1e-12);
                }
            }
        }
        // the trivial pair is constant, the second separates the blocks
        assert!((l[(0, 0)] - l[(9, 0)]).abs() < 1e-12);
        assert!((l[(0, 1)] - l[(9, 1)]).abs() > 1e-3);
        let clus = corr_weighted_variance(&nontrivial(&l), &dec.row_sums, 2, 1, 4).unwrap();
        assert!(clus.within_variance < 1e-20);
    }

    #[test]
    fn weighted_variance_matches_exhaustive_2_partitions() {
        let xs = [0.1, 0.5, 0.45, 2.0, 2.2, 3.0];
        let ws = [1.0, 4.0, 0.5, 2.0, 1.5, 0.3];
        let pts = DMatrix::from_column_slice(6, 1, &xs);
        let c = corr_weighted_variance(&pts, &ws, 2, 11, 20).unwrap();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 6) - 1 {
            let mut total = 0.0;
            for side in [true, false] {
                let idx: Vec<usize> = (0..6).filter(|&i| ((mask >> i) & 1 == 1) == side).collect();
                let mass: f64 = idx.iter().map(|&i| ws[i]).sum();
                let mean = idx.iter().map(|&i| ws[i] * xs[i]).sum::<f64>() / mass;
                total += idx.iter().map(|&i| ws[i] * (xs[i] - mean).powi(2)).sum::<f64>();
            }
            best = best.min(total);
        }
        assert!((c.within_variance - best).abs() < 1e-12);
        assert!(corr_weighted_variance(&pts, &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0], 2, 0, 1).is_err());
    }

    #[test]
    fn coordinates_csv() {
        let coords = DMatrix::from_row_slice(2, 1, &[0.5, -0.5]);
        let mut buf = Vec::new();
        write_coordinates(&mut buf, &coords, &[3.0, 1.0]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("index,coord_2,weight"));
        assert_eq!(s.lines().count(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scale_invariance_and_unit_top(seed in 0u64..10_000, m in 2usize..12, n in 2usize..12, alpha in 0.01f64..100.0) {
            let mut rng = rng_from_seed(seed);
            let mat = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(0.01..1.0)).unwrap();
            let a = corr_transform(&mat).unwrap();
            let b = corr_transform(&mat.scale(alpha).unwrap()).unwrap();
            prop_assert!((a.normalized.as_matrix() - b.normalized.as_matrix()).amax() <= 1e-15);
            let a = a.decompose(1).unwrap();
            prop_assert!(a.singular_values()[0] <= 1.0 + 1e-8);
            prop_assert!((a.singular_values()[0] - 1.0).abs() <= 1e-10);
        }
    }
}
