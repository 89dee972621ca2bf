//! Singular value decompositions and spectral-gap detection.
//!
//! [`thin_svd`] picks between a dense bidiagonalization SVD (small matrices
//! or many requested triplets) and Golub-Kahan-Lanczos bidiagonalization
//! with full reorthogonalization (large matrices, few triplets). Blown-up
//! matrices never need a dense SVD: [`exact_blownup_svd`] reduces them to
//! the `a × b` matrix `D_m^{1/2} P D_n^{1/2}`.

pub(crate) mod dense;
mod lanczos;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::model::{BlockStructure, PatternMatrix};

pub use lanczos::LanczosOptions;

/// Default gap threshold multiplier `t` in `t·√(m+n)`.
pub const DEFAULT_GAP_THRESHOLD: f64 = 3.0;

/// Below this `min(m, n)` the dense SVD is always used.
const DENSE_CUTOFF: usize = 400;

/// Top singular triplets in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// `m × k`, orthonormal columns.
    pub left_vectors: DMatrix<f64>,
    /// `n × k`, orthonormal columns.
    pub right_vectors: DMatrix<f64>,
}

impl SvdResult {
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    /// Keeps the first `k` triplets.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.k());
        Self {
            singular_values: self.singular_values[..k].to_vec(),
            left_vectors: self.left_vectors.columns(0, k).into_owned(),
            right_vectors: self.right_vectors.columns(0, k).into_owned(),
        }
    }

    /// Flips each pair so the left vector's largest-magnitude coordinate
    /// (first one on ties) is positive.
    fn normalize_signs(&mut self) {
        for i in 0..self.k() {
            let col = self.left_vectors.column(i);
            let mut best = 0;
            for (r, v) in col.iter().enumerate() {
                if v.abs() > col[best].abs() {
                    best = r;
                }
            }
            if !col.is_empty() && col[best] < 0.0 {
                self.left_vectors.column_mut(i).neg_mut();
                self.right_vectors.column_mut(i).neg_mut();
            }
        }
    }

    /// `∑ z_i y_i x_iᵀ` over the retained triplets.
    pub fn low_rank(&self) -> DMatrix<f64> {
        let scaled = &self.left_vectors * DMatrix::from_diagonal(&DVector::from_column_slice(&self.singular_values));
        scaled * self.right_vectors.transpose()
    }
}

/// Number of values above the numerical-zero cutoff `max(m,n)·ε·s_1`.
pub fn numerical_rank(values: &[f64], m: usize, n: usize) -> usize {
    let Some(&s1) = values.first() else { return 0 };
    if s1 <= 0.0 {
        return 0;
    }
    let cutoff = m.max(n) as f64 * f64::EPSILON * s1;
    values.iter().take_while(|&&s| s > cutoff).count()
}

/// Top-`k` singular triplets of `m`.
pub fn thin_svd(m: &DenseMatrix, k: usize) -> Result<SvdResult> {
    thin_svd_matrix(m.as_matrix(), k)
}

pub(crate) fn thin_svd_matrix(m: &DMatrix<f64>, k: usize) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let p = rows.min(cols);
    if k == 0 || k > p {
        return Err(Error::Parameter(format!("requested {k} singular triplets of a {rows}x{cols} matrix")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("matrix has non-finite entries".into()));
    }
    let mut out = if p <= DENSE_CUTOFF || 4 * (k + 10) > p {
        dense_svd(m, k)?
    } else {
        lanczos::gkl_svd(m, k, &LanczosOptions::default())?
    };
    out.normalize_signs();
    Ok(out)
}

/// All `min(m, n)` singular values, descending, via the dense path.
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let p = m.nrows().min(m.ncols());
    let mut s = dense::singular_values(m.as_matrix()).unwrap_or_else(|_| vec![f64::NAN; p]);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn dense_svd(m: &DMatrix<f64>, k: usize) -> Result<SvdResult> {
    let (u, s, v) = dense::svd(m)?;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    order.truncate(k);
    let left = DMatrix::from_fn(m.nrows(), k, |r, c| u[(r, order[c])]);
    let right = DMatrix::from_fn(m.ncols(), k, |r, c| v[(r, order[c])]);
    Ok(SvdResult {
        singular_values: order.iter().map(|&i| s[i]).collect(),
        left_vectors: left,
        right_vectors: right,
    })
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    spectral_norm_matrix(m.as_matrix())
}

pub(crate) fn spectral_norm_matrix(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() || m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    thin_svd_matrix(m, 1).map(|s| s.singular_values[0]).unwrap_or(f64::NAN)
}

/// Exact spectrum of `blow_up(p, bs)` from the shrunken `a × b` matrix.
///
/// The nonzero singular values of the blown-up matrix are those of
/// `D_m^{1/2} P D_n^{1/2}` (`D_m`, `D_n` the block-size diagonals); with
/// `z`, `w` its singular vectors, the blown-up singular vectors take the
/// value `z_i / √m_i` on row block `i` and `w_j / √n_j` on column block `j`.
/// Returns exactly `rank(P)` triplets.
pub fn exact_blownup_svd(p: &PatternMatrix, bs: &BlockStructure) -> Result<SvdResult> {
    if bs.a() != p.rows() || bs.b() != p.cols() {
        return Err(Error::Structural(format!(
            "pattern is {}x{} but the block structure has {}x{} blocks",
            p.rows(),
            p.cols(),
            bs.a(),
            bs.b()
        )));
    }
    let rs: Vec<f64> = bs.row_sizes().iter().map(|&s| (s as f64).sqrt()).collect();
    let cs: Vec<f64> = bs.col_sizes().iter().map(|&s| (s as f64).sqrt()).collect();
    let shrunk = DMatrix::from_fn(p.rows(), p.cols(), |i, j| rs[i] * p.get(i, j) * cs[j]);
    let small = dense_svd(&shrunk, p.rows().min(p.cols()))?;
    let r = numerical_rank(&small.singular_values, bs.m(), bs.n());
    let (row_labels, col_labels) = (bs.row_labels(), bs.col_labels());
    let left = DMatrix::from_fn(bs.m(), r, |row, c| {
        let i = row_labels[row];
        small.left_vectors[(i, c)] / rs[i]
    });
    let right = DMatrix::from_fn(bs.n(), r, |col, c| {
        let j = col_labels[col];
        small.right_vectors[(j, c)] / cs[j]
    });
    let mut out = SvdResult { singular_values: small.singular_values[..r].to_vec(), left_vectors: left, right_vectors: right };
    out.normalize_signs();
    Ok(out)
}

/// Symmetric `(m+n) × (m+n)` matrix `(1/K)·[[0, W], [Wᵀ, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// All eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let mut ev = dense::symmetric_eigenvalues(&self.0).unwrap_or_else(|_| vec![f64::NAN; n]);
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

pub fn dilate(w: &DenseMatrix, k: f64) -> Result<SymmetricMatrix> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Parameter(format!("dilation scale K = {k} must be positive")));
    }
    let (m, n) = w.shape();
    let mut out = DMatrix::zeros(m + n, m + n);
    let scaled = w.as_matrix() / k;
    out.view_mut((0, m), (m, n)).copy_from(&scaled);
    out.view_mut((m, 0), (n, m)).copy_from(&scaled.transpose());
    Ok(SymmetricMatrix(out))
}

/// Count of singular values at or above `t·√(m+n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapDecision {
    pub k: usize,
    pub threshold: f64,
    /// `s_k / s_{k+1}`; infinite when `s_{k+1}` is zero or absent, `None`
    /// when `k = 0`.
    pub gap_ratio: Option<f64>,
}

pub fn detect_gap(values: &[f64], m: usize, n: usize, t: f64) -> Result<GapDecision> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("gap threshold t = {t} must be positive")));
    }
    if let Some(i) = values.windows(2).position(|w| !(w[0] >= w[1])) {
        return Err(Error::Data(format!("singular values not descending at position {i}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("singular values must be finite".into()));
    }
    let threshold = t * ((m + n) as f64).sqrt();
    let k = values.iter().take_while(|&&s| s >= threshold).count();
    let gap_ratio = (k > 0).then(|| match values.get(k) {
        Some(&next) if next > 0.0 => values[k - 1] / next,
        _ => f64::INFINITY,
    });
    Ok(GapDecision { k, threshold, gap_ratio })
}
