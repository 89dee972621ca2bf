//! Rebuilding a blown-up matrix behind a noisy one.
//!
//! With `k` protruding singular values and well-clustered representatives,
//! the cluster centers span piecewise-constant subspaces `F` (rows) and `G`
//! (columns). Orthonormal systems `v_i ∈ F`, `u_i ∈ G` closest to the
//! singular vectors `y_i`, `x_i` come from an orthogonal Procrustes rotation,
//! and `B̂ = ∑ z_i v_i u_iᵀ` is then a blown-up matrix with
//! `‖A − B̂‖ = O(√(m+n))`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::clustering::{kmeans, Clustering, Representation, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::derive_seed;
use crate::spectra::{dense, spectral_norm, thin_svd};

/// Gram deviation allowed for inputs that must be orthonormal.
const ORTHONORMAL_TOL: f64 = 1e-6;
/// Relative size of the pivoted-QR diagonal below which the center matrix
/// counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

fn gram_deviation(q: &DMatrix<f64>) -> f64 {
    (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).amax()
}

/// Euclidean distance of each column of `vectors` to `span(basis)`.
pub fn subspace_distances(vectors: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<Vec<f64>> {
    if vectors.nrows() != basis.nrows() {
        return Err(Error::Structural(format!("vectors live in R^{} but the basis in R^{}", vectors.nrows(), basis.nrows())));
    }
    if gram_deviation(basis) > ORTHONORMAL_TOL {
        return Err(Error::Data("basis columns are not orthonormal".into()));
    }
    let residual = vectors - basis * basis.tr_mul(vectors);
    Ok(residual
        .column_iter()
        .zip(vectors.column_iter())
        .map(|(r, y)| r.norm().min(y.norm()))
        .collect())
}

/// Orthonormal system inside a subspace closest to a given one.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `V = V′R`, orthonormal columns in the span of the target basis.
    pub aligned: DMatrix<f64>,
    /// `∑ ‖y_i − v_i‖²`.
    pub error: f64,
}

/// Orthogonal Procrustes: with `YᵀV′ = Q S Zᵀ`, the rotation `R = Z Qᵀ`
/// makes `V = V′R` the orthonormal system in `span(V′)` minimizing
/// `∑ ‖y_i − v_i‖²`.
pub fn align_orthonormal(y: &DMatrix<f64>, f_basis: &DMatrix<f64>) -> Result<Alignment> {
    if y.shape() != f_basis.shape() {
        return Err(Error::Structural(format!("Y is {:?} but the target basis is {:?}", y.shape(), f_basis.shape())));
    }
    if gram_deviation(f_basis) > ORTHONORMAL_TOL {
        return Err(Error::Structural("target basis is rank deficient or not orthonormal".into()));
    }
    if gram_deviation(y) > ORTHONORMAL_TOL {
        return Err(Error::Data("Y columns are not orthonormal".into()));
    }
    let cross = y.tr_mul(f_basis);
    let (q, _, z) = dense::svd(&cross)?;
    let rotation = z * q.transpose();
    let aligned = f_basis * rotation;
    let error = (y - &aligned).norm_squared();
    Ok(Alignment { aligned, error })
}

/// Orthonormal basis of the span of the piecewise-constant matrix whose row
/// `r` is `centers[labels[r]]`.
///
/// Works in block coordinates: with `H` the label indicator and `D` the
/// cluster sizes, the span equals `H D^{-1/2} · span(D^{1/2} C)`, and a
/// column-pivoted QR of the small `a × k` matrix `D^{1/2} C` gives the basis.
/// Rows in the same cluster are bitwise identical.
pub fn block_basis(centers: &DMatrix<f64>, labels: &[usize]) -> Result<DMatrix<f64>> {
    let (a, k) = centers.shape();
    if a < k {
        return Err(Error::Structural(format!("{a} clusters cannot span {k} dimensions")));
    }
    let mut sizes = vec![0usize; a];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.contains(&0) {
        return Err(Error::Structural("empty cluster in block basis".into()));
    }
    let root: Vec<f64> = sizes.iter().map(|&s| (s as f64).sqrt()).collect();
    let scaled = DMatrix::from_fn(a, k, |i, c| root[i] * centers[(i, c)]);
    let qr = scaled.col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].abs();
    if lead == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= RANK_TOL * lead) {
        return Err(Error::Structural(format!("cluster-center matrix has rank < {k}; the {k}-dimensional span degenerates")));
    }
    let q = qr.q();
    Ok(DMatrix::from_fn(labels.len(), k, |row, c| {
        let l = labels[row];
        q[(l, c)] / root[l]
    }))
}

#[derive(Debug, Clone, Copy)]
pub struct ReconstructOptions {
    pub restarts: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { restarts: DEFAULT_RESTARTS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// Piecewise constant on `row_partition × col_partition`, rank ≤ k.
    pub b_hat: DenseMatrix,
    /// `a × b` block values of `b_hat`.
    pub block_values: DMatrix<f64>,
    /// `‖A − B̂‖`.
    pub residual_norm: f64,
    pub row_partition: Vec<usize>,
    pub col_partition: Vec<usize>,
    /// Row indices grouped by cluster (stable within a cluster).
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
    /// `V`, `m × k`.
    pub aligned_left: DMatrix<f64>,
    /// `U`, `n × k`.
    pub aligned_right: DMatrix<f64>,
    /// `∑ ‖y_i − v_i‖²`.
    pub left_alignment_error: f64,
    /// `∑ ‖x_i − u_i‖²`.
    pub right_alignment_error: f64,
    /// `z_1..z_k`.
    pub singular_values: Vec<f64>,
    /// `z_{k+1}`, zero when `k = min(m, n)`.
    pub next_singular_value: f64,
    /// `z_1 (∑‖q_i‖ + ∑‖r_i‖ + ∑‖r_i‖‖q_i‖) + z_{k+1}`, an upper bound on
    /// the residual norm.
    pub residual_bound: f64,
    /// k-means objective of the row (column) representatives.
    pub row_variance: f64,
    pub col_variance: f64,
    /// `z_{k+1}` within 1% of `z_k`: the gap hypothesis is unverified.
    pub weak_gap: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub a: usize,
    pub b: usize,
    pub residual_norm: f64,
    pub residual_bound: f64,
    pub residual_over_sqrt_m_plus_n: f64,
    pub singular_values: Vec<f64>,
    pub next_singular_value: f64,
    pub left_alignment_error: f64,
    pub right_alignment_error: f64,
    pub row_variance: f64,
    pub col_variance: f64,
    pub weak_gap: bool,
    pub block_values: Vec<Vec<f64>>,
}

impl ReconstructionResult {
    pub fn report(&self) -> ReconstructionReport {
        let (m, n) = self.b_hat.shape();
        ReconstructionReport {
            m,
            n,
            k: self.singular_values.len(),
            a: self.block_values.nrows(),
            b: self.block_values.ncols(),
            residual_norm: self.residual_norm,
            residual_bound: self.residual_bound,
            residual_over_sqrt_m_plus_n: self.residual_norm / ((m + n) as f64).sqrt(),
            singular_values: self.singular_values.clone(),
            next_singular_value: self.next_singular_value,
            left_alignment_error: self.left_alignment_error,
            right_alignment_error: self.right_alignment_error,
            row_variance: self.row_variance,
            col_variance: self.col_variance,
            weak_gap: self.weak_gap,
            block_values: self.block_values.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

pub fn reconstruct(a: &DenseMatrix, k: usize, row_blocks: usize, col_blocks: usize, seed: u64) -> Result<ReconstructionResult> {
    reconstruct_with(a, k, row_blocks, col_blocks, seed, ReconstructOptions::default())
}

/// The full pipeline: top-`k` SVD, k-means on both sides, piecewise-constant
/// bases from the cluster centers, Procrustes alignment, and
/// `B̂ = ∑ z_i v_i u_iᵀ`.
pub fn reconstruct_with(
    a: &DenseMatrix,
    k: usize,
    row_blocks: usize,
    col_blocks: usize,
    seed: u64,
    opts: ReconstructOptions,
) -> Result<ReconstructionResult> {
    let (m, n) = a.shape();
    if k == 0 {
        return Err(Error::NoStructure);
    }
    if k > row_blocks.min(col_blocks) {
        return Err(Error::Parameter(format!("k = {k} exceeds min(a, b) = {}", row_blocks.min(col_blocks))));
    }
    if row_blocks > m || col_blocks > n {
        return Err(Error::Parameter(format!("{row_blocks}x{col_blocks} blocks do not fit a {m}x{n} matrix")));
    }
    let svd = thin_svd(a, (k + 1).min(m.min(n)))?;
    let z: Vec<f64> = svd.singular_values[..k].to_vec();
    let next = svd.singular_values.get(k).copied().unwrap_or(0.0);
    let y = svd.left_vectors.columns(0, k).into_owned();
    let x = svd.right_vectors.columns(0, k).into_owned();

    let rows = kmeans(&Representation::unweighted(y.clone())?, row_blocks, derive_seed(seed, 0), opts.restarts)?;
    let cols = kmeans(&Representation::unweighted(x.clone())?, col_blocks, derive_seed(seed, 1), opts.restarts)?;

    let v_prime = block_basis(&rows.centers, &rows.assignment)?;
    let u_prime = block_basis(&cols.centers, &cols.assignment)?;
    let left = align_orthonormal(&y, &v_prime)?;
    let right = align_orthonormal(&x, &u_prime)?;

    let block_values = block_core(&left.aligned, &rows, &right.aligned, &cols, &z);
    let b_hat = DenseMatrix::from_fn(m, n, |r, c| block_values[(rows.assignment[r], cols.assignment[c])])?;
    let residual_norm = spectral_norm(&(a - &b_hat));

    let r_norms: Vec<f64> = (&y - &left.aligned).column_iter().map(|c| c.norm()).collect();
    let q_norms: Vec<f64> = (&x - &right.aligned).column_iter().map(|c| c.norm()).collect();
    let cross: f64 = r_norms.iter().zip(&q_norms).map(|(r, q)| r * q).sum();
    let residual_bound = z[0] * (q_norms.iter().sum::<f64>() + r_norms.iter().sum::<f64>() + cross) + next;

    Ok(ReconstructionResult {
        residual_norm,
        block_values,
        row_order: grouped_order(&rows.assignment),
        col_order: grouped_order(&cols.assignment),
        aligned_left: left.aligned,
        aligned_right: right.aligned,
        left_alignment_error: left.error,
        right_alignment_error: right.error,
        weak_gap: next >= 0.99 * z[k - 1],
        singular_values: z,
        next_singular_value: next,
        residual_bound,
        row_variance: rows.within_variance,
        col_variance: cols.within_variance,
        row_partition: rows.assignment,
        col_partition: cols.assignment,
        b_hat,
    })
}

/// `a × b` values `∑_l v_l z_l u_lᵀ` read at one representative row/column
/// per cluster.
fn block_core(v: &DMatrix<f64>, rows: &Clustering, u: &DMatrix<f64>, cols: &Clustering, z: &[f64]) -> DMatrix<f64> {
    let first = |labels: &[usize], count: usize| -> Vec<usize> {
        (0..count).map(|c| labels.iter().position(|&l| l == c).expect("clusters are nonempty")).collect()
    };
    let row_rep = first(&rows.assignment, rows.k());
    let col_rep = first(&cols.assignment, cols.k());
    DMatrix::from_fn(rows.k(), cols.k(), |i, j| {
        z.iter().enumerate().map(|(l, zl)| v[(row_rep[i], l)] * zl * u[(col_rep[j], l)]).sum()
    })
}

fn grouped_order(labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    order
}
