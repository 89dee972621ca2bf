//! Block Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization.
//!
//! Builds orthonormal bases `Q` (right) and `P` (left) with `M Q = P R`,
//! growing `Q` by `Mᵀ` applied to the newest left directions. Ritz triplets
//! come from the SVD of the small matrix `R`. A block start (width `k + 2`)
//! keeps repeated singular values from hiding behind a single Krylov
//! direction. Convergence is declared when every requested triplet has
//! `‖Mᵀ y_i − σ_i x_i‖ ≤ tol · σ_1`; `M x_i = σ_i y_i` holds by construction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{dense, dense_svd, SvdResult};
use crate::error::Result;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    /// Seed of the start block.
    pub seed: u64,
    /// Give up on the Krylov route past this fraction of `min(m, n)`.
    pub max_fraction: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-11, seed: 0x5eed_1a2c_2057, max_fraction: 0.5 }
    }
}

struct Basis {
    cols: Vec<DVector<f64>>,
}

impl Basis {
    fn new() -> Self {
        Self { cols: Vec::new() }
    }

    fn len(&self) -> usize {
        self.cols.len()
    }

    /// Two passes of classical Gram-Schmidt against the basis; returns the
    /// projection coefficients.
    fn orthogonalize(&self, v: &mut DVector<f64>) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.cols.len()];
        for _ in 0..2 {
            for (c, q) in coeffs.iter_mut().zip(&self.cols) {
                let h = q.dot(v);
                v.axpy(-h, q, 1.0);
                *c += h;
            }
        }
        coeffs
    }

    fn to_matrix(&self, rows: usize) -> DMatrix<f64> {
        if self.cols.is_empty() {
            return DMatrix::zeros(rows, 0);
        }
        DMatrix::from_columns(&self.cols)
    }
}

pub(crate) fn gkl_svd(m: &DMatrix<f64>, k: usize, opts: &LanczosOptions) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let limit = ((rows.min(cols) as f64 * opts.max_fraction) as usize).max(k + 1);
    let frob = m.norm();
    if frob == 0.0 {
        return dense_svd(m, k);
    }
    let block = k + 2;
    let mut rng = rng_from_seed(opts.seed);
    let random_block = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<DVector<f64>> {
        (0..block).map(|_| DVector::from_fn(cols, |_, _| rng.random_range(-1.0..1.0))).collect()
    };

    let mut q = Basis::new();
    let mut p = Basis::new();
    // columns of R, one per Q column, each as long as P was when it was added
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut pending = random_block(&mut rng);
    let mut restarted = true;
    let mut iter = 0usize;

    loop {
        iter += 1;
        let mut new_q = Vec::new();
        for mut z in pending.drain(..) {
            let before = z.norm();
            if before == 0.0 {
                continue;
            }
            q.orthogonalize(&mut z);
            for prev in &new_q {
                let prev: &DVector<f64> = prev;
                let h = prev.dot(&z);
                z.axpy(-h, prev, 1.0);
            }
            let after = z.norm();
            if after > 1e-10 * before {
                new_q.push(z / after);
            }
        }

        let mut new_p = Vec::new();
        for qv in new_q {
            let mut y = m * &qv;
            let mut coeffs = p.orthogonalize(&mut y);
            let norm = y.norm();
            if norm > 1e-12 * frob {
                coeffs.push(norm);
                p.cols.push(y / norm);
                new_p.push(p.cols.len() - 1);
            }
            r_cols.push(coeffs);
            q.cols.push(qv);
        }

        let exhausted = q.len() >= cols || p.len() >= rows;
        if restarted && new_p.is_empty() && !exhausted {
            // M vanishes on the complement of span(Q): remaining values are zero
            return dense_svd(m, k);
        }

        if p.len().min(q.len()) >= k {
            if let Some(result) = ritz(m, &p, &q, &r_cols, k, opts.tol, exhausted) {
                return Ok(result);
            }
        }
        if exhausted || q.len() > limit {
            return dense_svd(m, k);
        }

        restarted = new_p.is_empty();
        pending = if restarted {
            random_block(&mut rng)
        } else {
            new_p.iter().map(|&i| m.tr_mul(&p.cols[i])).collect()
        };
        debug_assert!(iter < 10 * rows.max(cols));
    }
}

fn ritz(
    m: &DMatrix<f64>,
    p: &Basis,
    q: &Basis,
    r_cols: &[Vec<f64>],
    k: usize,
    tol: f64,
    force: bool,
) -> Option<SvdResult> {
    let (dp, dq) = (p.len(), q.len());
    let r = DMatrix::from_fn(dp, dq, |i, j| r_cols[j].get(i).copied().unwrap_or(0.0));
    let (u, s, v) = dense::svd(&r).ok()?;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    order.truncate(k);

    let pm = p.to_matrix(m.nrows());
    let qm = q.to_matrix(m.ncols());
    let x_small = DMatrix::from_fn(dp, k, |i, c| u[(i, order[c])]);
    let z_small = DMatrix::from_fn(dq, k, |j, c| v[(j, order[c])]);
    let left = &pm * x_small;
    let right = &qm * z_small;
    let values: Vec<f64> = order.iter().map(|&i| s[i]).collect();

    if !force {
        let s1 = values[0];
        for (c, &s) in values.iter().enumerate() {
            let resid = m.tr_mul(&left.column(c)) - right.column(c) * s;
            if resid.norm() > tol * s1 {
                return None;
            }
        }
    }
    Some(SvdResult { singular_values: values, left_vectors: left, right_vectors: right })
}
