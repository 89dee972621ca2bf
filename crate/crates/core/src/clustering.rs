//! Row/column representatives and weighted k-means.
//!
//! The k-means objective is the weighted within-cluster sum of squares
//! `∑_i ∑_{j∈A_i} w_j ‖y_j − ȳ_i‖²` with `ȳ_i` the weighted mean of cluster
//! `i`. With unit weights this is the a-variance (b-variance) of the
//! representatives; with marginal sums as weights it is the correspondence
//! variant.

use nalgebra::{DMatrix, RowDVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::spectra::SvdResult;

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_ITER: usize = 300;
const REL_TOL: f64 = 1e-9;

/// Weighted points, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    points: DMatrix<f64>,
    weights: Vec<f64>,
}

impl Representation {
    pub fn new(points: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.nrows() {
            return Err(Error::Structural(format!("{} weights for {} points", weights.len(), points.nrows())));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Parameter(format!("weight {i} = {} must be positive", weights[i])));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("points must be finite".into()));
        }
        Ok(Self { points, weights })
    }

    pub fn unweighted(points: DMatrix<f64>) -> Result<Self> {
        let n = points.nrows();
        Self::new(points, vec![1.0; n])
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn sq_dist(&self, i: usize, center: &RowDVector<f64>) -> f64 {
        self.points.row(i).iter().zip(center.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Rows of the left singular vector matrix (row items).
    Left,
    /// Rows of the right singular vector matrix (column items).
    Right,
}

/// A partition with its centers and weighted within-cluster variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster label of each point, numbered by first occurrence.
    pub assignment: Vec<usize>,
    /// `k × dim`, the weighted mean of each cluster.
    pub centers: DMatrix<f64>,
    pub within_variance: f64,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.assignment {
            sizes[l] += 1;
        }
        sizes
    }
}

/// The first `k` singular vectors on one side, read row by row, with unit weights.
pub fn representatives(svd: &SvdResult, side: Side, k: usize) -> Result<Representation> {
    if k == 0 || k > svd.k() {
        return Err(Error::Parameter(format!("need 1 <= k <= {} singular vectors, got {k}", svd.k())));
    }
    let vectors = match side {
        Side::Left => &svd.left_vectors,
        Side::Right => &svd.right_vectors,
    };
    Representation::unweighted(vectors.columns(0, k).into_owned())
}

/// Weighted means of the clusters in `labels` (zero rows for empty clusters).
pub fn weighted_centers(rep: &Representation, labels: &[usize], k: usize) -> DMatrix<f64> {
    let mut sums = DMatrix::zeros(k, rep.dim());
    let mut mass = vec![0.0; k];
    for (i, &l) in labels.iter().enumerate() {
        let w = rep.weights[i];
        for c in 0..rep.dim() {
            sums[(l, c)] += w * rep.points[(i, c)];
        }
        mass[l] += w;
    }
    for (l, &w) in mass.iter().enumerate() {
        if w > 0.0 {
            sums.row_mut(l).scale_mut(1.0 / w);
        }
    }
    sums
}

/// Weighted within-cluster sum of squares of a fixed partition, centers at
/// the weighted means. Empty clusters contribute nothing.
pub fn structural_variance(rep: &Representation, labels: &[usize]) -> Result<f64> {
    if labels.len() != rep.len() {
        return Err(Error::Structural(format!("{} labels for {} points", labels.len(), rep.len())));
    }
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let centers = weighted_centers(rep, labels, k);
    Ok(objective(rep, labels, &centers))
}

fn objective(rep: &Representation, labels: &[usize], centers: &DMatrix<f64>) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| rep.weights[i] * rep.sq_dist(i, &centers.row(l).into_owned()))
        .sum()
}

/// Renumbers labels by first occurrence.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Whether two labelings describe the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && canonicalize(a) == canonicalize(b)
}

/// Weighted k-means: best of `restarts` k-means++ seeded Lloyd runs.
///
/// Run `i` draws from the stream `derive_seed(seed, i)`; equal objectives
/// keep the earlier run. Lloyd iterations stop once the relative objective
/// change drops below 1e-9 or after 300 iterations. A cluster that empties
/// is re-seeded with the point farthest from its own center.
pub fn kmeans(rep: &Representation, k: usize, seed: u64, restarts: usize) -> Result<Clustering> {
    if k == 0 || k > rep.len() {
        return Err(Error::Parameter(format!("cannot form {k} clusters from {} points", rep.len())));
    }
    if restarts == 0 {
        return Err(Error::Parameter("restarts must be at least 1".into()));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for run in 0..restarts {
        let labels = lloyd(rep, k, derive_seed(seed, run as u64));
        let obj = structural_variance(rep, &labels)?;
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((labels, obj));
        }
    }
    let (labels, _) = best.expect("restarts >= 1");
    let assignment = canonicalize(&labels);
    let centers = weighted_centers(rep, &assignment, k);
    let within_variance = structural_variance(rep, &assignment)?;
    Ok(Clustering { assignment, centers, within_variance })
}

fn plus_plus_seeds(rep: &Representation, k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let n = rep.len();
    let mut centers = DMatrix::zeros(k, rep.dim());
    let first = sample_index(&rep.weights, rng);
    centers.set_row(0, &rep.points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| rep.sq_dist(i, &centers.row(0).into_owned())).collect();
    for c in 1..k {
        let scores: Vec<f64> = d2.iter().zip(&rep.weights).map(|(d, w)| d * w).collect();
        let idx = if scores.iter().sum::<f64>() > 0.0 { sample_index(&scores, rng) } else { sample_index(&rep.weights, rng) };
        centers.set_row(c, &rep.points.row(idx));
        let center = centers.row(c).into_owned();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(rep.sq_dist(i, &center));
        }
    }
    centers
}

fn sample_index(scores: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = scores.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, &s) in scores.iter().enumerate() {
        if target < s {
            return i;
        }
        target -= s;
    }
    scores.iter().rposition(|&s| s > 0.0).unwrap_or(0)
}

fn assign(rep: &Representation, centers: &DMatrix<f64>, labels: &mut [usize]) {
    let rows: Vec<RowDVector<f64>> = (0..centers.nrows()).map(|c| centers.row(c).into_owned()).collect();
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in rows.iter().enumerate() {
            let d = rep.sq_dist(i, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *label = best;
    }
}

/// Moves the farthest point of a multi-member cluster into each empty cluster.
fn reseed_empty(rep: &Representation, k: usize, labels: &mut [usize]) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let centers = weighted_centers(rep, labels, k);
        let far = (0..rep.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&i, &j| {
                let di = rep.sq_dist(i, &centers.row(labels[i]).into_owned());
                let dj = rep.sq_dist(j, &centers.row(labels[j]).into_owned());
                di.total_cmp(&dj).then(j.cmp(&i))
            })
            .expect("k <= number of points");
        labels[far] = empty;
    }
}

fn lloyd(rep: &Representation, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut centers = plus_plus_seeds(rep, k, &mut rng);
    let mut labels = vec![0usize; rep.len()];
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_ITER {
        assign(rep, &centers, &mut labels);
        reseed_empty(rep, k, &mut labels);
        centers = weighted_centers(rep, &labels, k);
        let obj = objective(rep, &labels, &centers);
        debug_assert!(obj <= prev * (1.0 + 1e-12) + 1e-300, "Lloyd objective increased: {prev} -> {obj}");
        if obj == 0.0 || (prev - obj).abs() <= REL_TOL * prev {
            break;
        }
        prev = obj;
    }
    labels
}

/// Smallest cluster count whose successor lowers the variance by less than
/// 10% of the one-cluster variance. A heuristic for when the block counts are unknown.
pub fn suggest_cluster_count(rep: &Representation, max_k: usize, seed: u64, restarts: usize) -> Result<usize> {
    let max_k = max_k.min(rep.len());
    if max_k == 0 {
        return Err(Error::Parameter("max_k must be positive".into()));
    }
    let total = kmeans(rep, 1, seed, restarts)?.within_variance;
    let mut prev = total;
    for k in 1..max_k {
        let next = kmeans(rep, k + 1, seed, restarts)?.within_variance;
        if prev == 0.0 || (prev - next) < 0.1 * total {
            return Ok(k);
        }
        prev = next;
    }
    Ok(max_k)
}
