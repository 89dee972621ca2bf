//! Spectral two-way classification of noisy rectangular matrices.
//!
//! A blown-up matrix `B` repeats each entry of a small `a × b` pattern
//! matrix over a rectangular block. Adding bounded noise `W` leaves `r =
//! rank(P)` singular values of order `√(mn)` while the rest stay of order
//! `√(m+n)`. This crate builds such matrices, measures the gap, clusters
//! the row and column representatives taken from the protruding singular
//! vectors, applies the correspondence (degree) normalization, and
//! rebuilds a blown-up approximation of a noisy matrix.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`model`] | pattern matrices, block structures, blow-up, noise sampling |
//! | [`spectra`] | thin SVD, exact blown-up spectra, dilation, gap detection |
//! | [`clustering`] | representatives and weighted k-means (the a/b-variance) |
//! | [`correspondence`] | degree normalization and correspondence vectors |
//! | [`reconstruct`] | subspace distances, Procrustes alignment, reconstruction |
//!
//! ```
//! use twoway_core::model::{blow_up, BlockStructure, PatternMatrix};
//! use twoway_core::spectra::exact_blownup_svd;
//!
//! let p = PatternMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
//! let bs = BlockStructure::new(vec![50, 50], vec![50, 50]).unwrap();
//! let svd = exact_blownup_svd(&p, &bs).unwrap();
//! assert!((svd.singular_values[0] - 50.0).abs() < 1e-12);
//! assert_eq!(blow_up(&p, &bs).unwrap().nrows(), 100);
//! ```

pub mod clustering;
pub mod correspondence;
pub mod error;
pub mod matrix;
pub mod model;
pub mod reconstruct;
pub mod rng;
pub mod spectra;

pub use clustering::{kmeans, representatives, structural_variance, Clustering, Representation, Side};
pub use correspondence::{corr_transform, corr_vectors, corr_weighted_variance, CorrespondenceDecomposition};
pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use model::{blow_up, sample_bernoulli_noise, sample_noise, BlockStructure, NoiseKind, NoiseSpec, PatternMatrix};
pub use reconstruct::{align_orthonormal, reconstruct, reconstruct_with, subspace_distances, ReconstructOptions, ReconstructionResult};
pub use spectra::{detect_gap, dilate, exact_blownup_svd, singular_values, DEFAULT_GAP_THRESHOLD, spectral_norm, thin_svd, GapDecision, SvdResult};
