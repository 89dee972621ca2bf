//! Planted instances shared by the benchmarks.

use twoway_core::{blow_up, sample_noise, BlockStructure, DenseMatrix, NoiseSpec, PatternMatrix};

pub const RANK: usize = 2;

pub fn pattern() -> PatternMatrix {
    PatternMatrix::new(vec![vec![0.2, 0.8, 0.8], vec![0.8, 0.8, 0.2]]).expect("valid pattern")
}

/// `B + W` for the 2x3 pattern blown up to `n × n`, with Uniform(-0.5, 0.5) noise.
pub fn planted(n: usize, seed: u64) -> DenseMatrix {
    let bs = BlockStructure::equal(2, n, 3, n).expect("valid sizes");
    let b = blow_up(&pattern(), &bs).expect("blow-up");
    let w = sample_noise(n, n, &NoiseSpec::uniform(0.5, seed)).expect("noise");
    &b + &w
}
