//! Fixtures shared by the benchmarks.

use driftex::assign::CostMatrix;
use driftex::random::seeded;
use driftex::synth::{sample_gmm, GmmSpec};
use driftex::{Dataset, FeatureVector};
use rand::Rng;

/// Two-bin 2/2/2 Gaussian mixture sample of size `n`.
pub fn mixture_archive(n: usize, seed: u64) -> Dataset {
    sample_gmm(&GmmSpec::new(2, 2, 2, seed), n, seed.wrapping_add(1)).expect("valid mixture")
}

/// Uniform costs in `[0, 1)`.
pub fn random_costs(rows: usize, cols: usize, seed: u64) -> CostMatrix {
    let mut rng = seeded(seed);
    let entries: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random::<f64>()).collect())
        .collect();
    CostMatrix::from_finite(&entries).expect("finite costs")
}

pub fn random_points(n: usize, dim: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| FeatureVector::new((0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()).expect("finite"))
        .collect()
}
