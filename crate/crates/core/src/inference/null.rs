//! Monte Carlo approximation of the weighted chi-square null law
//! `Σ_j λ_j Y_j²` with `Y_j` iid standard normal.
//!
//! Draws are produced in fixed-size chunks; chunk `c` reads ChaCha8 stream
//! `c` under the caller's seed, so the sample does not depend on how many
//! worker threads take part.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::quantiles::order_statistic_rank;
use crate::scalar::Scalar;

/// Draws per generator stream.
const CHUNK: usize = 512;

/// Default number of Monte Carlo draws.
pub const DEFAULT_REPLICATES: usize = 10_000;

/// Smallest number of draws accepted for a calibrated test.
pub const MIN_REPLICATES: usize = 1000;

/// Everything that determines the calibrated null distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullSpec {
    pub eigenvalues: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub bandwidth: usize,
}

/// `M` draws of `Σ λ_j Y_j²`, sorted ascending.
///
/// Zero weights contribute nothing and consume no normals.
pub fn mc_null_sample<F: Scalar>(lambdas: &[F], replicates: usize, seed: u64) -> Vec<F> {
    let weights: Vec<f64> = lambdas
        .iter()
        .map(|l| l.as_f64())
        .filter(|&l| l != 0.0)
        .collect();
    let chunks = replicates.div_ceil(CHUNK);
    let mut draws: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(replicates - c * CHUNK);
            let weights = &weights;
            (0..len)
                .map(move |_| {
                    weights
                        .iter()
                        .map(|&w| {
                            let y: f64 = StandardNormal.sample(&mut rng);
                            w * y * y
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    draws.into_iter().map(F::of).collect()
}

/// Empirical `(1 − α)` quantile of an ascending sample: the
/// `⌈(1 − α)M⌉`-th order statistic.
pub fn critical_value<F: Scalar>(sorted: &[F], alpha: f64) -> F {
    assert!(!sorted.is_empty(), "empty null sample");
    let k = order_statistic_rank(1.0 - alpha, sorted.len());
    sorted[k - 1]
}

/// `(1 + #{Q_m ≥ statistic}) / (M + 1)` for an ascending sample.
pub fn mc_p_value<F: Scalar>(sorted: &[F], statistic: F) -> f64 {
    let below = sorted.partition_point(|&q| q < statistic);
    let at_least = sorted.len() - below;
    (1 + at_least) as f64 / (sorted.len() + 1) as f64
}
