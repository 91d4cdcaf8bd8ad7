//! Seeded Gaussian-mixture generator.

use fastk_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOptions {
    pub n: usize,
    pub d: usize,
    pub clusters: usize,
    pub spread: f64,
    pub seed: u64,
}

/// Cluster means are uniform in `[0, 1)^d`; each point picks a mean uniformly
/// and adds `spread · N(0, I)`. Coordinates are rounded to `f32` so that both
/// file formats hold them exactly.
pub fn mixture(opts: &GenOptions) -> Result<Dataset, CliError> {
    if opts.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if opts.d == 0 {
        return Err(CliError::Usage("--d must be at least 1".into()));
    }
    if opts.clusters == 0 {
        return Err(CliError::Usage("--clusters must be at least 1".into()));
    }
    if !(opts.spread >= 0.0 && opts.spread.is_finite()) {
        return Err(CliError::Usage(format!("--spread must be a finite value >= 0, got {}", opts.spread)));
    }
    if opts.n > u32::MAX as usize || opts.d > u32::MAX as usize {
        return Err(CliError::Usage("--n and --d must fit in 32 bits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let means: Vec<f64> = (0..opts.clusters * opts.d).map(|_| rng.random::<f64>()).collect();
    let mut coords = Vec::with_capacity(opts.n * opts.d);
    for _ in 0..opts.n {
        let m = rng.random_range(0..opts.clusters);
        for j in 0..opts.d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let x = means[m * opts.d + j] + opts.spread * noise;
            coords.push(x as f32 as f64);
        }
    }
    Ok(Dataset::from_flat(opts.d, coords)?)
}
