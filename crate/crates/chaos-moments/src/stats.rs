//! Seed derivation, chunk-deterministic sample generation, empirical
//! quantiles, Wilson intervals and the percentile bootstrap.
//!
//! All randomness flows from one `u64` seed. Work is split into fixed-size
//! chunks; chunk `c` of purpose `tag` uses a ChaCha stream derived from
//! `(seed, tag)` with stream id `c`. The merged output is therefore
//! independent of how many workers ran the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec;

/// Replicates per RNG chunk. Fixed so outputs never depend on thread count.
pub const CHUNK: usize = 8192;

/// 97.5% normal quantile, for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed for a named purpose.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(master ^ splitmix64(tag))
}

/// RNG for chunk `chunk` of the stream identified by `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Unit exponential draw by inverse transform.
pub fn exp_draw<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>();
    -(-u).ln_1p()
}

/// Generate `count` values with `gen`, chunked and order-stable.
pub fn generate_chunked<F>(seed: u64, count: usize, gen: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK);
    let parts = exec::map_range(chunks, |c| {
        let mut rng = chunk_rng(seed, c as u64);
        let len = CHUNK.min(count - c * CHUNK);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(gen(&mut rng));
        }
        out
    });
    let mut merged = Vec::with_capacity(count);
    for p in parts {
        merged.extend_from_slice(&p);
    }
    merged
}

/// Empirical quantile at level `q` of a sorted slice (inverted-CDF rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Percentile-bootstrap 95% intervals for the moment norms
/// `(mean x^p)^(1/p)` at every `p` in `p_grid`, using shared resample
/// indices across the grid. Returns one `(lo, hi)` per `p`.
pub fn bootstrap_moment_cis(
    samples: &[f64],
    p_grid: &[f64],
    resamples: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    assert!(!samples.is_empty());
    let n = samples.len();
    // Powers are precomputed once; each resample is then pure gather/add.
    let powers: Vec<Vec<f64>> = p_grid
        .iter()
        .map(|&p| samples.iter().map(|&s| s.powf(p)).collect())
        .collect();
    let stats = exec::map_range(resamples, |r| {
        let mut rng = chunk_rng(seed, r as u64);
        let mut sums = vec![0.0f64; p_grid.len()];
        for _ in 0..n {
            let idx = rng.gen_range(0..n);
            for (j, pw) in powers.iter().enumerate() {
                sums[j] += pw[idx];
            }
        }
        sums.iter()
            .zip(p_grid)
            .map(|(&s, &p)| (s / n as f64).powf(1.0 / p))
            .collect::<Vec<f64>>()
    });
    (0..p_grid.len())
        .map(|j| {
            let mut col: Vec<f64> = stats.iter().map(|row| row[j]).collect();
            col.sort_by(f64::total_cmp);
            (quantile_sorted(&col, 0.025), quantile_sorted(&col, 0.975))
        })
        .collect()
}
