//! Seeded Monte Carlo for chaoses and the comparison reports that check the
//! two-sided bounds empirically.
//!
//! Sampling is chunk-deterministic: replicate `j` depends only on the seed
//! and `j`'s chunk, never on thread count. The decoupled sampler with one
//! slot consumes its stream exactly like the undecoupled one, so order-1
//! decoupling ratios are exactly 1 per seed.

use serde::Serialize;

use crate::budget::{BudgetSet, ExponentFn};
use crate::distributions::TailDistribution;
use crate::envelope::FactorLaw;
use crate::error::{Error, Result};
use crate::exec;
use crate::norm::{chaos_norm_decoupled, chaos_norm_undecoupled};
use crate::stats::{
    bootstrap_moment_cis, chunk_rng, derive_seed, quantile_sorted, wilson_interval, CHUNK, Z95,
};
use crate::tensor::CoefficientTensor;

pub const DEFAULT_RESTARTS: u32 = 8;
pub const DEFAULT_BOOTSTRAP: usize = 400;

const TAG_SAMPLES: u64 = 0x5a;
const TAG_BOOT: u64 = 0xb0;
const TAG_BOOT_ALT: u64 = 0xb1;

/// How the chaos contracts its variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Independent variable family per coordinate slot.
    Decoupled,
    /// One family shared by all slots; needs a tetrahedral symmetric tensor.
    Undecoupled,
}

/// A sampleable chaos: coefficients, contraction mode and variable laws.
#[derive(Debug, Clone)]
pub struct ChaosInstance {
    tensor: CoefficientTensor,
    mode: Mode,
    laws: Vec<TailDistribution>,
    nonzero: Vec<(Vec<usize>, f64)>,
}

impl ChaosInstance {
    pub fn new(tensor: CoefficientTensor, mode: Mode, laws: Vec<TailDistribution>) -> Result<Self> {
        match mode {
            Mode::Decoupled => {
                if laws.len() != tensor.order() {
                    return Err(Error::InvalidParameter(format!(
                        "decoupled mode needs one law per slot ({} != {})",
                        laws.len(),
                        tensor.order()
                    )));
                }
            }
            Mode::Undecoupled => {
                if laws.len() != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "undecoupled mode needs exactly one law, got {}",
                        laws.len()
                    )));
                }
                if tensor.order() >= 2 && !(tensor.is_symmetric() && tensor.is_tetrahedral()) {
                    return Err(Error::NotTetrahedral(
                        "undecoupled sampling needs a symmetric tensor with zero diagonal".into(),
                    ));
                }
            }
        }
        let nonzero = tensor.nonzero();
        Ok(Self {
            tensor,
            mode,
            laws,
            nonzero,
        })
    }

    pub fn tensor(&self) -> &CoefficientTensor {
        &self.tensor
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn laws(&self) -> &[TailDistribution] {
        &self.laws
    }

    fn slots(&self) -> usize {
        match self.mode {
            Mode::Decoupled => self.tensor.order(),
            Mode::Undecoupled => 1,
        }
    }

    fn law_for_slot(&self, s: usize) -> &TailDistribution {
        match self.mode {
            Mode::Decoupled => &self.laws[s],
            Mode::Undecoupled => &self.laws[0],
        }
    }

    /// Budget sets matching this instance at budget `p`.
    pub fn budget_sets(&self, p: f64) -> Result<Vec<BudgetSet>> {
        let n = self.tensor.side();
        match self.mode {
            Mode::Decoupled => self
                .laws
                .iter()
                .map(|law| BudgetSet::uniform(n, ExponentFn::Law(law.clone()), p))
                .collect(),
            Mode::Undecoupled => Ok(vec![BudgetSet::uniform(
                n,
                ExponentFn::Law(self.laws[0].clone()),
                p,
            )?]),
        }
    }

    /// The deterministic norm of this instance at budget `p`.
    pub fn norm_at(&self, p: f64, restarts: u32) -> Result<f64> {
        let budgets = self.budget_sets(p)?;
        let r = match self.mode {
            Mode::Decoupled => chaos_norm_decoupled(&self.tensor, &budgets, restarts)?,
            Mode::Undecoupled => chaos_norm_undecoupled(&self.tensor, &budgets[0], restarts)?,
        };
        Ok(r.value)
    }
}

/// Draw `batch` replicates of the chaos. Deterministic in `seed` and
/// independent of worker count.
pub fn sample_chaos(inst: &ChaosInstance, seed: u64, batch: usize) -> Vec<f64> {
    let n = inst.tensor.side();
    let slots = inst.slots();
    let chunks = batch.div_ceil(CHUNK);
    let parts = exec::map_range(chunks, |c| {
        let mut rng = chunk_rng(seed, c as u64);
        let len = CHUNK.min(batch - c * CHUNK);
        let mut draws = vec![0.0f64; slots * n];
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            for s in 0..slots {
                let law = inst.law_for_slot(s);
                for i in 0..n {
                    draws[s * n + i] = law.draw(&mut rng);
                }
            }
            let mut total = 0.0;
            for (idx, a) in &inst.nonzero {
                let mut term = *a;
                for (r, &i) in idx.iter().enumerate() {
                    let s = if slots == 1 { 0 } else { r };
                    term *= draws[s * n + i];
                }
                total += term;
            }
            out.push(total);
        }
        out
    });
    let mut merged = Vec::with_capacity(batch);
    for p in parts {
        merged.extend_from_slice(&p);
    }
    merged
}

/// An empirical estimate with a 95% interval.
#[derive(Debug, Clone, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Moment estimate plus the heavy-tail diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub estimate: MCEstimate,
    /// Set when `p > 16` and the top 10 order statistics carry more than
    /// half of the p-th moment sum: plain Monte Carlo is degrading.
    pub heavy_tail: bool,
}

/// `(mean s^p)^(1/p)` with a percentile-bootstrap interval.
pub fn empirical_moment(
    samples: &[f64],
    p: f64,
    resamples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample set".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let n = samples.len() as f64;
    let powers: Vec<f64> = samples.iter().map(|&s| s.powf(p)).collect();
    let total: f64 = powers.iter().sum();
    let value = (total / n).powf(1.0 / p);
    let (lo, hi) = bootstrap_moment_cis(samples, &[p], resamples, seed)[0];
    let heavy_tail = if p > 16.0 && total > 0.0 {
        let mut top = powers.clone();
        top.sort_by(|a, b| b.total_cmp(a));
        let top10: f64 = top.iter().take(10).sum();
        top10 > 0.5 * total
    } else {
        false
    };
    Ok(MomentEstimate {
        estimate: MCEstimate {
            value,
            ci_low: lo.min(value),
            ci_high: hi.max(value),
            samples: samples.len(),
            seed,
        },
        heavy_tail,
    })
}

/// Empirical `P(S >= u)` with a Wilson interval.
pub fn empirical_tail(samples: &[f64], u: f64, seed: u64) -> Result<MCEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample set".into()));
    }
    let hits = samples.iter().filter(|&&s| s >= u).count() as u64;
    let n = samples.len() as u64;
    let (lo, hi) = wilson_interval(hits, n, Z95);
    Ok(MCEstimate {
        value: hits as f64 / n as f64,
        ci_low: lo,
        ci_high: hi,
        samples: samples.len(),
        seed,
    })
}

/// One row of the moment-vs-norm comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichRow {
    pub p: f64,
    pub empirical: MCEstimate,
    pub norm: f64,
    pub ratio: f64,
    pub heavy_tail: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    /// `max_p ratio / min_p ratio` over non-degenerate rows.
    pub band_ratio: f64,
    pub band_limit: f64,
    pub passed: bool,
}

/// Compare empirical `||S||_p` with the computed norm across `p_grid` and
/// flag if the ratio band exceeds `band_limit`.
pub fn sandwich_report(
    inst: &ChaosInstance,
    p_grid: &[f64],
    samples: usize,
    seed: u64,
    band_limit: f64,
    restarts: u32,
) -> Result<SandwichReport> {
    if p_grid.is_empty() {
        return Err(Error::InvalidParameter("empty p grid".into()));
    }
    let xs = sample_chaos(inst, derive_seed(seed, TAG_SAMPLES), samples);
    let cis = bootstrap_moment_cis(&xs, p_grid, DEFAULT_BOOTSTRAP, derive_seed(seed, TAG_BOOT));
    let n = xs.len() as f64;
    let mut rows = Vec::with_capacity(p_grid.len());
    for (j, &p) in p_grid.iter().enumerate() {
        let norm = inst.norm_at(p, restarts)?;
        let powers_total: f64 = xs.iter().map(|&s| s.powf(p)).sum();
        let value = (powers_total / n).powf(1.0 / p);
        let heavy_tail = if p > 16.0 && powers_total > 0.0 {
            let mut top: Vec<f64> = xs.iter().map(|&s| s.powf(p)).collect();
            top.sort_by(|a, b| b.total_cmp(a));
            top.iter().take(10).sum::<f64>() > 0.5 * powers_total
        } else {
            false
        };
        let degenerate = norm == 0.0;
        let ratio = if degenerate { 0.0 } else { value / norm };
        rows.push(SandwichRow {
            p,
            empirical: MCEstimate {
                value,
                ci_low: cis[j].0.min(value),
                ci_high: cis[j].1.max(value),
                samples,
                seed,
            },
            norm,
            ratio,
            heavy_tail,
            degenerate,
        });
    }
    let live: Vec<f64> = rows.iter().filter(|r| !r.degenerate).map(|r| r.ratio).collect();
    let band_ratio = if live.is_empty() {
        1.0
    } else {
        let mx = live.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mn = live.iter().copied().fold(f64::INFINITY, f64::min);
        mx / mn
    };
    Ok(SandwichReport {
        rows,
        band_ratio,
        band_limit,
        passed: band_ratio <= band_limit,
    })
}

/// One row of the tail comparison at level `t`.
#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub norm: f64,
    pub upper_threshold: f64,
    pub upper: MCEstimate,
    pub upper_bound: f64,
    pub upper_pass: bool,
    pub lower_threshold: f64,
    pub lower: MCEstimate,
    pub lower_floor: f64,
    pub lower_pass: bool,
    /// `t = 0` rows are reported but not asserted.
    pub asserted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub c_hat: f64,
    pub c_lo: f64,
    pub rows: Vec<TailRow>,
    pub passed: bool,
}

/// Calibrate tail constants on a dedicated stream: `c_hat` slightly above
/// the worst quantile-to-norm ratio, `c_lo` slightly below the best.
pub fn calibrate_tail_constants(
    inst: &ChaosInstance,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
    margin: f64,
    restarts: u32,
) -> Result<(f64, f64)> {
    let mut xs = sample_chaos(inst, derive_seed(seed, TAG_SAMPLES), samples);
    xs.sort_by(f64::total_cmp);
    let mut hi: f64 = 0.0;
    let mut lo: f64 = f64::INFINITY;
    for &t in t_grid {
        if t <= 0.0 {
            continue;
        }
        let norm = inst.norm_at(t, restarts)?;
        if norm == 0.0 {
            continue;
        }
        let q = quantile_sorted(&xs, 1.0 - (-t).exp());
        hi = hi.max(q / norm);
        lo = lo.min(q / norm);
    }
    if hi == 0.0 || !lo.is_finite() {
        return Err(Error::DegenerateInput(
            "tail calibration needs a positive norm on the grid".into(),
        ));
    }
    Ok((margin * hi, lo / margin))
}

/// Check `P(S >= c_hat * norm_t) <= e^-t` (at the upper 95% edge) and
/// `P(S >= c_lo * norm_t) >= min(floor, e^-t)` (at the lower edge) on an
/// evaluation stream disjoint from the calibration stream.
pub fn tail_report(
    inst: &ChaosInstance,
    t_grid: &[f64],
    c_hat: f64,
    c_lo: f64,
    samples: usize,
    seed: u64,
    floor: f64,
    restarts: u32,
) -> Result<TailReport> {
    for &t in t_grid {
        if t > 0.0 && (-t).exp() < 30.0 / samples as f64 {
            return Err(Error::ResolutionExceeded(format!(
                "e^-{t} is below 30/{samples}; raise samples or lower t"
            )));
        }
    }
    let xs = sample_chaos(inst, derive_seed(seed, TAG_SAMPLES), samples);
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut passed = true;
    for &t in t_grid {
        let norm = inst.norm_at(t, restarts)?;
        let upper_threshold = c_hat * norm;
        let lower_threshold = c_lo * norm;
        let upper = empirical_tail(&xs, upper_threshold, seed)?;
        let lower = empirical_tail(&xs, lower_threshold, seed)?;
        let upper_bound = (-t).exp();
        let lower_floor = floor.min(upper_bound);
        let asserted = t > 0.0;
        let upper_pass = upper.ci_high <= upper_bound;
        let lower_pass = lower.ci_low >= lower_floor.min(1.0) || lower.value >= lower_floor;
        if asserted {
            passed &= upper_pass && lower_pass;
        }
        rows.push(TailRow {
            t,
            norm,
            upper_threshold,
            upper,
            upper_bound,
            upper_pass,
            lower_threshold,
            lower,
            lower_floor,
            lower_pass,
            asserted,
        });
    }
    Ok(TailReport {
        c_hat,
        c_lo,
        rows,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecouplingRow {
    pub p: f64,
    pub undecoupled: MCEstimate,
    pub decoupled: MCEstimate,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecouplingReport {
    pub rows: Vec<DecouplingRow>,
    pub band: (f64, f64),
    pub passed: bool,
}

/// Moment ratios between the chaos and its decoupled version (fresh
/// independent variable family per slot). Both samplers share one stream,
/// so the order-1 ratio is exactly 1 per seed.
pub fn decoupling_report(
    tensor: &CoefficientTensor,
    dist: &TailDistribution,
    p_grid: &[f64],
    samples: usize,
    seed: u64,
    band: (f64, f64),
) -> Result<DecouplingReport> {
    let d = tensor.order();
    let inst_u = ChaosInstance::new(tensor.clone(), Mode::Undecoupled, vec![dist.clone()])?;
    let inst_d = ChaosInstance::new(tensor.clone(), Mode::Decoupled, vec![dist.clone(); d])?;
    let xs_u = sample_chaos(&inst_u, derive_seed(seed, TAG_SAMPLES), samples);
    let xs_d = sample_chaos(&inst_d, derive_seed(seed, TAG_SAMPLES), samples);
    let cis_u = bootstrap_moment_cis(&xs_u, p_grid, DEFAULT_BOOTSTRAP, derive_seed(seed, TAG_BOOT));
    let cis_d = bootstrap_moment_cis(
        &xs_d,
        p_grid,
        DEFAULT_BOOTSTRAP,
        derive_seed(seed, TAG_BOOT_ALT),
    );
    let n = samples as f64;
    let mut rows = Vec::with_capacity(p_grid.len());
    let mut passed = true;
    for (j, &p) in p_grid.iter().enumerate() {
        let mu = (xs_u.iter().map(|&s| s.powf(p)).sum::<f64>() / n).powf(1.0 / p);
        let md = (xs_d.iter().map(|&s| s.powf(p)).sum::<f64>() / n).powf(1.0 / p);
        let ratio = if md == 0.0 { 1.0 } else { mu / md };
        let pass = ratio >= band.0 && ratio <= band.1;
        passed &= pass;
        rows.push(DecouplingRow {
            p,
            undecoupled: MCEstimate {
                value: mu,
                ci_low: cis_u[j].0.min(mu),
                ci_high: cis_u[j].1.max(mu),
                samples,
                seed,
            },
            decoupled: MCEstimate {
                value: md,
                ci_low: cis_d[j].0.min(md),
                ci_high: cis_d[j].1.max(md),
                samples,
                seed,
            },
            ratio,
            pass,
        });
    }
    Ok(DecouplingReport {
        rows,
        band,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationRow {
    pub p: f64,
    pub x_chaos: MCEstimate,
    pub y_chaos: MCEstimate,
    pub ratio: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub rows: Vec<FactorizationRow>,
    pub band_ratio: f64,
    pub band_limit: f64,
    pub passed: bool,
}

/// Compare moments of the chaos in the parent variables against the chaos
/// in the factor products `prod_l Y^(r)_{i,l}` (one factor law per slot).
pub fn factorization_report(
    tensor: &CoefficientTensor,
    x_laws: &[TailDistribution],
    factor_laws: &[FactorLaw],
    p_grid: &[f64],
    samples: usize,
    seed: u64,
    band_limit: f64,
) -> Result<FactorizationReport> {
    let d = tensor.order();
    if x_laws.len() != d || factor_laws.len() != d {
        return Err(Error::InvalidParameter(format!(
            "need one parent law and one factor law per slot (order {d})"
        )));
    }
    let inst_x = ChaosInstance::new(tensor.clone(), Mode::Decoupled, x_laws.to_vec())?;
    let xs = sample_chaos(&inst_x, derive_seed(seed, TAG_SAMPLES), samples);
    let ys = sample_factor_chaos(tensor, factor_laws, derive_seed(seed, TAG_SAMPLES + 1), samples);
    let cis_x = bootstrap_moment_cis(&xs, p_grid, DEFAULT_BOOTSTRAP, derive_seed(seed, TAG_BOOT));
    let cis_y = bootstrap_moment_cis(
        &ys,
        p_grid,
        DEFAULT_BOOTSTRAP,
        derive_seed(seed, TAG_BOOT_ALT),
    );
    let n = samples as f64;
    let mut rows = Vec::with_capacity(p_grid.len());
    for (j, &p) in p_grid.iter().enumerate() {
        let mx = (xs.iter().map(|&s| s.powf(p)).sum::<f64>() / n).powf(1.0 / p);
        let my = (ys.iter().map(|&s| s.powf(p)).sum::<f64>() / n).powf(1.0 / p);
        let degenerate = mx == 0.0 && my == 0.0;
        let ratio = if degenerate { 1.0 } else { mx / my };
        rows.push(FactorizationRow {
            p,
            x_chaos: MCEstimate {
                value: mx,
                ci_low: cis_x[j].0.min(mx),
                ci_high: cis_x[j].1.max(mx),
                samples,
                seed,
            },
            y_chaos: MCEstimate {
                value: my,
                ci_low: cis_y[j].0.min(my),
                ci_high: cis_y[j].1.max(my),
                samples,
                seed,
            },
            ratio,
            degenerate,
        });
    }
    let live: Vec<f64> = rows.iter().filter(|r| !r.degenerate).map(|r| r.ratio).collect();
    let band_ratio = if live.is_empty() {
        1.0
    } else {
        live.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            / live.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(FactorizationReport {
        rows,
        band_ratio,
        band_limit,
        passed: band_ratio <= band_limit,
    })
}

/// Sample the chaos with each variable replaced by its factor product.
fn sample_factor_chaos(
    tensor: &CoefficientTensor,
    factor_laws: &[FactorLaw],
    seed: u64,
    batch: usize,
) -> Vec<f64> {
    let n = tensor.side();
    let d = tensor.order();
    let y_dists: Vec<TailDistribution> = factor_laws
        .iter()
        .map(|f| f.factor_distribution())
        .collect();
    let orders: Vec<u32> = factor_laws.iter().map(|f| f.order()).collect();
    let nonzero = tensor.nonzero();
    let chunks = batch.div_ceil(CHUNK);
    let parts = exec::map_range(chunks, |c| {
        let mut rng = chunk_rng(seed, c as u64);
        let len = CHUNK.min(batch - c * CHUNK);
        let mut draws = vec![0.0f64; d * n];
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            for s in 0..d {
                for i in 0..n {
                    let mut prod = 1.0;
                    for _ in 0..orders[s] {
                        prod *= y_dists[s].draw(&mut rng);
                    }
                    draws[s * n + i] = prod;
                }
            }
            let mut total = 0.0;
            for (idx, a) in &nonzero {
                let mut term = *a;
                for (r, &i) in idx.iter().enumerate() {
                    term *= draws[r * n + i];
                }
                total += term;
            }
            out.push(total);
        }
        out
    });
    let mut merged = Vec::with_capacity(batch);
    for p in parts {
        merged.extend_from_slice(&p);
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::ConvexEnvelope;
    use crate::stats::generate_chunked;
    use approx::assert_relative_eq;

    fn e1_exponential() -> ChaosInstance {
        let a = CoefficientTensor::basis_vector(1).unwrap();
        ChaosInstance::new(a, Mode::Decoupled, vec![TailDistribution::exponential()]).unwrap()
    }

    #[test]
    fn order_one_basis_chaos_is_the_law_itself() {
        let inst = e1_exponential();
        let xs = sample_chaos(&inst, 5, 10_000);
        let direct = generate_chunked(5, 10_000, |rng| TailDistribution::exponential().draw(rng));
        assert_eq!(xs, direct);
    }

    #[test]
    fn zero_tensor_samples_are_zero() {
        let a = CoefficientTensor::new(2, 2, vec![0.0; 4], true, true).unwrap();
        let inst = ChaosInstance::new(a, Mode::Undecoupled, vec![TailDistribution::exponential()])
            .unwrap();
        let xs = sample_chaos(&inst, 1, 4096);
        assert!(xs.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn undecoupled_pair_mean_is_two() {
        let a = CoefficientTensor::new(2, 2, vec![0.0, 1.0, 1.0, 0.0], true, true).unwrap();
        let inst = ChaosInstance::new(a, Mode::Undecoupled, vec![TailDistribution::exponential()])
            .unwrap();
        let xs = sample_chaos(&inst, 9, 400_000);
        assert!(xs.iter().all(|&x| x >= 0.0));
        let est = empirical_moment(&xs, 1.0, DEFAULT_BOOTSTRAP, 2).unwrap().estimate;
        assert!(
            est.ci_low <= 2.0 && 2.0 <= est.ci_high,
            "E S = 2 not in [{}, {}]",
            est.ci_low,
            est.ci_high
        );
    }

    #[test]
    fn empirical_moment_on_constants_and_known_laws() {
        let c = vec![3.25; 500];
        for p in [1.0, 2.0, 7.0] {
            let est = empirical_moment(&c, p, 50, 1).unwrap().estimate;
            assert_relative_eq!(est.value, 3.25, max_relative = 1e-12);
        }
        let xs = generate_chunked(33, 1_000_000, crate::stats::exp_draw);
        let est = empirical_moment(&xs, 2.0, DEFAULT_BOOTSTRAP, 4).unwrap().estimate;
        let truth = 2f64.sqrt();
        assert!(est.ci_low <= truth && truth <= est.ci_high);

        let w = TailDistribution::weibull(0.5).unwrap();
        let ws = generate_chunked(34, 1_000_000, |rng| w.draw(rng));
        let est = empirical_moment(&ws, 4.0, DEFAULT_BOOTSTRAP, 5).unwrap().estimate;
        let truth = w.moment_norm(4.0).unwrap();
        assert!(
            est.ci_low <= truth && truth <= est.ci_high,
            "{truth} not in [{}, {}]",
            est.ci_low,
            est.ci_high
        );
    }

    #[test]
    fn empirical_moments_are_monotone_in_p_on_fixed_samples() {
        let xs = generate_chunked(3, 50_000, crate::stats::exp_draw);
        let mut prev = 0.0;
        for p in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let est = empirical_moment(&xs, p, 10, 1).unwrap().estimate.value;
            assert!(est >= prev - 1e-12);
            prev = est;
        }
    }

    #[test]
    fn empirical_tail_edges() {
        let xs = generate_chunked(21, 100_000, crate::stats::exp_draw);
        assert_eq!(empirical_tail(&xs, 0.0, 0).unwrap().value, 1.0);
        let above = xs.iter().copied().fold(0.0, f64::max) + 1.0;
        let top = empirical_tail(&xs, above, 0).unwrap();
        assert_eq!(top.value, 0.0);
        assert!(top.ci_high > 0.0);
        let est = empirical_tail(&xs, 100f64.ln(), 0).unwrap();
        assert!(est.ci_low <= 0.01 && 0.01 <= est.ci_high);
    }

    #[test]
    fn heavy_tail_warning_triggers_on_degenerate_concentration() {
        let mut xs = vec![0.5; 5000];
        xs[0] = 100.0;
        let est = empirical_moment(&xs, 20.0, 10, 1).unwrap();
        assert!(est.heavy_tail);
        let uniform = vec![1.0; 5000];
        assert!(!empirical_moment(&uniform, 20.0, 10, 1).unwrap().heavy_tail);
    }

    #[test]
    fn sandwich_on_order_one_exponential_stays_in_band() {
        let inst = e1_exponential();
        let rep = sandwich_report(&inst, &[1.0, 2.0, 4.0, 8.0], 200_000, 7, 16.0, 4).unwrap();
        assert!(rep.passed, "band ratio {}", rep.band_ratio);
        for row in &rep.rows {
            // true ratio is Gamma(p+1)^(1/p) / (1+p), inside [1/(2e), 1]
            assert!(row.ratio > 1.0 / (2.0 * std::f64::consts::E) * 0.9);
            assert!(row.ratio < 1.05);
            assert_relative_eq!(row.norm, 1.0 + row.p, max_relative = 1e-9);
        }
    }

    #[test]
    fn degenerate_sandwich_rows_flagged() {
        let a = CoefficientTensor::new(2, 2, vec![0.0; 4], true, true).unwrap();
        let inst =
            ChaosInstance::new(a, Mode::Undecoupled, vec![TailDistribution::exponential()])
                .unwrap();
        let rep = sandwich_report(&inst, &[1.0, 2.0], 10_000, 3, 16.0, 2).unwrap();
        assert!(rep.passed);
        assert!(rep.rows.iter().all(|r| r.degenerate));
    }

    #[test]
    fn tail_report_calibrated_on_disjoint_seed_passes() {
        let inst = e1_exponential();
        let t_grid = [1.0, 3.0, 5.0];
        let (c_hat, c_lo) =
            calibrate_tail_constants(&inst, &t_grid, 200_000, 1111, 1.15, 4).unwrap();
        let rep = tail_report(&inst, &t_grid, c_hat, c_lo, 200_000, 2222, 0.25, 4).unwrap();
        assert!(rep.passed, "rows: {:?}", rep.rows.iter().map(|r| r.upper_pass).collect::<Vec<_>>());
        // e(1 + t) is a valid closed-form threshold for the exponential law.
        let direct = tail_report(
            &inst,
            &t_grid,
            std::f64::consts::E,
            0.1,
            200_000,
            2222,
            0.25,
            4,
        )
        .unwrap();
        assert!(direct.passed);
    }

    #[test]
    fn tail_report_checks_resolution() {
        let inst = e1_exponential();
        assert!(matches!(
            tail_report(&inst, &[20.0], 1.0, 0.5, 10_000, 1, 0.25, 2),
            Err(Error::ResolutionExceeded(_))
        ));
    }

    #[test]
    fn decoupling_is_identity_for_order_one() {
        let a = CoefficientTensor::from_vector(&[1.0, 0.5]).unwrap();
        let rep = decoupling_report(
            &a,
            &TailDistribution::exponential(),
            &[1.0, 2.0, 4.0],
            50_000,
            13,
            (1.0 / 8.0, 8.0),
        )
        .unwrap();
        assert!(rep.passed);
        for row in rep.rows {
            assert_eq!(row.ratio, 1.0, "order-1 decoupling must be exact per seed");
        }
    }

    #[test]
    fn decoupling_pair_stays_in_band() {
        let a = CoefficientTensor::new(2, 2, vec![0.0, 1.0, 1.0, 0.0], true, true).unwrap();
        let rep = decoupling_report(
            &a,
            &TailDistribution::exponential(),
            &[1.0, 2.0, 4.0],
            400_000,
            29,
            (1.0 / 8.0, 8.0),
        )
        .unwrap();
        assert!(rep.passed);
        // Means coincide: E S = E S' = 2.
        let r0 = &rep.rows[0];
        assert!(r0.undecoupled.ci_low <= 2.0 && 2.0 <= r0.undecoupled.ci_high);
        assert!(r0.decoupled.ci_low <= 2.0 && 2.0 <= r0.decoupled.ci_high);
    }

    #[test]
    fn factorization_identity_ratio_is_one() {
        // Factor law equal to the parent (tiny flat head), k = 1.
        let t0 = 1e-9;
        let h = ConvexEnvelope::from_knots(vec![(t0, 0.0), (40.0, 40.0 - t0)]).unwrap();
        let dist = TailDistribution::exponential();
        let law = crate::envelope::FactorLaw::from_parts(h, 1, dist.clone(), 1.0);
        let a = CoefficientTensor::basis_vector(1).unwrap();
        let rep =
            factorization_report(&a, &[dist], &[law], &[1.0, 2.0, 4.0], 400_000, 31, 4.0).unwrap();
        assert!(rep.passed);
        for row in &rep.rows {
            assert!((row.ratio - 1.0).abs() < 0.05, "p = {}: ratio {}", row.p, row.ratio);
        }
    }

    #[test]
    fn ci_coverage_sanity_for_known_moment() {
        // 100 reseeded runs; the true sqrt(2) must fall inside the 95% CI
        // at least 90 times.
        let truth = 2f64.sqrt();
        let mut covered = 0;
        for run in 0..100u64 {
            let xs = generate_chunked(derive_seed(1000, run), 2000, crate::stats::exp_draw);
            let est = empirical_moment(&xs, 2.0, 200, derive_seed(2000, run))
                .unwrap()
                .estimate;
            if est.ci_low <= truth && truth <= est.ci_high {
                covered += 1;
            }
        }
        assert!(covered >= 90, "coverage {covered}/100");
    }
}
