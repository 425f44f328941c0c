//! Nonnegative laws described by their tail exponent `N(t) = -ln P(X >= t)`.
//!
//! Every supported family is normalized to unit mean (the constructors pick
//! the scale), except for raw tabulated laws which carry whatever exponent
//! they are given — factor laws built from convex envelopes use those.
//!
//! Moments are evaluated in log space: `ln E X^p` either in closed form
//! (Weibull, exponential, products of exponentials) or by adaptive
//! quadrature of `int p t^(p-1) e^(-N(t)) dt`, split at the quantile points
//! `N^{-1}({1, p, 4p})` where the integrand peaks, and extended by doubling
//! until the remaining tail is negligible.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric;
use crate::stats::exp_draw;

/// Default doubling audit grid for the moment-growth condition.
pub const DEFAULT_P_GRID: [f64; 8] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];

/// Default audit grid for the tail-exponent scaling inequality.
pub const DEFAULT_SCALING_GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 100.0];

const MEAN_TOL: f64 = 1e-8;
const QUAD_REL_TOL: f64 = 1e-12;

/// Distribution family, each described through its tail exponent.
#[derive(Debug, Clone)]
pub enum Family {
    /// `P(X >= t) = exp(-(t/scale)^alpha)`.
    Weibull { alpha: f64 },
    /// Unit-rate exponential, `N(t) = t`.
    Exponential,
    /// Product of `factors` i.i.d. unit exponentials.
    ProductOfExponentials { factors: u32 },
    /// Piecewise-linear tail exponent over `(t, N)` knots, extended past the
    /// last knot with `final_slope`.
    TabulatedTail {
        knots: Vec<(f64, f64)>,
        final_slope: f64,
    },
}

/// A nonnegative random variable modeled by its tail exponent.
#[derive(Debug, Clone)]
pub struct TailDistribution {
    family: Family,
    scale: f64,
    support_upper: f64,
}

/// Outcome of a moment-growth audit (`||X||_2p <= 2^k ||X||_p` on a grid).
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub k_tested: u32,
    pub p_grid: Vec<f64>,
    pub max_ratio: f64,
    pub worst_p: f64,
    pub passed: bool,
}

/// Outcome of the tail-exponent scaling audit (`N(Ctx) >= t^(1/k) N(x)`).
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub c: f64,
    pub k: u32,
    pub min_margin: f64,
    pub worst_t: f64,
    pub worst_x: f64,
    pub skipped: usize,
    pub passed: bool,
}

/// Empirical doubling constant measured under the scaling hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct ConverseReport {
    pub c: f64,
    pub beta: f64,
    pub k_bar: f64,
    pub worst_p: f64,
}

impl TailDistribution {
    /// Unit-mean exponential.
    pub fn exponential() -> Self {
        Self {
            family: Family::Exponential,
            scale: 1.0,
            support_upper: f64::INFINITY,
        }
    }

    /// Unit-mean Weibull with shape `alpha`; the scale `1/Gamma(1 + 1/alpha)`
    /// is forced by the normalization.
    pub fn weibull(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape must be positive and finite, got {alpha}"
            )));
        }
        let scale = (-numeric::ln_gamma(1.0 + 1.0 / alpha)).exp();
        Ok(Self {
            family: Family::Weibull { alpha },
            scale,
            support_upper: f64::INFINITY,
        })
    }

    /// Product of `factors` i.i.d. unit exponentials (unit mean for free).
    ///
    /// The tail exponent has no elementary form; it is evaluated by nested
    /// peak-normalized quadrature, so cost grows quickly with `factors`.
    pub fn product_of_exponentials(factors: u32) -> Result<Self> {
        if !(1..=6).contains(&factors) {
            return Err(Error::InvalidParameter(format!(
                "product of exponentials supports 1..=6 factors, got {factors}"
            )));
        }
        Ok(Self {
            family: Family::ProductOfExponentials { factors },
            scale: 1.0,
            support_upper: f64::INFINITY,
        })
    }

    /// Tabulated tail exponent, rescaled so the mean is exactly 1.
    ///
    /// `knots` must be strictly increasing in `t` with nondecreasing
    /// nonnegative `N`; a leading `(0, 0)` knot is implied. The exponent
    /// extends past the last knot with the last segment's slope, so either
    /// that slope must be positive or `support_upper` must be finite.
    pub fn tabulated_unit_mean(knots: &[(f64, f64)], support_upper: Option<f64>) -> Result<Self> {
        let raw = Self::tabulated_raw(knots, support_upper)?;
        let mean = raw.mean();
        if !mean.is_finite() || mean <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tabulated tail has non-normalizable mean {mean}"
            )));
        }
        let rescaled = raw.rescaled(1.0 / mean);
        debug_assert!((rescaled.mean() - 1.0).abs() < MEAN_TOL);
        Ok(rescaled)
    }

    /// Tabulated tail exponent taken as-is (no unit-mean normalization).
    pub fn tabulated_raw(knots: &[(f64, f64)], support_upper: Option<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("empty knot list".into()));
        }
        let mut full = Vec::with_capacity(knots.len() + 1);
        if knots[0].0 > 0.0 {
            full.push((0.0, 0.0));
        } else if knots[0] != (0.0, 0.0) {
            return Err(Error::InvalidParameter(
                "first knot must have t >= 0 and N(0) = 0".into(),
            ));
        }
        full.extend_from_slice(knots);
        for w in full.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 || !w[1].0.is_finite() || !w[1].1.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "knots must be strictly increasing in t and nondecreasing in N, got {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        if full.len() < 2 {
            return Err(Error::InvalidParameter(
                "need at least one knot with t > 0".into(),
            ));
        }
        let (last, prev) = (full[full.len() - 1], full[full.len() - 2]);
        let final_slope = (last.1 - prev.1) / (last.0 - prev.0);
        let support_upper = support_upper.unwrap_or(f64::INFINITY);
        if !(support_upper > 0.0) {
            return Err(Error::InvalidParameter(
                "support_upper must be positive".into(),
            ));
        }
        if final_slope <= 0.0 && support_upper.is_infinite() {
            return Err(Error::InvalidParameter(
                "flat tabulated tail with unbounded support has infinite mean".into(),
            ));
        }
        Ok(Self {
            family: Family::TabulatedTail {
                knots: full,
                final_slope,
            },
            scale: 1.0,
            support_upper,
        })
    }

    fn rescaled(&self, factor: f64) -> Self {
        // X -> factor * X maps N(t) to N(t / factor).
        match &self.family {
            Family::TabulatedTail { knots, final_slope } => Self {
                family: Family::TabulatedTail {
                    knots: knots.iter().map(|&(t, n)| (t * factor, n)).collect(),
                    final_slope: final_slope / factor,
                },
                scale: 1.0,
                support_upper: self.support_upper * factor,
            },
            _ => Self {
                family: self.family.clone(),
                scale: self.scale * factor,
                support_upper: self.support_upper * factor,
            },
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support_upper(&self) -> f64 {
        self.support_upper
    }

    /// Tail exponent `N(t) = -ln P(X >= t)`; `+inf` beyond the support.
    pub fn tail_exponent(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t > self.support_upper {
            return f64::INFINITY;
        }
        let u = t / self.scale;
        match &self.family {
            Family::Exponential => u,
            Family::Weibull { alpha } => u.powf(*alpha),
            Family::ProductOfExponentials { factors } => product_exp_exponent(*factors, u),
            Family::TabulatedTail { knots, final_slope } => {
                piecewise_eval(knots, *final_slope, u)
            }
        }
    }

    /// Largest `t` with `N(t) <= y` (the inverse transform map).
    pub fn tail_exponent_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            // sup{t : N(t) = 0}; positive only for laws flat near zero.
            return match &self.family {
                Family::TabulatedTail { knots, .. } => {
                    let mut t = 0.0;
                    for &(kt, kn) in knots {
                        if kn <= 0.0 {
                            t = kt;
                        } else {
                            break;
                        }
                    }
                    t
                }
                _ => 0.0,
            };
        }
        if y.is_infinite() {
            return self.support_upper;
        }
        let base = match &self.family {
            Family::Exponential => y,
            Family::Weibull { alpha } => y.powf(1.0 / alpha),
            Family::ProductOfExponentials { .. } => {
                let f = |t: f64| self.tail_exponent(t * self.scale);
                let mut hi = 1.0;
                while f(hi) <= y && hi < 1e300 {
                    hi *= 2.0;
                }
                numeric::sup_below(f, y, 0.0, hi, 1e-12)
            }
            Family::TabulatedTail { knots, final_slope } => {
                piecewise_inverse(knots, *final_slope, y)
            }
        };
        (base * self.scale).min(self.support_upper)
    }

    /// Exact mean `int_0^inf e^(-N(t)) dt`.
    ///
    /// Closed form for the normalized families and for piecewise-linear
    /// exponents; used both for normalization and for the factor-law mean
    /// bounds.
    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::Exponential | Family::Weibull { .. } | Family::ProductOfExponentials { .. } => {
                // Constructors normalize these to unit mean.
                1.0
            }
            Family::TabulatedTail { knots, final_slope } => {
                piecewise_mean(knots, *final_slope, self.support_upper)
            }
        }
    }

    /// `ln E X^p` with closed forms where available, quadrature otherwise.
    pub fn log_moment(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        match &self.family {
            Family::Exponential => Ok(numeric::ln_gamma(p + 1.0)),
            Family::Weibull { alpha } => {
                Ok(p * self.scale.ln() + numeric::ln_gamma(1.0 + p / alpha))
            }
            Family::ProductOfExponentials { factors } => {
                Ok(*factors as f64 * numeric::ln_gamma(p + 1.0) + p * self.scale.ln())
            }
            Family::TabulatedTail { .. } => self.quadrature_log_moment(p),
        }
    }

    /// `||X||_p = (E X^p)^(1/p)`.
    pub fn moment_norm(&self, p: f64) -> Result<f64> {
        Ok((self.log_moment(p)? / p).exp())
    }

    /// `||X||_p` evaluated purely by adaptive quadrature of the
    /// tail-integral form, regardless of available closed forms.
    pub fn quadrature_moment_norm(&self, p: f64) -> Result<f64> {
        Ok((self.quadrature_log_moment(p)? / p).exp())
    }

    /// `ln int_0^inf p t^(p-1) e^(-N(t)) dt` by adaptive quadrature.
    pub fn quadrature_log_moment(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        let g = |t: f64| {
            if t <= 0.0 {
                if p > 1.0 {
                    return f64::NEG_INFINITY;
                }
                return p.ln();
            }
            p.ln() + (p - 1.0) * t.ln() - self.tail_exponent(t)
        };
        // The integrand peaks where N(t) ~ p; split at the nearby quantiles.
        let mut cuts = vec![0.0];
        for level in [1.0, p, 4.0 * p] {
            let q = self.tail_exponent_inverse(level);
            if q.is_finite() && q > cuts[cuts.len() - 1] * (1.0 + 1e-12) {
                cuts.push(q);
            }
        }
        if cuts.len() == 1 {
            cuts.push(self.support_upper.min(1.0));
        }
        let mut pieces: Vec<f64> = Vec::new();
        let mut all_ok = true;
        for w in cuts.windows(2) {
            let (v, ok) = numeric::log_integral_exp(&g, w[0], w[1], QUAD_REL_TOL);
            all_ok &= ok;
            pieces.push(v);
        }
        let mut total = log_sum_exp(&pieces);
        // Extend past the last cut by doubling until the tail is negligible.
        let mut lo = cuts[cuts.len() - 1];
        for _ in 0..300 {
            if lo >= self.support_upper {
                break;
            }
            let hi = (2.0 * lo).min(self.support_upper);
            let (v, ok) = numeric::log_integral_exp(&g, lo, hi, QUAD_REL_TOL);
            all_ok &= ok;
            total = log_sum_exp(&[total, v]);
            if v < total + (1e-14f64).ln() {
                break;
            }
            lo = hi;
        }
        if !all_ok {
            return Err(Error::NonConvergent(format!(
                "moment quadrature at p = {p} did not reach tolerance"
            )));
        }
        Ok(total)
    }

    /// Mean recomputed by the quadrature path (audit of the normalization).
    pub fn quadrature_mean(&self) -> Result<f64> {
        Ok(self.quadrature_log_moment(1.0)?.exp())
    }

    /// Audit `||X||_2p <= 2^k ||X||_p` over `p_grid`.
    pub fn check_moment_growth(&self, k: u32, p_grid: &[f64]) -> Result<GrowthReport> {
        if p_grid.is_empty() {
            return Err(Error::InvalidParameter("empty p grid".into()));
        }
        let mut max_ratio = f64::NEG_INFINITY;
        let mut worst_p = p_grid[0];
        for &p in p_grid {
            check_p(p)?;
            let ratio = self.moment_norm(2.0 * p)? / self.moment_norm(p)?;
            if ratio > max_ratio {
                max_ratio = ratio;
                worst_p = p;
            }
        }
        let bound = (2.0f64).powi(k as i32);
        Ok(GrowthReport {
            k_tested: k,
            p_grid: p_grid.to_vec(),
            max_ratio,
            worst_p,
            passed: max_ratio <= bound * (1.0 + 1e-9),
        })
    }

    /// Audit the scaling inequality `N(C t x) >= t^(1/k) N(x)` on a grid.
    /// Points with `N(x) = +inf` are skipped.
    pub fn check_scaling_inequality(
        &self,
        k: u32,
        c: f64,
        t_grid: &[f64],
        x_grid: &[f64],
    ) -> Result<ScalingReport> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        for &v in t_grid.iter().chain(x_grid) {
            if v < 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "scaling grids require entries >= 1, got {v}"
                )));
            }
        }
        let mut min_margin = f64::INFINITY;
        let (mut worst_t, mut worst_x) = (f64::NAN, f64::NAN);
        let mut skipped = 0;
        for &t in t_grid {
            for &x in x_grid {
                let nx = self.tail_exponent(x);
                if nx.is_infinite() {
                    skipped += 1;
                    continue;
                }
                let margin = self.tail_exponent(c * t * x) - t.powf(1.0 / k as f64) * nx;
                if margin < min_margin {
                    min_margin = margin;
                    worst_t = t;
                    worst_x = x;
                }
            }
        }
        Ok(ScalingReport {
            c,
            k,
            min_margin,
            worst_t,
            worst_x,
            skipped,
            passed: min_margin >= -1e-9,
        })
    }

    /// Smallest growth order `k <= 16` passing the doubling audit on a
    /// log-spaced grid up to `p_max`.
    pub fn estimate_growth_order(&self, p_max: f64) -> Result<u32> {
        if !(p_max >= 2.0) {
            return Err(Error::InvalidParameter(format!("p_max must be >= 2, got {p_max}")));
        }
        let mut grid = vec![1.0];
        while grid[grid.len() - 1] < p_max {
            let next = 2.0 * grid[grid.len() - 1];
            grid.push(next.min(p_max));
        }
        for k in 1..=16 {
            if self.check_moment_growth(k, &grid)?.passed {
                return Ok(k);
            }
        }
        Err(Error::NoFiniteK { max_k: 16 })
    }

    /// Under the scaling hypothesis `N(Ctx) >= t^beta N(x)`, measure the
    /// empirical doubling constant `max_p ||X||_2p / ||X||_p`.
    pub fn check_growth_converse(&self, c: f64, beta: f64, p_grid: &[f64]) -> Result<ConverseReport> {
        let mut worst_margin = f64::INFINITY;
        for &t in &DEFAULT_SCALING_GRID {
            for &x in &DEFAULT_SCALING_GRID {
                let nx = self.tail_exponent(x);
                if nx.is_infinite() {
                    continue;
                }
                worst_margin = worst_margin.min(self.tail_exponent(c * t * x) - t.powf(beta) * nx);
            }
        }
        if worst_margin < -1e-9 {
            return Err(Error::PreconditionViolated(format!(
                "scaling inequality fails on the audit grid (margin {worst_margin:.3e})"
            )));
        }
        let mut k_bar = f64::NEG_INFINITY;
        let mut worst_p = f64::NAN;
        for &p in p_grid {
            check_p(p)?;
            let ratio = self.moment_norm(2.0 * p)? / self.moment_norm(p)?;
            if ratio > k_bar {
                k_bar = ratio;
                worst_p = p;
            }
        }
        Ok(ConverseReport {
            c,
            beta,
            k_bar,
            worst_p,
        })
    }

    /// One draw by inverse transform (or factor products, which is the same
    /// law and cheaper for products of exponentials).
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Exponential => exp_draw(rng),
            Family::Weibull { alpha } => self.scale * exp_draw(rng).powf(1.0 / alpha),
            Family::ProductOfExponentials { factors } => {
                let mut x = 1.0;
                for _ in 0..*factors {
                    x *= exp_draw(rng);
                }
                x
            }
            Family::TabulatedTail { .. } => self.tail_exponent_inverse(exp_draw(rng)),
        }
    }

    /// `count` i.i.d. draws from an explicit stream.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }

    /// Whether the tail exponent is convex (log-concave tails).
    pub fn has_convex_exponent(&self) -> bool {
        match &self.family {
            Family::Exponential => true,
            Family::Weibull { alpha } => *alpha >= 1.0,
            Family::ProductOfExponentials { factors } => *factors == 1,
            Family::TabulatedTail { knots, final_slope } => {
                let mut prev = 0.0;
                for w in knots.windows(2) {
                    let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                    if s < prev - 1e-12 {
                        return false;
                    }
                    prev = s;
                }
                *final_slope >= prev - 1e-12
            }
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("moment order must be >= 1, got {p}")));
    }
    Ok(())
}

fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn piecewise_eval(knots: &[(f64, f64)], final_slope: f64, t: f64) -> f64 {
    let last = knots[knots.len() - 1];
    if t >= last.0 {
        return last.1 + final_slope * (t - last.0);
    }
    let j = knots.partition_point(|&(kt, _)| kt <= t);
    // knots[j-1].0 <= t < knots[j].0
    let (t0, n0) = knots[j - 1];
    let (t1, n1) = knots[j];
    n0 + (n1 - n0) * (t - t0) / (t1 - t0)
}

fn piecewise_inverse(knots: &[(f64, f64)], final_slope: f64, y: f64) -> f64 {
    let last = knots[knots.len() - 1];
    if y >= last.1 {
        if final_slope > 0.0 {
            return last.0 + (y - last.1) / final_slope;
        }
        return f64::INFINITY; // capped at support_upper by the caller
    }
    let j = knots.partition_point(|&(_, kn)| kn <= y);
    let (t0, n0) = knots[j - 1];
    let (t1, n1) = knots[j];
    // n1 > y >= n0, so the segment slope is positive.
    t0 + (y - n0) * (t1 - t0) / (n1 - n0)
}

fn piecewise_mean(knots: &[(f64, f64)], final_slope: f64, support_upper: f64) -> f64 {
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (t0, n0) = w[0];
        let (t1, n1) = (w[1].0.min(support_upper), w[1].1);
        if t1 <= t0 {
            break;
        }
        total += segment_exp_integral(t0, w[1].0, n0, n1, t1);
    }
    let (tl, nl) = knots[knots.len() - 1];
    if support_upper > tl {
        if support_upper.is_finite() {
            let n_end = nl + final_slope * (support_upper - tl);
            total += segment_exp_integral(tl, support_upper, nl, n_end, support_upper);
        } else {
            total += (-nl).exp() / final_slope;
        }
    }
    total
}

/// `int_t0^hi e^(-N(t)) dt` for `N` linear from `(t0, n0)` to `(t1, n1)`,
/// truncated at `hi <= t1`.
fn segment_exp_integral(t0: f64, t1: f64, n0: f64, n1: f64, hi: f64) -> f64 {
    let s = (n1 - n0) / (t1 - t0);
    let span = hi - t0;
    if s.abs() < 1e-300 {
        return span * (-n0).exp();
    }
    ((-n0).exp() - (-(n0 + s * span)).exp()) / s
}

/// Tail exponent of a product of `k` i.i.d. unit exponentials, via the
/// recursion `P_k(t) = int_0^inf e^(-x) P_{k-1}(t/x) dx` evaluated in log
/// space around the saddle point (substituting `x = e^u`).
fn product_exp_exponent(k: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if k == 1 {
        return t;
    }
    let inner = move |x: f64| product_exp_exponent(k - 1, x);
    let phi = |u: f64| u - u.exp() - inner(t * (-u).exp());
    let lo = t.ln().min(0.0) - 40.0;
    let hi = t.ln().max(0.0) + 6.0;
    let (u_star, phi_star) = numeric::golden_max(&phi, lo, hi, 140);
    // Expand around the peak until the integrand is below e^-50 of it.
    let mut left = u_star;
    let mut step = 0.25;
    while left > lo && phi(left) > phi_star - 50.0 {
        left = (left - step).max(lo);
        step *= 2.0;
    }
    let mut right = u_star;
    step = 0.25;
    while right < hi && phi(right) > phi_star - 50.0 {
        right = (right + step).min(hi);
        step *= 2.0;
    }
    let (log_p, _) = numeric::log_integral_exp(&phi, left, right, QUAD_REL_TOL);
    (-log_p).max(0.0)
}
