//! Budget sets `{v >= 0 : sum_i N_i(v_i) <= p}` and the separable linear
//! maximization over them.
//!
//! `linear_max_over_budget` solves `max sum c_i v_i` over a budget set by
//! allocating budget across coordinates: coordinate `i` given budget `b`
//! yields `v_i = N_i^{-1}(b)`. When every `N_i` is convex each profit
//! `c_i N_i^{-1}(b)` is concave and a Lagrangian bisection solves the
//! problem exactly; otherwise a budget-allocation dynamic program on a
//! uniform grid is used, with a grid-doubling self-check.

use crate::distributions::TailDistribution;
use crate::envelope::ConvexEnvelope;
use crate::error::{Error, Result};

/// Default DP budget grid; doubled once as a discretization certificate.
pub const DEFAULT_DP_GRID: usize = 256;

/// A nondecreasing tail exponent usable as a budget coordinate function.
#[derive(Debug, Clone)]
pub enum ExponentFn {
    /// `N(t) = t^alpha`.
    Power { alpha: f64 },
    /// The tail exponent of a distribution.
    Law(TailDistribution),
    /// A convex envelope used as an exponent.
    Envelope(ConvexEnvelope),
    /// `N(t) = inner(t^power)` (the flattened-layer exponent).
    Compose { inner: Box<ExponentFn>, power: u32 },
}

impl ExponentFn {
    pub fn power(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "power exponent must be positive, got {alpha}"
            )));
        }
        Ok(Self::Power { alpha })
    }

    pub fn compose_power(self, power: u32) -> Result<Self> {
        if power == 0 {
            return Err(Error::InvalidParameter("compose power must be >= 1".into()));
        }
        if power == 1 {
            return Ok(self);
        }
        Ok(Self::Compose {
            inner: Box::new(self),
            power,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Power { alpha } => t.powf(*alpha),
            Self::Law(d) => d.tail_exponent(t),
            Self::Envelope(h) => h.eval(t),
            Self::Compose { inner, power } => inner.eval(t.powi(*power as i32)),
        }
    }

    /// Largest `t` with `N(t) <= b`.
    pub fn inverse(&self, b: f64) -> f64 {
        if b < 0.0 {
            return 0.0;
        }
        match self {
            Self::Power { alpha } => b.powf(1.0 / alpha),
            Self::Law(d) => d.tail_exponent_inverse(b),
            Self::Envelope(h) => h.inverse(b),
            Self::Compose { inner, power } => inner.inverse(b).powf(1.0 / *power as f64),
        }
    }

    /// Conservative convexity check; `false` routes to the DP solver.
    pub fn is_convex(&self) -> bool {
        match self {
            Self::Power { alpha } => *alpha >= 1.0,
            Self::Law(d) => d.has_convex_exponent(),
            Self::Envelope(_) => true,
            Self::Compose { inner, power } => match inner.as_ref() {
                Self::Power { alpha } => alpha * (*power as f64) >= 1.0,
                other => other.is_convex(),
            },
        }
    }
}

/// The feasible region `{v >= 0 : sum_i N_i(v_i) <= budget}`.
#[derive(Debug, Clone)]
pub struct BudgetSet {
    exponents: Vec<ExponentFn>,
    budget: f64,
}

impl BudgetSet {
    pub fn new(exponents: Vec<ExponentFn>, budget: f64) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidParameter("budget set needs >= 1 coordinate".into()));
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "budget must be finite and >= 0, got {budget}"
            )));
        }
        Ok(Self { exponents, budget })
    }

    /// `n` i.i.d. coordinates sharing one exponent.
    pub fn uniform(n: usize, exponent: ExponentFn, budget: f64) -> Result<Self> {
        Self::new(vec![exponent; n], budget)
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn exponent(&self, i: usize) -> &ExponentFn {
        &self.exponents[i]
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Self::new(self.exponents.clone(), budget)
    }

    /// Same coordinates with each exponent composed with `t^k`.
    pub fn composed_with_power(&self, k: u32) -> Result<Self> {
        let exps = self
            .exponents
            .iter()
            .map(|e| e.clone().compose_power(k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(exps, self.budget)
    }

    /// `budget - sum_i N_i(v_i)`; nonnegative means feasible.
    pub fn slack(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        let used: f64 = v
            .iter()
            .zip(&self.exponents)
            .map(|(&vi, e)| e.eval(vi))
            .sum();
        self.budget - used
    }

    pub fn all_convex(&self) -> bool {
        self.exponents.iter().all(|e| e.is_convex())
    }

    /// Per-coordinate inverse values on the uniform grid `{j * budget / g}`.
    fn inverse_table(&self, g: usize) -> Vec<Vec<f64>> {
        self.exponents
            .iter()
            .map(|e| {
                (0..=g)
                    .map(|j| e.inverse(self.budget * j as f64 / g as f64))
                    .collect()
            })
            .collect()
    }
}

/// `max { sum c_i v_i : v in budget set }` with the attaining point.
pub fn linear_max_over_budget(c: &[f64], b: &BudgetSet) -> Result<(f64, Vec<f64>)> {
    let n = b.dim();
    if c.len() != n {
        return Err(Error::InvalidParameter(format!(
            "coefficient length {} != budget dimension {n}",
            c.len()
        )));
    }
    if let Some(bad) = c.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coefficients must be finite and nonnegative, got {bad}"
        )));
    }
    if b.budget() == 0.0 || c.iter().all(|&x| x == 0.0) {
        return Ok((0.0, vec![0.0; n]));
    }
    if b.all_convex() {
        Ok(lagrangian_max(c, b))
    } else {
        let (v1, _) = dp_max(c, b, DEFAULT_DP_GRID);
        let (v2, alloc) = dp_max(c, b, 2 * DEFAULT_DP_GRID);
        if (v2 - v1).abs() > 0.01 * v2.abs().max(1e-300) {
            return Err(Error::GridTooCoarse(format!(
                "value moved from {v1} to {v2} when doubling the budget grid"
            )));
        }
        Ok((v2, alloc))
    }
}

/// Exact allocation DP on the integer budget grid `{0..=g}` (units of
/// `budget/g`). Ties prefer the lower coordinate index.
fn dp_max(c: &[f64], b: &BudgetSet, g: usize) -> (f64, Vec<f64>) {
    let n = b.dim();
    let table = b.inverse_table(g);
    // dp[j] = best value using at most j units over coordinates seen so far.
    let mut dp = vec![0.0f64; g + 1];
    let mut choice = vec![0u32; n * (g + 1)];
    for i in 0..n {
        let prev = dp.clone();
        for j in 0..=g {
            // Scan allocations high-to-low so ties keep the largest grant to
            // the earliest coordinate.
            let mut best = f64::NEG_INFINITY;
            let mut best_x = 0u32;
            for x in (0..=j).rev() {
                let val = prev[j - x] + c[i] * table[i][x];
                if val > best {
                    best = val;
                    best_x = x as u32;
                }
            }
            dp[j] = best;
            choice[i * (g + 1) + j] = best_x;
        }
    }
    let mut v = vec![0.0; n];
    let mut j = g;
    for i in (0..n).rev() {
        let x = choice[i * (g + 1) + j] as usize;
        v[i] = table[i][x];
        j -= x;
    }
    (dp[g], v)
}

/// Lagrangian bisection for all-convex exponents: each profit
/// `c_i N_i^{-1}(b)` is concave, so the dual allocation is exact up to the
/// bisection tolerance, and any leftover budget is granted to the single
/// coordinate that gains most from it.
fn lagrangian_max(c: &[f64], b: &BudgetSet) -> (f64, Vec<f64>) {
    let n = b.dim();
    let p = b.budget();
    let profit = |i: usize, x: f64| c[i] * b.exponent(i).inverse(x);
    let alloc_one = |i: usize, lam: f64| -> f64 {
        if c[i] == 0.0 {
            return 0.0;
        }
        let h = |x: f64| profit(i, x) - lam * x;
        // Concave in x: golden section, then snap to the better endpoint.
        let (x, hx) = crate::numeric::golden_max(&h, 0.0, p, 90);
        let (h0, hp) = (h(0.0), h(p));
        if h0 >= hx && h0 >= hp {
            0.0
        } else if hp >= hx {
            p
        } else {
            x
        }
    };
    let total = |lam: f64| -> f64 { (0..n).map(|i| alloc_one(i, lam)).sum() };

    let mut lam_hi = 1.0;
    while total(lam_hi) > p && lam_hi < 1e12 {
        lam_hi *= 4.0;
    }
    let mut lam_lo = 0.0;
    if total(lam_lo) <= p {
        lam_hi = 0.0; // unconstrained: everyone takes what they want at lam = 0
    }
    for _ in 0..90 {
        let mid = 0.5 * (lam_lo + lam_hi);
        if total(mid) > p {
            lam_lo = mid;
        } else {
            lam_hi = mid;
        }
    }
    let mut x: Vec<f64> = (0..n).map(|i| alloc_one(i, lam_hi)).collect();
    let used: f64 = x.iter().sum();
    let leftover = p - used;
    if leftover > 0.0 {
        // Grant the remainder to the coordinate with the best marginal gain.
        let mut best_i = 0;
        let mut best_gain = f64::NEG_INFINITY;
        for i in 0..n {
            let gain = profit(i, x[i] + leftover) - profit(i, x[i]);
            if gain > best_gain {
                best_gain = gain;
                best_i = i;
            }
        }
        x[best_i] += leftover;
    }
    let v: Vec<f64> = (0..n).map(|i| b.exponent(i).inverse(x[i])).collect();
    let value = (0..n).map(|i| c[i] * v[i]).sum();
    (value, v)
}
