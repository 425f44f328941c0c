//! Convex tail envelopes and the log-concave factor laws they induce.
//!
//! For a law `X` with tail exponent `N` and growth order `k`, the map
//! `M(t) = N(t^k)` is the tail exponent of `X^(1/k)`. Its greatest convex
//! nondecreasing minorant `H`, anchored at `H(t0) = 0`, defines a factor
//! law `Y` with `P(Y >= t) = e^(-H(t))` whose `k`-fold product is
//! comparable with `X`. This module builds `H` as the lower convex hull of
//! `(t0, 0)` and the sampled graph of `M`, certifies the two-sided sandwich
//! `H(t) <= M(t) <= H(C t)` by a doubling scan, and measures the product
//! comparison empirically via quantile domination.

use serde::Serialize;

use crate::distributions::TailDistribution;
use crate::error::{Error, Result};
use crate::numeric;
use crate::stats;

/// Quantile depth for the default envelope grid: `M` is sampled out to its
/// `1 - 1e-9` quantile.
const TAIL_LEVEL: f64 = 20.723_265_836_946_41; // -ln(1e-9)

/// Default number of geometric grid points between `t0` and the tail.
pub const DEFAULT_ENVELOPE_GRID: usize = 512;

/// Default flat threshold `t0`.
pub const DEFAULT_T0: f64 = 1.0;

/// Piecewise-linear convex nondecreasing function, zero up to `t0`.
#[derive(Debug, Clone)]
pub struct ConvexEnvelope {
    /// Vertices starting at `(t0, 0)`, strictly increasing in `t`.
    knots: Vec<(f64, f64)>,
    final_slope: f64,
}

impl ConvexEnvelope {
    /// Build from explicit knots; the last segment's slope extends the tail.
    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParameter("need at least two knots".into()));
        }
        if knots[0].1 != 0.0 || knots[0].0 <= 0.0 {
            return Err(Error::InvalidParameter(
                "first knot must be (t0, 0) with t0 > 0".into(),
            ));
        }
        let mut prev_slope = 0.0f64;
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidParameter("knots must increase in t".into()));
            }
            let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            if s < prev_slope - 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "slopes must be nondecreasing, got {prev_slope} then {s}"
                )));
            }
            prev_slope = s.max(prev_slope);
        }
        let last = knots[knots.len() - 1];
        let prev = knots[knots.len() - 2];
        let final_slope = (last.1 - prev.1) / (last.0 - prev.0);
        if final_slope <= 0.0 {
            return Err(Error::DegenerateInput(
                "envelope is identically zero".into(),
            ));
        }
        Ok(Self { knots, final_slope })
    }

    pub fn t0(&self) -> f64 {
        self.knots[0].0
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn final_slope(&self) -> f64 {
        self.final_slope
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.t0() {
            return 0.0;
        }
        let last = self.knots[self.knots.len() - 1];
        if t >= last.0 {
            return last.1 + self.final_slope * (t - last.0);
        }
        let j = self.knots.partition_point(|&(kt, _)| kt <= t);
        let (t0, h0) = self.knots[j - 1];
        let (t1, h1) = self.knots[j];
        h0 + (h1 - h0) * (t - t0) / (t1 - t0)
    }

    /// Largest `t` with `H(t) <= y`; `inverse(0)` is the end of the flat
    /// initial piece (the inverse-transform convention).
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            let mut t = self.t0();
            for &(kt, kh) in &self.knots {
                if kh <= 0.0 {
                    t = kt;
                } else {
                    break;
                }
            }
            return t;
        }
        let last = self.knots[self.knots.len() - 1];
        if y >= last.1 {
            return last.0 + (y - last.1) / self.final_slope;
        }
        let j = self.knots.partition_point(|&(_, kh)| kh <= y);
        let (t0, h0) = self.knots[j - 1];
        let (t1, h1) = self.knots[j];
        t0 + (y - h0) * (t1 - t0) / (h1 - h0)
    }

    /// The law `P(Y >= t) = e^(-H(t))` as a (non-normalized) distribution.
    pub fn to_distribution(&self) -> TailDistribution {
        TailDistribution::tabulated_raw(&self.knots, None)
            .expect("envelope knots always form a valid tail exponent")
    }

    /// CSV with header `t,H`, one knot per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,H\n");
        for &(t, h) in &self.knots {
            out.push_str(&format!("{t},{h}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "t,H" => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "expected header 't,H', got {other:?}"
                )))
            }
        }
        let mut knots = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let t = parts
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("bad t on line {}", ln + 2)))?;
            let h = parts
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("bad H on line {}", ln + 2)))?;
            knots.push((t, h));
        }
        Self::from_knots(knots)
    }
}

/// Tail exponent of `X^(1/k)`: the map `t -> N(t^k)`.
pub fn root_tail_exponent(dist: &TailDistribution, k: u32) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            dist.tail_exponent(t.powi(k as i32))
        }
    }
}

/// Greatest convex nondecreasing minorant of `m` over `grid`, anchored at
/// `(t0, 0)`: the lower convex hull of `(t0, 0)` and the sampled graph,
/// extended past the last vertex with the last hull slope.
pub fn convex_minorant<F: Fn(f64) -> f64>(
    m: F,
    t0: f64,
    grid: &[f64],
) -> Result<ConvexEnvelope> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("t0 must be positive, got {t0}")));
    }
    if grid.is_empty() || grid[0] < t0 {
        return Err(Error::InvalidParameter(
            "grid must be nonempty and start at or after t0".into(),
        ));
    }
    let mut pts: Vec<(f64, f64)> = vec![(t0, 0.0)];
    for &t in grid {
        let v = m(t);
        if !v.is_finite() {
            return Err(Error::PreconditionViolated(format!(
                "m({t}) is not finite on the grid"
            )));
        }
        if v < 0.0 {
            return Err(Error::InvalidParameter(format!("m({t}) = {v} is negative")));
        }
        let lastx = pts[pts.len() - 1].0;
        if t > lastx {
            pts.push((t, v));
        } else if t == lastx {
            let l = pts.len() - 1;
            pts[l].1 = pts[l].1.min(v);
        } else {
            return Err(Error::InvalidParameter("grid must be increasing".into()));
        }
    }
    if pts.iter().all(|&(_, y)| y == 0.0) {
        return Err(Error::DegenerateInput(
            "m vanishes on the whole grid; t0 is too large".into(),
        ));
    }
    // Monotone-chain lower hull; collinear points are merged.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    ConvexEnvelope::from_knots(hull)
}

/// Outcome of the sandwich audit `H(t) <= m(t) <= H(C t)`.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub passed: bool,
    pub worst_margin: f64,
    #[serde(rename = "C_prime")]
    pub c_prime: f64,
}

/// Check `H(t) <= m(t) <= H(C t) + 1e-9` pointwise on `grid`, and find the
/// smallest constant on a doubling scan for which the right side holds.
pub fn verify_sandwich<F: Fn(f64) -> f64>(
    h: &ConvexEnvelope,
    m: F,
    c: f64,
    grid: &[f64],
) -> SandwichReport {
    let mut left = f64::INFINITY;
    let mut right = f64::INFINITY;
    for &t in grid {
        let mt = m(t);
        left = left.min(mt - h.eval(t));
        right = right.min(h.eval(c * t) - mt);
    }
    let mut c_prime = f64::INFINITY;
    for j in 0..=60 {
        let cand = 2f64.powi(j);
        let ok = grid.iter().all(|&t| h.eval(cand * t) - m(t) >= -1e-9);
        if ok {
            c_prime = cand;
            break;
        }
    }
    SandwichReport {
        passed: left >= -1e-9 && right >= -1e-9,
        worst_margin: left.min(right),
        c_prime,
    }
}

/// A certified factorization of `parent` into `k` log-concave factors.
#[derive(Debug, Clone)]
pub struct FactorLaw {
    envelope: ConvexEnvelope,
    k: u32,
    parent: TailDistribution,
    c_certified: f64,
}

impl FactorLaw {
    /// Build the envelope of `N(t^k)` on a geometric grid from `t0` to the
    /// `1 - 1e-9` quantile and certify the sandwich constant.
    pub fn build(parent: TailDistribution, k: u32, t0: f64, grid_points: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if grid_points < 8 {
            return Err(Error::InvalidParameter("need at least 8 grid points".into()));
        }
        let t_max = {
            let q = parent.tail_exponent_inverse(TAIL_LEVEL);
            q.powf(1.0 / k as f64)
        };
        if !(t_max > t0 * (1.0 + 1e-9)) {
            return Err(Error::InvalidParameter(format!(
                "t0 = {t0} reaches past the law's tail (quantile {t_max})"
            )));
        }
        let ratio = (t_max / t0).powf(1.0 / (grid_points - 1) as f64);
        let grid: Vec<f64> = (0..grid_points).map(|j| t0 * ratio.powi(j as i32)).collect();
        let m = root_tail_exponent(&parent, k);
        let envelope = convex_minorant(&m, t0, &grid)?;
        let report = verify_sandwich(&envelope, &m, 1.0, &grid);
        drop(m);
        if !report.c_prime.is_finite() {
            return Err(Error::PreconditionViolated(
                "no finite sandwich constant found on the doubling scan".into(),
            ));
        }
        Ok(Self {
            envelope,
            k,
            parent,
            c_certified: report.c_prime,
        })
    }

    pub fn from_parts(
        envelope: ConvexEnvelope,
        k: u32,
        parent: TailDistribution,
        c_certified: f64,
    ) -> Self {
        Self {
            envelope,
            k,
            parent,
            c_certified,
        }
    }

    pub fn envelope(&self) -> &ConvexEnvelope {
        &self.envelope
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn parent(&self) -> &TailDistribution {
        &self.parent
    }

    pub fn c_certified(&self) -> f64 {
        self.c_certified
    }

    /// The factor law `Y` with `P(Y >= t) = e^(-H(t))`. Not renormalized:
    /// only its mean bounds are certified.
    pub fn factor_distribution(&self) -> TailDistribution {
        self.envelope.to_distribution()
    }

    /// Exact mean of the factor law.
    pub fn factor_mean(&self) -> f64 {
        self.factor_distribution().mean()
    }

    /// One draw of the `k`-fold factor product.
    pub fn draw_product<R: rand::Rng>(&self, rng: &mut R) -> f64 {
        let y = self.factor_distribution();
        let mut prod = 1.0;
        for _ in 0..self.k {
            prod *= y.draw(rng);
        }
        prod
    }
}

/// `inf { t > 0 : f(t) >= 1 }` by bisection on `[0, 1e12]`.
pub fn normalization_point<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    numeric::inf_above(&f, 1.0, 0.0, 1e12, 1e-10)
        .ok_or_else(|| Error::Unreachable("f stays below 1 on [0, 1e12]".into()))
}

/// Quantile-domination constants between `X` and the factor product.
#[derive(Debug, Clone, Serialize)]
pub struct ProductComparisonReport {
    pub c1_hat: f64,
    pub c2_hat: f64,
    /// Rows `(q, quantile of X, quantile of the factor product)`.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Estimate the smallest constants with `C1 (q_X + t0) >= q_Y` and
/// `C2 (q_Y + t0) >= q_X` across the quantile grid, where `Y` is the
/// `k`-fold factor product.
pub fn product_comparison(
    dist: &TailDistribution,
    law: &FactorLaw,
    samples: usize,
    q_grid: &[f64],
    seed: u64,
) -> Result<ProductComparisonReport> {
    if samples < 100_000 {
        return Err(Error::PreconditionViolated(format!(
            "need >= 1e5 samples for quantile comparison, got {samples}"
        )));
    }
    if q_grid.iter().any(|&q| !(0.0..1.0).contains(&q)) {
        return Err(Error::InvalidParameter("quantile levels must lie in [0, 1)".into()));
    }
    let mut xs = stats::generate_chunked(stats::derive_seed(seed, 1), samples, |rng| {
        dist.draw(rng)
    });
    let y = law.factor_distribution();
    let k = law.order();
    let mut ys = stats::generate_chunked(stats::derive_seed(seed, 2), samples, |rng| {
        let mut prod = 1.0;
        for _ in 0..k {
            prod *= y.draw(rng);
        }
        prod
    });
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let t0 = law.envelope().t0();
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    let mut rows = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let qx = stats::quantile_sorted(&xs, q);
        let qy = stats::quantile_sorted(&ys, q);
        c1 = c1.max(qy / (qx + t0));
        c2 = c2.max(qx / (qy + t0));
        rows.push((q, qx, qy));
    }
    Ok(ProductComparisonReport {
        c1_hat: c1,
        c2_hat: c2,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{wilson_interval, Z95};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
            .collect()
    }

    /// O(n^2) hull oracle: every input point must lie on or above each hull
    /// segment's supporting line.
    fn assert_is_lower_hull(env: &ConvexEnvelope, pts: &[(f64, f64)]) {
        for w in env.knots().windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let s = (y1 - y0) / (x1 - x0);
            for &(px, py) in pts {
                let line = y0 + s * (px - x0);
                assert!(
                    py >= line - 1e-9 * (1.0 + py.abs()),
                    "point ({px}, {py}) below hull segment"
                );
            }
        }
    }

    #[test]
    fn linear_target_yields_single_chord() {
        // Points (t, t) with anchor (1, 0): the hull is the chord to the
        // last grid point, slope T/(T-1), slightly above t - 1.
        let grid = unit_grid(1.0, 100.0, 100);
        let env = convex_minorant(|t| t, 1.0, &grid).unwrap();
        assert_eq!(env.knots().len(), 2);
        assert_relative_eq!(env.eval(100.0), 100.0, max_relative = 1e-12);
        let slope = 100.0 / 99.0;
        for &t in &grid {
            assert_relative_eq!(env.eval(t), slope * (t - 1.0), max_relative = 1e-12);
            assert!(env.eval(t) <= t + 1e-12);
            assert!(env.eval(t) >= t - 1.0 - 1e-12);
        }
    }

    #[test]
    fn concave_target_yields_chord() {
        let grid = unit_grid(1.0, 100.0, 200);
        let env = convex_minorant(|t| t.sqrt(), 1.0, &grid).unwrap();
        assert_eq!(env.knots().len(), 2);
        for &t in &grid {
            assert_relative_eq!(env.eval(t), 10.0 * (t - 1.0) / 99.0, max_relative = 1e-9);
        }
        let pts: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t.sqrt())).collect();
        assert_is_lower_hull(&env, &pts);
    }

    #[test]
    fn degenerate_when_target_vanishes() {
        let grid = unit_grid(1.0, 2.0, 16);
        assert!(matches!(
            convex_minorant(|_| 0.0, 1.0, &grid),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn sandwich_on_shifted_identity() {
        let h = ConvexEnvelope::from_knots(vec![(1.0, 0.0), (100.0, 99.0)]).unwrap();
        let grid = unit_grid(1.0, 100.0, 128);
        let rep = verify_sandwich(&h, |t| t, 2.0, &grid);
        assert!(rep.passed, "worst margin {}", rep.worst_margin);
        assert_eq!(rep.c_prime, 2.0);
    }

    #[test]
    fn minorant_property_and_left_inequality_by_construction() {
        let dist = TailDistribution::weibull(0.5).unwrap();
        let law = FactorLaw::build(dist, 2, 1.0, DEFAULT_ENVELOPE_GRID).unwrap();
        let m = root_tail_exponent(law.parent(), 2);
        for &(t, h) in law.envelope().knots() {
            assert!(h <= m(t), "H({t}) = {h} above M({t}) = {}", m(t));
        }
        assert!(law.c_certified().is_finite());
    }

    #[test]
    fn factor_law_mean_examples() {
        // H(t) = max(0, t - 1): Y = 1 + Exp(1), mean 2.
        let h = ConvexEnvelope::from_knots(vec![(1.0, 0.0), (2.0, 1.0)]).unwrap();
        let y = h.to_distribution();
        assert_relative_eq!(y.mean(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(h.inverse(0.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(h.inverse(1.0), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn factor_sampler_matches_envelope_tail() {
        let dist = TailDistribution::exponential();
        let law = FactorLaw::build(dist, 1, 1.0, 128).unwrap();
        let y = law.factor_distribution();
        let ys = stats::generate_chunked(3, 300_000, |rng| y.draw(rng));
        let h = law.envelope();
        for &(t, hv) in h.knots().iter().skip(1).take(4) {
            let hits = ys.iter().filter(|&&v| v >= t).count() as u64;
            let (lo, hi) = wilson_interval(hits, ys.len() as u64, Z95);
            let truth = (-hv).exp();
            assert!(lo <= truth && truth <= hi, "t={t}: {truth} not in [{lo}, {hi}]");
        }
        // Determinism of the inverse-transform sampler.
        let again = stats::generate_chunked(3, 1000, |rng| y.draw(rng));
        assert_eq!(&ys[..1000], &again[..]);
    }

    #[test]
    fn normalization_point_examples() {
        assert_relative_eq!(normalization_point(|t| t).unwrap(), 1.0, max_relative = 1e-9);
        let h = ConvexEnvelope::from_knots(vec![(1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert_relative_eq!(
            normalization_point(|t| h.eval(t)).unwrap(),
            2.0,
            max_relative = 1e-9
        );
        let w = TailDistribution::weibull(0.5).unwrap();
        assert_relative_eq!(
            normalization_point(|t| w.tail_exponent(t)).unwrap(),
            0.5,
            max_relative = 1e-9
        );
        assert!(matches!(
            normalization_point(|_| 0.5),
            Err(Error::Unreachable(_))
        ));
    }

    #[test]
    fn normalization_point_brackets_factor_mean() {
        for (dist, k) in [
            (TailDistribution::exponential(), 1u32),
            (TailDistribution::weibull(0.5).unwrap(), 2),
        ] {
            let law = FactorLaw::build(dist, k, 1.0, 256).unwrap();
            let h = law.envelope().clone();
            let t_star = normalization_point(|t| h.eval(t)).unwrap();
            let mean = law.factor_mean();
            assert!(t_star >= h.t0() - 1e-9);
            assert!(
                t_star <= std::f64::consts::E * mean + 1e-9,
                "t* = {t_star}, mean = {mean}"
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let h = ConvexEnvelope::from_knots(vec![(1.0, 0.0), (2.5, 0.75), (4.0, 3.0)]).unwrap();
        let csv = h.to_csv();
        let back = ConvexEnvelope::from_csv(&csv).unwrap();
        assert_eq!(h.knots(), back.knots());
        assert!(ConvexEnvelope::from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn quantile_comparison_near_exponential() {
        let dist = TailDistribution::exponential();
        let law = FactorLaw::build(dist.clone(), 1, 1.0, 256).unwrap();
        let rep = product_comparison(&dist, &law, 200_000, &[0.5, 0.9, 0.99, 0.999], 17).unwrap();
        assert!(rep.c1_hat <= 4.0, "c1 {}", rep.c1_hat);
        assert!(rep.c2_hat <= 4.0, "c2 {}", rep.c2_hat);
        assert!(matches!(
            product_comparison(&dist, &law, 10, &[0.5], 17),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn identity_factorization_has_unit_constants() {
        // H copies the exponential's exponent with a tiny flat head, so the
        // factor law is the parent in all but the first 1e-9 of mass.
        let t0 = 1e-9;
        let h =
            ConvexEnvelope::from_knots(vec![(t0, 0.0), (40.0, 40.0 - t0)]).unwrap();
        let dist = TailDistribution::exponential();
        let law = FactorLaw::from_parts(h, 1, dist.clone(), 1.0);
        let rep = product_comparison(&dist, &law, 400_000, &[0.5, 0.9, 0.99], 23).unwrap();
        assert!((rep.c1_hat - 1.0).abs() < 0.05, "c1 {}", rep.c1_hat);
        assert!((rep.c2_hat - 1.0).abs() < 0.05, "c2 {}", rep.c2_hat);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hull_is_convex_minorant_of_random_monotone_targets(
            seed in 0u64..10_000,
            n in 8usize..64,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Random nondecreasing target on [1, 50].
            let mut vals = vec![0.0f64];
            for _ in 1..n {
                let last = *vals.last().unwrap();
                vals.push(last + rng.gen::<f64>() * 2.0);
            }
            if vals.iter().all(|&v| v == 0.0) {
                vals[n - 1] = 1.0;
            }
            let grid = unit_grid(1.0, 50.0, n);
            let lookup: std::collections::BTreeMap<u64, f64> = grid
                .iter()
                .zip(&vals)
                .map(|(&t, &v)| (t.to_bits(), v))
                .collect();
            let m = |t: f64| lookup[&t.to_bits()];
            let env = convex_minorant(m, 1.0, &grid).unwrap();
            // Minorant + convexity.
            let mut prev_slope = f64::NEG_INFINITY;
            for w in env.knots().windows(2) {
                let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                prop_assert!(s >= prev_slope - 1e-12);
                prev_slope = s;
            }
            for (&t, &v) in grid.iter().zip(&vals) {
                prop_assert!(env.eval(t) <= v + 1e-9);
            }
            let pts: Vec<(f64, f64)> = grid.iter().zip(&vals).map(|(&t, &v)| (t, v)).collect();
            assert_is_lower_hull(&env, &pts);
        }
    }
}
