//! Shared numerical routines: bisection on monotone functions, adaptive
//! Simpson quadrature, peak-normalized integration in log space, and a
//! golden-section maximizer.

pub(crate) use statrs::function::gamma::ln_gamma;

/// Largest `t` with `f(t) <= target` on `[lo, hi]`, for nondecreasing `f`.
///
/// Returns the lower bisection endpoint, so `f(result) <= target` is
/// guaranteed (up to the evaluation of `f` itself). If `f(lo) > target`
/// returns `lo`.
pub(crate) fn sup_below<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    debug_assert!(lo <= hi);
    if f(lo) > target {
        return lo;
    }
    if f(hi) <= target {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        if hi - lo <= rel_tol * hi.abs().max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest `t` with `f(t) >= target` on `[lo, hi]`, for nondecreasing `f`.
/// Returns `None` when `f(hi) < target`.
pub(crate) fn inf_above<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Option<f64> {
    if f(lo) >= target {
        return Some(lo);
    }
    if f(hi) < target {
        return None;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        if hi - lo <= rel_tol * hi.abs().max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn simpson_slice(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_slice(fa, flm, fm, a, m);
    let right = simpson_slice(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (a.abs() + b.abs() + 1.0) {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *ok = false;
        return left + right;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok)
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
/// Returns `(integral, converged)`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, bool) {
    if a >= b {
        return (0.0, true);
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson_slice(fa, fm, fb, a, b);
    let mut ok = true;
    let v = adaptive_step(f, a, b, fa, fm, fb, whole, tol, 52, &mut ok);
    (v, ok)
}

/// `ln` of `int_a^b exp(g(t)) dt`, normalized by the peak so the integrand
/// never overflows. Relative tolerance `rel_tol`; returns `(value, converged)`.
/// Returns `-inf` if the integrand is identically zero on the probe set.
pub(crate) fn log_integral_exp<G: Fn(f64) -> f64>(
    g: &G,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> (f64, bool) {
    if a >= b {
        return (f64::NEG_INFINITY, true);
    }
    const PROBES: usize = 65;
    let mut m = f64::NEG_INFINITY;
    for j in 0..=PROBES {
        let t = a + (b - a) * (j as f64) / (PROBES as f64);
        m = m.max(g(t));
    }
    if m == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, true);
    }
    let h = |t: f64| {
        let v = g(t) - m;
        if v < -745.0 {
            0.0
        } else {
            v.exp()
        }
    };
    // Coarse pass to set the absolute tolerance for the adaptive pass.
    let mut coarse = 0.0;
    let step = (b - a) / (PROBES as f64);
    for j in 0..PROBES {
        let x0 = a + step * j as f64;
        coarse += simpson_slice(h(x0), h(x0 + 0.5 * step), h(x0 + step), x0, x0 + step);
    }
    let tol = (coarse.abs() * rel_tol).max(1e-300);
    let (v, ok) = adaptive_simpson(&h, a, b, tol);
    if v <= 0.0 {
        return (f64::NEG_INFINITY, ok);
    }
    (m + v.ln(), ok)
}

/// Golden-section maximum of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, iters: u32) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
