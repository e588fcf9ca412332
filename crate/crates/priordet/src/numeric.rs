//! Shared numeric routines: adaptive quadrature, bracketed root finding,
//! scalar maximization, least squares, and deterministic seed derivation.

use crate::{Error, Result};

/// Value and estimated absolute error of a quadrature evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

const MAX_DEPTH: u32 = 48;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Quadrature> {
    if !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::invalid(
            "integration interval",
            format!("[{lo}, {hi}]"),
        ));
    }
    if lo == hi {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
        });
    }
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = simpson(lo, hi, fa, fm, fb);
    let mut err = 0.0;
    let value = adapt(&f, lo, hi, fa, fm, fb, whole, tol, MAX_DEPTH, &mut err);
    if err > tol {
        return Err(Error::Numeric {
            context: "adaptive quadrature did not converge",
            requested: tol,
            achieved: err,
        });
    }
    Ok(Quadrature { value, error: err })
}

/// Quadrature of `f` over `[lo, hi]` split at the interior points in `cuts`
/// (unsorted, possibly outside the interval; both are handled).
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    cuts: &[f64],
    tol: f64,
) -> Result<Quadrature> {
    let mut edges = vec![lo];
    let mut interior: Vec<f64> = cuts
        .iter()
        .copied()
        .filter(|&c| c > lo && c < hi)
        .collect();
    interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
    interior.dedup();
    edges.extend(interior);
    edges.push(hi);
    let piece_tol = tol / edges.len() as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for pair in edges.windows(2) {
        let q = integrate(&f, pair[0], pair[1], piece_tol)?;
        value += q.value;
        error += q.error;
    }
    Ok(Quadrature { value, error })
}

/// Bisection root of a continuous `f` with a sign change over `[lo, hi]`.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Construction(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {flo:e}, f(hi) = {fhi:e}"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = flo;
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locate every flip of a boolean predicate along a sorted grid, refining each
/// flip by bisection to `xtol`. Works across jump discontinuities because only
/// the predicate value is used.
pub fn scan_transitions<P: Fn(f64) -> bool>(pred: P, grid: &[f64], xtol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let pa = pred(a);
        if pa == pred(b) {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        while hi - lo > xtol {
            let mid = 0.5 * (lo + hi);
            if pred(mid) == pa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
/// Returns `(x_max, f(x_max))`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > xtol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Ordinary least squares line through `(xs, ys)`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("fit input", "xs and ys differ in length"));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("fit input", "need at least 2 points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("fit input", "all x values identical"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        ss_tot += (y - my) * (y - my);
    }
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// `k` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && k >= 2, "bad log grid");
    let ratio = (hi / lo).ln();
    (0..k)
        .map(|i| lo * (ratio * i as f64 / (k - 1) as f64).exp())
        .collect()
}

/// `k` evenly spaced points from `lo` to `hi` inclusive.
pub fn lin_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    assert!(k >= 2, "bad linear grid");
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic substream seed for trial `trial` at sample size `n` under a
/// master seed. Stable across platforms and independent of execution order.
pub fn derive_seed(master: u64, n: u64, trial: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ n.wrapping_mul(0xA076_1D64_78BD_642F));
    s = splitmix64(s ^ trial.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    s
}
