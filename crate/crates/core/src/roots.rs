//! Bracketed one-dimensional root finding.
//!
//! Everything downstream of the basis reduces to locating sign changes of
//! smooth, usually monotone, scalar functions. Brent's method is the default;
//! plain bisection is kept for the places where only the sign is trustworthy.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 200;

/// Bisection on `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::BracketFailure(format!(
            "bisect: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    for _ in 0..DEFAULT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
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

/// Brent's method (inverse quadratic interpolation, secant and bisection).
pub fn brent<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !fa.is_finite() || !fb.is_finite() || fa.signum() == fb.signum() {
        return Err(Error::BracketFailure(format!(
            "brent: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..DEFAULT_MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::NonConvergence(format!(
        "brent did not converge on [{lo}, {hi}]"
    )))
}

/// Index pairs `(i, j)`, `i < j`, bracketing each sign change of the sampled
/// values `ys`. Exact zeros and non-finite samples are skipped.
pub fn sign_change_brackets(ys: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (i, &y) in ys.iter().enumerate() {
        if y == 0.0 || !y.is_finite() {
            continue;
        }
        if let Some((j, s)) = last {
            if s != y.signum() {
                out.push((j, i));
            }
        }
        last = Some((i, y.signum()));
    }
    out
}

/// First root of `f` on `[lo, hi]` found by sampling `n` uniform points and
/// refining the first bracketed change with Brent.
pub fn first_root_by_scan<F>(mut f: F, lo: f64, hi: f64, n: usize, xtol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let n = n.max(2);
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    if f_prev == 0.0 {
        return Some(lo);
    }
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.is_finite() && f_prev.is_finite() && fx.signum() != f_prev.signum() {
            return brent(&mut f, x_prev, x, xtol).ok();
        }
        x_prev = x;
        f_prev = fx;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_matches_cosine_root() {
        let r = brent(f64::cos, 0.0, 3.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn unbracketed_is_an_error() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::BracketFailure(_))
        ));
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn scan_returns_first_of_several_roots() {
        let r = first_root_by_scan(f64::sin, 0.5, 10.0, 100, 1e-14).unwrap();
        assert!((r - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn sign_changes_skip_zeros() {
        let ys = [1.0, 0.0, -1.0, -2.0, 3.0];
        assert_eq!(sign_change_brackets(&ys), vec![(0, 2), (3, 4)]);
    }
}
