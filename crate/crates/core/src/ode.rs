//! Dormand–Prince 5(4) integrator with step-size control.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Integration stops early once any component exceeds this magnitude.
    pub blowup: f64,
}

impl StepControl {
    pub fn new(tol: f64, h_max: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-3,
            h_max,
            h_min: 1e-14,
            blowup: 1e200,
        }
    }
}

/// Accepted steps of one integration leg, in the order visited.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    /// True when the leg stopped before `x_end` because of `blowup`.
    pub truncated: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end` (either direction).
pub fn integrate<const N: usize, F>(
    f: F,
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    ctl: &StepControl,
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut traj = Trajectory {
        xs: vec![x0],
        ys: vec![y0],
        truncated: false,
    };
    if x_end == x0 {
        return Ok(traj);
    }
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = ctl.h_max.min((x_end - x0).abs()) * 0.1;
    let mut reject_streak = 0usize;
    loop {
        let remaining = (x_end - x) * dir;
        if remaining <= 0.0 {
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = h * dir;
        let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            x + C4 * hs,
            &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            x + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + hs,
            &axpy(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            hs,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let x_new = if last { x_end } else { x + hs };
        let k7 = f(x_new, &y_new);
        let mut err = 0.0_f64;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Error::IntegrationFailure {
                x,
                detail: "non-finite error estimate".into(),
            });
        }
        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            traj.xs.push(x);
            traj.ys.push(y);
            reject_streak = 0;
            if y.iter().any(|v| v.abs() > ctl.blowup) {
                traj.truncated = true;
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(ctl.h_max);
        } else {
            reject_streak += 1;
            h *= (0.9 * err.powf(-0.25)).clamp(0.1, 0.5);
            if h < ctl.h_min || reject_streak > 100 {
                return Err(Error::IntegrationFailure {
                    x,
                    detail: format!("step size underflow (h = {h:e})"),
                });
            }
        }
    }
    Ok(traj)
}
