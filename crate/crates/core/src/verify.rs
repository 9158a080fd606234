//! Numerical checks of an assembled solution: the generator `L`, the
//! intervention operator `M`, smoothness at the knots, and the identities
//! satisfied by the basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFunctions, Jet, Limit};
use crate::error::{Error, Result};
use crate::landmarks::Landmarks;
use crate::model::ValidatedModel;
use crate::par;
use crate::roots;
use crate::solver::{Segment, Solution, ValueFunction};
use crate::stratify::gamma_raw;

pub const DEFAULT_GRID: usize = 2000;
pub const QVI_RTOL: f64 = 1e-6;
pub const KNOT_GAP_TOL: f64 = 1e-7;
/// Extra grid points placed within `KNOT_RADIUS` of each knot.
const KNOT_POINTS: usize = 10;
const KNOT_RADIUS: f64 = 1e-3;
/// Samples per segment when locating `V' = k`.
const M_SCAN: usize = 400;

/// `(1/2) sigma^2 V'' + mu V' - lambda V` at `x`, right-hand piece at knots.
pub fn apply_l(basis: &BasisFunctions, v: &ValueFunction, x: f64) -> f64 {
    let m = basis.model();
    let [f, fp, fpp] = v.eval(basis, x);
    0.5 * m.sigma2(x) * fpp + m.mu(x) * fp - m.lambda() * f
}

/// Precomputed candidates for `sup_{z <= x} (V(z) - k z)`.
///
/// Between consecutive candidates `V - k z` is monotone, so the supremum over
/// `[0, x]` is attained at a candidate below `x` or at `x` itself.
#[derive(Debug, Clone)]
pub struct InterventionOperator<'a> {
    basis: &'a BasisFunctions,
    v: &'a ValueFunction,
    /// Candidate points and the running maximum of `V(z) - k z` up to each.
    points: Vec<f64>,
    running_max: Vec<f64>,
}

impl<'a> InterventionOperator<'a> {
    pub fn new(basis: &'a BasisFunctions, v: &'a ValueFunction, x_end: f64) -> Self {
        let k = v.k;
        let phi_slope = |z: f64| v.eval(basis, z)[1] - k;
        let mut points: Vec<f64> = v.knots.iter().copied().filter(|&z| z <= x_end).collect();
        for (i, seg) in v.segments.iter().enumerate() {
            if !matches!(seg, Segment::ScaledBasis { .. }) {
                continue;
            }
            let a = v.knots[i];
            let b = v.knots.get(i + 1).copied().unwrap_or(x_end).min(x_end);
            if !(b > a) {
                continue;
            }
            // Stay strictly inside the segment so the slope is that of this piece.
            let (lo, hi) = (a + 1e-12 * (1.0 + a), b - 1e-12 * (1.0 + b));
            let mut prev = (lo, phi_slope(lo));
            for j in 1..=M_SCAN {
                let z = lo + (hi - lo) * j as f64 / M_SCAN as f64;
                let fz = phi_slope(z);
                if prev.1 == 0.0 {
                    points.push(prev.0);
                } else if prev.1.signum() != fz.signum() && fz != 0.0 {
                    if let Ok(r) = roots::brent(phi_slope, prev.0, z, 1e-14 * (1.0 + z)) {
                        points.push(r);
                    }
                }
                prev = (z, fz);
            }
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        let mut best = f64::NEG_INFINITY;
        let running_max = points
            .iter()
            .map(|&z| {
                best = best.max(v.eval(basis, z)[0] - k * z);
                best
            })
            .collect();
        Self {
            basis,
            v,
            points,
            running_max,
        }
    }

    /// `M V(x) = sup_{0 <= z <= x} V(z) + k (x - z) - K`.
    pub fn apply(&self, x: f64) -> f64 {
        let k = self.v.k;
        let idx = self.points.partition_point(|&z| z <= x);
        let mut best = self.v.eval(self.basis, x)[0] - k * x;
        if idx > 0 {
            best = best.max(self.running_max[idx - 1]);
        }
        // Right limit at a knot from the left piece.
        k * x - self.v.fixed_cost + best
    }
}

/// One-off evaluation of `M V(x)`.
pub fn apply_m(basis: &BasisFunctions, v: &ValueFunction, x: f64) -> f64 {
    InterventionOperator::new(basis, v, x.max(v.knots.last().copied().unwrap_or(0.0))).apply(x)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
    /// Where the worst value occurred, when meaningful.
    pub at: Option<f64>,
}

impl Check {
    fn new(name: &str, value: f64, limit: f64, at: Option<f64>) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
            at,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QviReport {
    pub n_grid: usize,
    pub x_end: f64,
    pub scale: f64,
    /// `max |LV|` where `V` follows a basis solution.
    pub lv_continuation: f64,
    /// `max LV` on pieces where dividends are paid; should be negative.
    pub lv_action: f64,
    /// `max (MV - V)` on continuation pieces; should be negative.
    pub mv_continuation: f64,
    /// `max |MV - V|` on payment pieces.
    pub mv_action: f64,
    pub value_gap: f64,
    pub slope_gap: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl QviReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Sample points: uniform grid on `[0, x_end]` plus points clustered at knots.
pub fn qvi_grid(v: &ValueFunction, x_end: f64, n_grid: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n_grid).map(|i| x_end * i as f64 / (n_grid - 1) as f64).collect();
    for &kn in v.knots.iter().skip(1) {
        for j in 0..KNOT_POINTS {
            let off = KNOT_RADIUS * (j as f64 + 0.5) / KNOT_POINTS as f64;
            xs.push(kn - off);
            xs.push(kn + off);
        }
    }
    xs.retain(|&x| (0.0..=x_end).contains(&x));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

/// Right end of the checked range: well past the last knot, inside the basis domain.
pub fn default_x_end(basis: &BasisFunctions, v: &ValueFunction) -> f64 {
    let last = v.knots.last().copied().unwrap_or(0.0);
    (1.5 * last + 2.0).max(10.0).min(basis.x_max())
}

struct PointEval {
    x: f64,
    continuation: bool,
    lv: f64,
    mv_minus_v: f64,
    v: f64,
}

pub fn qvi_report(basis: &BasisFunctions, sol: &Solution, n_grid: usize) -> QviReport {
    let v = &sol.value;
    let x_end = default_x_end(basis, v);
    let xs = qvi_grid(v, x_end, n_grid.max(2));
    let op = InterventionOperator::new(basis, v, x_end);
    let evals: Vec<PointEval> = par::map(&xs, |&x| {
        let seg = v.segments[v.segment_at(x)];
        let val = v.eval(basis, x)[0];
        PointEval {
            x,
            continuation: matches!(seg, Segment::ScaledBasis { .. }),
            lv: apply_l(basis, v, x),
            mv_minus_v: op.apply(x) - val,
            v: val,
        }
    });
    let scale = 1.0 + evals.iter().map(|e| e.v.abs()).fold(0.0, f64::max);
    let tol = QVI_RTOL * scale;
    let worst = |pick: &dyn Fn(&PointEval) -> Option<f64>| -> (f64, Option<f64>) {
        evals.iter().fold((f64::NEG_INFINITY, None), |acc, e| match pick(e) {
            Some(val) if val > acc.0 => (val, Some(e.x)),
            _ => acc,
        })
    };
    let (lv_c, lv_c_at) = worst(&|e| e.continuation.then_some(e.lv.abs()));
    let (lv_a, lv_a_at) = worst(&|e| (!e.continuation).then_some(e.lv));
    let (mv_c, mv_c_at) = worst(&|e| e.continuation.then_some(e.mv_minus_v));
    let (mv_a, mv_a_at) = worst(&|e| (!e.continuation).then_some(e.mv_minus_v.abs()));
    let (value_gap, slope_gap) = v.max_jumps(basis);
    let v0 = v.eval(basis, 0.0)[0].abs();
    let zero_if_empty = |x: f64| if x == f64::NEG_INFINITY { 0.0 } else { x };
    let checks = vec![
        Check::new("lv_continuation", zero_if_empty(lv_c), tol, lv_c_at),
        Check::new("lv_action", zero_if_empty(lv_a), tol, lv_a_at),
        Check::new("mv_continuation", zero_if_empty(mv_c), tol, mv_c_at),
        Check::new("mv_action", zero_if_empty(mv_a), tol, mv_a_at),
        Check::new("value_gap", value_gap, KNOT_GAP_TOL, None),
        Check::new("slope_gap", slope_gap, KNOT_GAP_TOL, None),
        Check::new("v_at_zero", v0, 1e-12 * scale, Some(0.0)),
    ];
    let passed = checks.iter().all(|c| c.passed);
    QviReport {
        n_grid: xs.len(),
        x_end,
        scale,
        lv_continuation: zero_if_empty(lv_c),
        lv_action: zero_if_empty(lv_a),
        mv_continuation: zero_if_empty(mv_c),
        mv_action: zero_if_empty(mv_a),
        value_gap,
        slope_gap,
        checks,
        passed,
    }
}

/// `qvi_report`, turned into an error listing the failed checks.
pub fn qvi_check(basis: &BasisFunctions, sol: &Solution, n_grid: usize) -> Result<QviReport> {
    let r = qvi_report(basis, sol, n_grid);
    if r.passed {
        Ok(r)
    } else {
        let msg: Vec<String> = r
            .failures()
            .iter()
            .map(|c| format!("{} = {:.3e} > {:.3e} at {:?}", c.name, c.value, c.limit, c.at))
            .collect();
        Err(Error::VerificationFailure(msg.join("; ")))
    }
}

/// Outcome of the basis identity checks.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub const FD_RTOL: f64 = 1e-4;
pub const ALGEBRAIC_RTOL: f64 = 1e-8;

/// Relative size of rounding noise in one basis evaluation.
const EVAL_NOISE: f64 = 1e-13;
const FD_STEP: f64 = 5e-3;

/// Error of a central difference against `exact`, scaled so that the check
/// reads `value <= FD_RTOL`. An error of relative size `noise` in `f`
/// (magnitude `f_scale`) is amplified by `1 / step` and is allowed for.
fn fd_err(fd: f64, exact: f64, f_scale: f64, step: f64, noise: f64) -> f64 {
    let allowed = (FD_RTOL * exact.abs()).max(noise * f_scale / step);
    FD_RTOL * (fd - exact).abs() / allowed
}

/// Amplification of relative rounding in `g1`, `gc` and `beta` when forming
/// `g(x; beta)` and `g'(x; beta)`.
fn mix_cond(j: &Jet, beta: f64) -> f64 {
    let g = j.mix(beta);
    let part = |i: usize| (j.g1[i].abs() * (1.0 + beta.abs()) + (j.s * j.gc[i]).abs()) / g[i].abs();
    part(0) + part(1)
}

/// Five-point central difference.
/// Amplification of relative error in `(g, g')` when forming
/// `g'' = 2 (lambda g - mu g') / sigma^2`.
fn curvature_cond(m: &ValidatedModel, x: f64, g: &[f64; 4]) -> f64 {
    2.0 * (m.lambda() * g[0].abs() + (m.mu(x) * g[1]).abs()) / (m.sigma2(x) * g[2].abs())
}

fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Wronskian positivity and the derivative identities of `g2/g1`, `h` and
/// `gamma`, at `n` pseudo-random points.
pub fn identity_suite(basis: &BasisFunctions, lm: &Landmarks, n: usize, seed: u64) -> IdentityReport {
    let m = basis.model();
    let lam = m.lambda();
    let k = m.k();
    let x_hi = basis.x_max().min(lm.x_lambda.max(1.0) * 4.0 + 5.0).min(0.95 * basis.x_max());
    let z0 = basis.z0();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The stencils must stay inside the domain and clear of the pole of h at z0.
    let away = |x: f64| x > 3.0 * FD_STEP && (z0 == 0.0 || (x - z0).abs() > 20.0 * FD_STEP);
    let xs: Vec<f64> = std::iter::repeat_with(|| rng.random_range(0.0..x_hi))
        .filter(|&x| away(x))
        .take(n)
        .collect();
    let betas: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    // Values carry the integrator's relative error; differences see it.
    let noise = basis.tol().max(EVAL_NOISE);
    let mut checks = Vec::new();
    let mut worst = |name: &str, errs: &mut dyn Iterator<Item = (f64, f64)>, limit: f64| {
        let (e, at) = errs.fold((0.0f64, None), |acc, (x, e)| if e > acc.0 || e.is_nan() { (e, Some(x)) } else { acc });
        checks.push(Check::new(name, e, limit, at));
    };

    // W > 0, reported as max(-W / |W|) which is -1 when positive.
    worst(
        "wronskian_positive",
        &mut xs.iter().map(|&x| (x, -basis.jet(x).w.signum())),
        0.0,
    );
    worst(
        "wronskian_abel_vs_product",
        &mut xs.iter().map(|&x| {
            let j = basis.jet(x);
            let (g1, g2) = (j.g1, j.g2());
            let prod = g1[0] * g2[1] - g2[0] * g1[1];
            let norm = (g1[0] * g2[1]).abs() + (g2[0] * g1[1]).abs();
            (x, (prod - j.w).abs() / norm)
        }),
        ALGEBRAIC_RTOL,
    );
    worst(
        "ratio_derivative",
        &mut xs.iter().map(|&x| {
            let r = |y: f64| {
                let j = basis.jet(y);
                j.s * j.gc[0] / j.g1[0]
            };
            let j = basis.jet(x);
            let exact = j.w / (j.g1[0] * j.g1[0]);
            let step = FD_STEP;
            let fd = central(r, x, step);
            (x, fd_err(fd, exact, r(x).abs(), step, noise))
        }),
        FD_RTOL,
    );
    if let Some(x1) = lm.x1_star {
        let mut pts = vec![x1];
        if let Some(Limit::Finite(x2)) = lm.x2_star {
            pts.push(x2);
        }
        worst(
            "h_at_inflections",
            &mut pts.into_iter().map(|x| (x, (basis.h_unchecked(x) - 1.0).abs())),
            ALGEBRAIC_RTOL,
        );
    }
    worst(
        "h_derivative",
        &mut xs.iter().map(|&x| {
            let j = basis.jet(x);
            let s2 = m.sigma2(x);
            let exact = 4.0 * lam * (lam - m.mu_prime(x)) * j.w / (s2 * s2 * j.g1[2] * j.g1[2]);
            // Truncation error grows like `(step / |x - z0|)^4` next to the pole.
            let step = FD_STEP.min(0.05 * (x - basis.z0()).abs());
            let fd = central(|y| basis.jet(y).h_minus_one(), x, step);
            let cond = 1.0 + curvature_cond(m, x, &j.g1) + curvature_cond(m, x, &j.gc);
            (x, fd_err(fd, exact, j.h_minus_one().abs() * cond, step, noise))
        }),
        FD_RTOL,
    );
    worst(
        "second_derivative_wronskian",
        &mut xs.iter().map(|&x| {
            let j = basis.jet(x);
            let (g1, g2) = (j.g1, j.g2());
            let lhs = g1[2] * g2[1] - g2[2] * g1[1];
            let rhs = 2.0 * lam * j.w / m.sigma2(x);
            let norm = (g1[2] * g2[1]).abs() + (g2[2] * g1[1]).abs();
            (x, (lhs - rhs).abs() / norm)
        }),
        ALGEBRAIC_RTOL,
    );
    worst(
        "ratio_at_h",
        // Far out `g1` and `gc` are collinear and `g(.; h(x))` can cancel to
        // exactly zero; such points carry no digits and are skipped.
        &mut xs.iter().filter_map(|&x| {
            let j = basis.jet(x);
            let hx = 1.0 + j.h_minus_one();
            let g = j.mix(hx);
            let target = m.mu(x) / lam;
            let noise = EVAL_NOISE * mix_cond(&j, hx) / ALGEBRAIC_RTOL;
            noise
                .is_finite()
                .then(|| (x, (g[0] / g[1] - target).abs() / (1.0 + target.abs()) / noise.max(1.0)))
        }),
        ALGEBRAIC_RTOL,
    );
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(&betas)
        .map(|(&x, &b)| (x, b))
        .filter(|&(x, b)| basis.g(x, b)[1] > 0.0)
        .collect();
    worst(
        "gamma_beta_derivative",
        &mut pairs.iter().map(|&(x, b)| {
            let j = basis.jet(x);
            let g = j.mix(b);
            let exact = -k * j.w / (g[1] * g[1]);
            let fd = central(|bb| gamma_raw(basis, bb, x), b, FD_STEP);
            let scale = k * ((g[0] / g[1]).abs() * mix_cond(&j, b) + x) + m.fixed_cost();
            let sign = if exact < 0.0 { 0.0 } else { 1.0 };
            (x, fd_err(fd, exact, scale, FD_STEP, noise) + sign)
        }),
        FD_RTOL,
    );
    worst(
        "gamma_x_derivative",
        &mut pairs.iter().map(|&(x, b)| {
            let j = basis.jet(x);
            let g = j.mix(b);
            let exact = -k * g[0] / (g[1] * g[1]) * g[2];
            let step = FD_STEP;
            let fd = central(|y| gamma_raw(basis, b, y), x, step);
            let scale = k * ((g[0] / g[1]).abs() * mix_cond(&j, b) + x) + m.fixed_cost();
            (x, fd_err(fd, exact, scale, step, noise))
        }),
        FD_RTOL,
    );
    let passed = checks.iter().all(|c| c.passed);
    IdentityReport { checks, passed }
}

pub fn identity_check(basis: &BasisFunctions, lm: &Landmarks, n: usize, seed: u64) -> Result<IdentityReport> {
    let r = identity_suite(basis, lm, n, seed);
    if r.passed {
        Ok(r)
    } else {
        let msg: Vec<String> = r
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:.3e} > {:.3e} at {:?}", c.name, c.value, c.limit, c.at))
            .collect();
        Err(Error::IdentityFailure(msg.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::solver::{self, two_level_at, Prepared, Regime};

    fn solved(spec: crate::model::ModelSpec) -> (Prepared, Solution) {
        solver::solve_spec(&spec).unwrap()
    }

    #[test]
    fn generator_vanishes_on_basis_pieces_and_is_affine_elsewhere() {
        let (p, sol) = solved(fixtures::r1());
        let (b, v) = (&p.basis, &sol.value);
        let m = b.model();
        let ub = sol.scalars.u_bar_star;
        for i in 1..50 {
            let x = ub * i as f64 / 50.0;
            assert!(apply_l(b, v, x).abs() < 1e-9, "x = {x}");
        }
        for i in 0..20 {
            let x = ub + 0.1 + 0.3 * i as f64;
            let val = v.eval(b, x)[0];
            let want = m.mu(x) * m.k() - m.lambda() * val;
            assert!((apply_l(b, v, x) - want).abs() < 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn intervention_at_zero_is_minus_fixed_cost() {
        let (p, sol) = solved(fixtures::r2());
        let mv = apply_m(&p.basis, &sol.value, 0.0);
        assert!((mv + sol.value.fixed_cost).abs() < 1e-12);
    }

    #[test]
    fn intervention_matches_brute_force_supremum() {
        let (p, sol) = solved(fixtures::g2());
        let (b, v) = (&p.basis, &sol.value);
        let op = InterventionOperator::new(b, v, 12.0);
        let zs: Vec<f64> = (0..=24_000).map(|i| i as f64 * 5e-4).collect();
        for &x in &[0.3, 1.0, 2.5, 4.0, 7.0, 11.5] {
            let brute = zs
                .iter()
                .filter(|&&z| z <= x)
                .map(|&z| v.eval(b, z)[0] + v.k * (x - z) - v.fixed_cost)
                .fold(f64::NEG_INFINITY, f64::max);
            let got = op.apply(x);
            assert!(got >= brute - 1e-12, "x = {x}");
            assert!(got - brute < 1e-6, "x = {x}: {got} vs {brute}");
        }
    }

    #[test]
    fn intervention_is_increasing_and_at_least_v_minus_k() {
        let (p, sol) = solved(fixtures::g1());
        let (b, v) = (&p.basis, &sol.value);
        let op = InterventionOperator::new(b, v, 10.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=500 {
            let x = 10.0 * i as f64 / 500.0;
            let mv = op.apply(x);
            assert!(mv > prev);
            assert!(mv >= v.eval(b, x)[0] - v.fixed_cost - 1e-12);
            prev = mv;
        }
    }

    #[test]
    fn barrier_value_is_strictly_above_intervention_below_barrier() {
        let (p, sol) = solved(fixtures::r3());
        let (b, v) = (&p.basis, &sol.value);
        let op = InterventionOperator::new(b, v, 10.0);
        let ub = sol.scalars.u_bar_star;
        for i in 1..100 {
            let x = ub * i as f64 / 100.0;
            assert!(op.apply(x) < v.eval(b, x)[0]);
        }
        for i in 0..50 {
            let x = ub + 0.2 * i as f64;
            assert!((op.apply(x) - v.eval(b, x)[0]).abs() < 1e-9 * (1.0 + x));
        }
    }

    #[test]
    fn qvi_holds_for_every_fixture() {
        let all = [
            fixtures::zero_drift(),
            fixtures::p_shape(),
            fixtures::r1(),
            fixtures::r4(),
            fixtures::r5_low_drift(),
            fixtures::g1(),
            fixtures::g3(),
            fixtures::g4(),
            fixtures::g5_edge(),
            fixtures::h2(),
            fixtures::h4_edge(),
            fixtures::concave_tail_two_level(),
            fixtures::concave_tail_no_pair(),
        ];
        for spec in all {
            let (p, sol) = solved(spec);
            qvi_check(&p.basis, &sol, DEFAULT_GRID).unwrap();
        }
    }

    #[test]
    fn perturbed_two_level_solution_fails() {
        let (p, sol) = solved(fixtures::g2());
        assert_eq!(sol.regime, Regime::TwoLevelPartial);
        let beta = sol.scalars.beta.unwrap();
        let sub = solver::Subcase::B;
        let exact = two_level_at(&p, beta, sub).unwrap();
        assert!(qvi_report(&p.basis, &exact, DEFAULT_GRID).passed);
        let off = two_level_at(&p, beta + 0.01, sub).unwrap();
        assert!(qvi_check(&p.basis, &off, DEFAULT_GRID).is_err());
    }

    #[test]
    fn perturbed_ruin_solution_fails() {
        let (p, sol) = solved(fixtures::g1());
        assert_eq!(sol.regime, Regime::TwoLevelToRuin);
        let beta = sol.scalars.beta.unwrap();
        let off = two_level_at(&p, beta + 0.01, solver::Subcase::A).unwrap();
        assert!(!qvi_report(&p.basis, &off, DEFAULT_GRID).passed);
    }

    #[test]
    fn identities_hold_on_closed_form_and_fixtures() {
        for spec in [fixtures::zero_drift(), fixtures::r5_low_drift(), fixtures::h1(), fixtures::g3()] {
            let p = solver::prepare(&spec).unwrap();
            identity_check(&p.basis, &p.landmarks, 200, 11).unwrap();
        }
    }

    #[test]
    fn identity_report_is_reproducible() {
        let p = solver::prepare(&fixtures::r2()).unwrap();
        assert_eq!(identity_suite(&p.basis, &p.landmarks, 50, 3), identity_suite(&p.basis, &p.landmarks, 50, 3));
    }
}
