//! The two positive solutions `g1`, `g2` of `Lg = 0` and everything built
//! directly on them: `g(x; beta)`, the Wronskian, `h = g2''/g1''` and its
//! inverse branches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::ode::{self, StepControl};
use crate::roots;

/// Default local relative tolerance of the integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative change between `0.9 x_max` and `x_max` above which a limit is
/// reported as infinite.
pub const RICHARDSON_RTOL: f64 = 1e-3;

/// Values beyond this magnitude stop the integration; the effective domain
/// then ends where they were reached.
const BLOWUP: f64 = 1e150;

/// A limit at infinity, realized at the truncation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Finite(f64),
    Infinite,
}

impl Limit {
    pub fn finite(self) -> Option<f64> {
        match self {
            Limit::Finite(v) => Some(v),
            Limit::Infinite => None,
        }
    }
    pub fn is_infinite(self) -> bool {
        matches!(self, Limit::Infinite)
    }
    /// `+inf` for the infinite marker.
    pub fn value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    fn from_samples(at_end: f64, at_ninety: f64) -> Self {
        let scale = at_end.abs().max(at_ninety.abs()).max(1e-300);
        if (at_end - at_ninety).abs() / scale > RICHARDSON_RTOL || !at_end.is_finite() {
            Limit::Infinite
        } else {
            Limit::Finite(at_end)
        }
    }
}

/// Value and first three derivatives of `g1` and of the canonical solution
/// `gc` at one point, together with the Wronskian of `(g1, g2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub g1: [f64; 4],
    pub gc: [f64; 4],
    pub s: f64,
    pub w: f64,
}

impl Jet {
    /// Derivatives of `g(x; beta) = g2 - beta g1 = (1 - beta) g1 + s gc`.
    #[inline]
    pub fn mix(&self, beta: f64) -> [f64; 4] {
        let a = 1.0 - beta;
        [
            a * self.g1[0] + self.s * self.gc[0],
            a * self.g1[1] + self.s * self.gc[1],
            a * self.g1[2] + self.s * self.gc[2],
            a * self.g1[3] + self.s * self.gc[3],
        ]
    }

    #[inline]
    pub fn g2(&self) -> [f64; 4] {
        self.mix(0.0)
    }

    /// `h - 1 = s gc'' / g1''`, free of the cancellation in `g2'' - g1''`.
    #[inline]
    pub fn h_minus_one(&self) -> f64 {
        self.s * self.gc[2] / self.g1[2]
    }
}

/// Sampled basis. `g2 = g1 + s gc`, where `gc` is the solution with
/// `gc(0) = 0`, `gc'(0) = 1`; keeping `gc` separately avoids cancellation in
/// `g(x; beta) = (1 - beta) g1 + s gc`.
#[derive(Debug, Clone)]
pub struct BasisFunctions {
    model: ValidatedModel,
    grid: Vec<f64>,
    g1: Vec<f64>,
    g1p: Vec<f64>,
    g1pp: Vec<f64>,
    gc: Vec<f64>,
    gcp: Vec<f64>,
    gcpp: Vec<f64>,
    /// `ln W(x) - ln W(0)`, from Abel's formula.
    log_w: Vec<f64>,
    s: f64,
    x_max: f64,
    truncated: bool,
    z0: f64,
    g1p_inf: Limit,
    g2p_inf: Limit,
    tol: f64,
}

/// Local quintic Hermite interpolation from values, slopes and curvatures at
/// both ends of a cell. Returns value, first and second derivative.
#[inline]
fn hermite5(h: f64, t: f64, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = [1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5, -30.0 * t2 + 60.0 * t3 - 30.0 * t4, -60.0 * t + 180.0 * t2 - 120.0 * t3];
    let h1 = [t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5, 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4, -36.0 * t + 96.0 * t2 - 60.0 * t3];
    let h2 = [
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
    ];
    let h3 = [0.5 * t3 - t4 + 0.5 * t5, 1.5 * t2 - 4.0 * t3 + 2.5 * t4, 3.0 * t - 12.0 * t2 + 10.0 * t3];
    let h4 = [-4.0 * t3 + 7.0 * t4 - 3.0 * t5, -12.0 * t2 + 28.0 * t3 - 15.0 * t4, -24.0 * t + 84.0 * t2 - 60.0 * t3];
    let h5 = [10.0 * t3 - 15.0 * t4 + 6.0 * t5, 30.0 * t2 - 60.0 * t3 + 30.0 * t4, 60.0 * t - 180.0 * t2 + 120.0 * t3];
    let mut out = [0.0; 3];
    let mut scale = 1.0;
    for (d, o) in out.iter_mut().enumerate() {
        let v = h0[d] * a[0] + h * h1[d] * a[1] + h * h * h2[d] * a[2] + h5[d] * b[0] + h * h4[d] * b[1] + h * h * h3[d] * b[2];
        *o = v / scale;
        scale *= h;
    }
    out
}

impl BasisFunctions {
    pub fn model(&self) -> &ValidatedModel {
        &self.model
    }
    /// End of the domain on which the basis is available.
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    /// True when the integration was cut short of the model's `x_max` to
    /// avoid overflow.
    pub fn truncated(&self) -> bool {
        self.truncated
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
    pub fn g1p_inf(&self) -> Limit {
        self.g1p_inf
    }
    pub fn g2p_inf(&self) -> Limit {
        self.g2p_inf
    }
    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if (0.0..=self.x_max).contains(&x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                lo: 0.0,
                hi: self.x_max,
            })
        }
    }

    #[inline]
    fn cell(&self, x: f64) -> usize {
        let n = self.grid.len();
        match self.grid.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Interpolated value, slope and interpolant curvature of `g1`, `gc`, and
    /// the interpolated `ln W - ln W(0)`.
    #[inline]
    fn interpolate(&self, x: f64) -> ([f64; 3], [f64; 3], f64) {
        let i = self.cell(x);
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = ((x - x0) / h).clamp(0.0, 1.0);
        let a1 = [self.g1[i], self.g1p[i], self.g1pp[i]];
        let b1 = [self.g1[i + 1], self.g1p[i + 1], self.g1pp[i + 1]];
        let ac = [self.gc[i], self.gcp[i], self.gcpp[i]];
        let bc = [self.gc[i + 1], self.gcp[i + 1], self.gcpp[i + 1]];
        let m = &self.model;
        let lw = |j: usize| {
            let xj = self.grid[j];
            let (mu, sig) = (m.mu(xj), m.sigma(xj));
            let s2 = sig * sig;
            let d = -2.0 * mu / s2;
            let dd = -2.0 * (m.mu_prime(xj) * s2 - 2.0 * mu * sig * m.sigma_prime(xj)) / (s2 * s2);
            [self.log_w[j], d, dd]
        };
        let w = hermite5(h, t, lw(i), lw(i + 1))[0];
        (hermite5(h, t, a1, b1), hermite5(h, t, ac, bc), w)
    }

    /// Full jet at `x` (clamped to the domain). Second and third derivatives
    /// come from the differential equation applied to the interpolated value
    /// and slope.
    #[inline]
    pub fn jet(&self, x: f64) -> Jet {
        let x = x.clamp(0.0, self.x_max);
        let (i1, ic, lw) = self.interpolate(x);
        let m = &self.model;
        let (mu, sig, dmu, dsig) = (m.mu(x), m.sigma(x), m.mu_prime(x), m.sigma_prime(x));
        let s2 = sig * sig;
        let lam = m.lambda();
        let complete = |v: [f64; 3]| -> [f64; 4] {
            let g = v[0];
            let gp = v[1];
            let gpp = 2.0 * (lam * g - mu * gp) / s2;
            let gppp = 2.0 * (lam - dmu) * gp / s2 - 2.0 * (mu + sig * dsig) * gpp / s2;
            [g, gp, gpp, gppp]
        };
        Jet {
            g1: complete(i1),
            gc: complete(ic),
            s: self.s,
            w: self.s * lw.exp(),
        }
    }

    /// Second derivatives of the interpolants of `g1` and `g2` themselves
    /// (not through the ODE). Used to check interpolation consistency.
    pub fn interpolant_curvature(&self, x: f64) -> (f64, f64) {
        let (a, c, _) = self.interpolate(x.clamp(0.0, self.x_max));
        (a[2], a[2] + self.s * c[2])
    }

    /// Weight of `gc` in `g2 = g1 + s gc`; also `W(0)`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Node table `(x, g1, g1', g1'', g2, g2', g2'')`.
    pub fn nodes(&self) -> impl Iterator<Item = [f64; 7]> + '_ {
        (0..self.grid.len()).map(move |i| {
            let s = self.s;
            [
                self.grid[i],
                self.g1[i],
                self.g1p[i],
                self.g1pp[i],
                self.g1[i] + s * self.gc[i],
                self.g1p[i] + s * self.gcp[i],
                self.g1pp[i] + s * self.gcpp[i],
            ]
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `g(x; beta)` and its derivatives up to third order, unchecked.
    #[inline]
    pub fn g(&self, x: f64, beta: f64) -> [f64; 4] {
        self.jet(x).mix(beta)
    }

    /// Derivative `order` (0..=3) of `g(x; beta) = g2(x) - beta g1(x)`.
    pub fn eval(&self, x: f64, beta: f64, order: usize) -> Result<f64> {
        self.check_domain(x)?;
        if order > 3 {
            return Err(Error::InvalidParameter(format!("derivative order {order} > 3")));
        }
        Ok(self.g(x, beta)[order])
    }

    pub fn wronskian(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.jet(x).w)
    }

    /// `h(x) = g2''(x) / g1''(x)`.
    pub fn h(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        if self.z0 > 0.0 && (x - self.z0).abs() < 1e-9 * (1.0 + self.z0) {
            return Err(Error::SingularAtZ0 { x, z0: self.z0 });
        }
        Ok(self.h_unchecked(x))
    }

    #[inline]
    pub fn h_unchecked(&self, x: f64) -> f64 {
        1.0 + self.jet(x).h_minus_one()
    }

    /// Value at `x_max` if the Richardson check passes.
    pub fn limit_of<F: Fn(f64) -> f64>(&self, f: F) -> Limit {
        Limit::from_samples(f(self.x_max), f(0.9 * self.x_max))
    }

    /// `lim g'(x; beta)` as `x -> inf`.
    pub fn gp_inf(&self, beta: f64) -> Limit {
        match (self.g1p_inf, self.g2p_inf) {
            (Limit::Finite(a), Limit::Finite(b)) => Limit::Finite(b - beta * a),
            _ => self.limit_of(|x| self.g(x, beta)[1]),
        }
    }
}

/// Builds `g1` (minimum at `x_lambda`) and the increasing `g2`, both equal to
/// one at the origin.
pub fn build_basis(model: &ValidatedModel, tol: f64) -> Result<BasisFunctions> {
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(Error::InvalidParameter(format!("basis tolerance {tol} out of range")));
    }
    let x_lambda = model.x_lambda();
    let x_max = model.x_max();
    let lam = model.lambda();
    let rhs2 = |x: f64, y: &[f64; 2]| -> [f64; 2] {
        let s2 = model.sigma2(x);
        [y[1], 2.0 * (lam * y[0] - model.mu(x) * y[1]) / s2]
    };
    let rhs5 = |x: f64, y: &[f64; 5]| -> [f64; 5] {
        let s2 = model.sigma2(x);
        let mu = model.mu(x);
        [
            y[1],
            2.0 * (lam * y[0] - mu * y[1]) / s2,
            y[3],
            2.0 * (lam * y[2] - mu * y[3]) / s2,
            -2.0 * mu / s2,
        ]
    };
    let h_max = (x_max / 5000.0).clamp(1e-4, 0.01);
    let mut ctl = StepControl::new(tol * 1e-2, h_max);
    ctl.blowup = BLOWUP;

    // g1 with g1(x_lambda) = 1, g1'(x_lambda) = 0, carried back to the origin.
    let back = ode::integrate(rhs2, x_lambda, [1.0, 0.0], 0.0, &ctl)?;
    let at0 = *back.ys.last().expect("non-empty trajectory");
    if back.truncated {
        return Err(Error::IntegrationFailure {
            x: *back.xs.last().unwrap(),
            detail: "g1 overflowed while integrating towards the origin".into(),
        });
    }

    // Forward pass: g1 from its data at the origin, the solution with value 0
    // and slope 1 at the origin, and Abel's integral for the Wronskian.
    let fwd = ode::integrate(rhs5, 0.0, [at0[0], at0[1], 0.0, 1.0, 0.0], x_max, &ctl)?;
    let truncated = fwd.truncated;
    let n = fwd.xs.len();
    if n < 10 {
        return Err(Error::IntegrationFailure {
            x: *fwd.xs.last().unwrap(),
            detail: "too few accepted steps".into(),
        });
    }
    let x_end = *fwd.xs.last().unwrap();
    let scale1 = at0[0];
    if !(scale1 > 0.0) {
        return Err(Error::StructureFailure(format!("g1(0) = {scale1} is not positive")));
    }
    let g1: Vec<f64> = fwd.ys.iter().map(|y| y[0] / scale1).collect();
    let g1p: Vec<f64> = fwd.ys.iter().map(|y| y[1] / scale1).collect();
    let gc: Vec<f64> = fwd.ys.iter().map(|y| y[2]).collect();
    let gcp: Vec<f64> = fwd.ys.iter().map(|y| y[3]).collect();

    if let Some(i) = gcp.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::StructureFailure(format!(
            "canonical solution not increasing at x = {}",
            fwd.xs[i]
        )));
    }

    // g2 = g1 + s gc, with g2'(0) matched to the growing exponent of the
    // frozen-coefficient equation at the origin when that is admissible.
    let (mu0, s0) = (model.mu(0.0), model.sigma2(0.0));
    let theta_plus = (-mu0 + (mu0 * mu0 + 2.0 * s0 * lam).sqrt()) / s0;
    let s_min = g1p
        .iter()
        .zip(&gcp)
        .map(|(a, b)| -a / b)
        .fold(0.0_f64, f64::max);
    let mut s = theta_plus - g1p[0];
    if !(s > s_min * (1.0 + 1e-6)) || !(s > 0.0) {
        s = 2.0 * s_min.max(1e-12);
    }
    let curv = |x: f64, g: f64, gp: f64| 2.0 * (lam * g - model.mu(x) * gp) / model.sigma2(x);
    let g1pp: Vec<f64> = (0..n).map(|i| curv(fwd.xs[i], g1[i], g1p[i])).collect();
    let gcpp: Vec<f64> = (0..n).map(|i| curv(fwd.xs[i], gc[i], gcp[i])).collect();
    let log_w: Vec<f64> = fwd.ys.iter().map(|y| y[4]).collect();

    let mut basis = BasisFunctions {
        model: model.clone(),
        grid: fwd.xs,
        g1,
        g1p,
        g1pp,
        gc,
        gcp,
        gcpp,
        log_w,
        s,
        x_max: x_end,
        truncated,
        z0: 0.0,
        g1p_inf: Limit::Infinite,
        g2p_inf: Limit::Infinite,
        tol,
    };
    check_structure(&basis)?;
    basis.z0 = locate_z0(&basis)?;
    basis.g1p_inf = basis.limit_of(|x| basis.jet(x).g1[1]);
    basis.g2p_inf = basis.limit_of(|x| basis.jet(x).g2()[1]);
    Ok(basis)
}

fn check_structure(b: &BasisFunctions) -> Result<()> {
    let xl = b.model.x_lambda();
    let slack = 1e-7;
    for i in 0..b.grid.len() {
        let x = b.grid[i];
        let fail = |what: &str| Err(Error::StructureFailure(format!("{what} at x = {x}")));
        if !(b.g1[i] > 0.0) {
            return fail("g1 not positive");
        }
        if !(b.g1p[i] + b.s * b.gcp[i] > 0.0) {
            return fail("g2 not increasing");
        }
        let tiny = slack * b.g1[i].max(1.0);
        if x < xl && b.g1p[i] > tiny {
            return fail("g1' positive before x_lambda");
        }
        if x > xl && b.g1p[i] < -tiny {
            return fail("g1' negative after x_lambda");
        }
        if x >= xl && b.g1pp[i] <= 0.0 {
            return fail("g1'' not positive after x_lambda");
        }
    }
    Ok(())
}

fn locate_z0(b: &BasisFunctions) -> Result<f64> {
    let xl = b.model.x_lambda();
    if b.g1pp[0] >= 0.0 || xl == 0.0 {
        return Ok(0.0);
    }
    let f = |x: f64| b.jet(x).g1[2];
    if f(xl) <= 0.0 {
        return Err(Error::StructureFailure("g1'' does not change sign below x_lambda".into()));
    }
    roots::bisect(f, 0.0, xl, 1e-13)
}

/// Monotone pieces of `h` around `x_lambda`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HBranches {
    pub z0: f64,
    pub x_lambda: f64,
    pub h_at_xlambda: f64,
    pub h_inf: Limit,
    /// `h` at the lower end of the decreasing branch; `+inf` when `z0 > 0`.
    pub minus_top: f64,
    /// `h(x_max)`, the largest value attained on the increasing branch.
    pub plus_top: f64,
    minus_lo: f64,
    x_max: f64,
}

pub fn build_h_branches(b: &BasisFunctions) -> Result<HBranches> {
    let xl = b.model.x_lambda();
    let z0 = b.z0;
    let h_at_xlambda = b.h_unchecked(xl);
    let (minus_lo, minus_top) = if z0 > 0.0 {
        // h -> +inf as x decreases to z0; step off until h is finite and large.
        let mut d = 1e-6 * (xl - z0);
        let mut lo = z0 + d;
        while !(b.h_unchecked(lo).is_finite() && b.h_unchecked(lo) > 0.0) && d < 0.5 * (xl - z0) {
            d *= 2.0;
            lo = z0 + d;
        }
        (lo, f64::INFINITY)
    } else {
        (0.0, b.h_unchecked(0.0))
    };
    let plus_top = b.h_unchecked(b.x_max);
    let br = HBranches {
        z0,
        x_lambda: xl,
        h_at_xlambda,
        h_inf: b.limit_of(|x| b.h_unchecked(x)),
        minus_top,
        plus_top,
        minus_lo,
        x_max: b.x_max,
    };
    // Monotonicity on the node tables.
    let mut prev: Option<f64> = None;
    for (&x, (&a, &c)) in b.grid.iter().zip(b.g1pp.iter().zip(&b.gcpp)) {
        if x <= minus_lo || x > xl {
            continue;
        }
        let hv = 1.0 + b.s * c / a;
        if let Some(p) = prev {
            if hv > p * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::StructureFailure(format!("h not decreasing at x = {x}")));
            }
        }
        prev = Some(hv);
    }
    let mut prev: Option<f64> = None;
    for (&x, (&a, &c)) in b.grid.iter().zip(b.g1pp.iter().zip(&b.gcpp)) {
        if x < xl {
            continue;
        }
        let hv = 1.0 + b.s * c / a;
        if let Some(p) = prev {
            // h flattens where mu' approaches lambda; allow round-off there.
            if hv < p - 1e-8 * p.abs().max(1.0) {
                return Err(Error::StructureFailure(format!("h not increasing at x = {x}")));
            }
        }
        prev = Some(hv);
    }
    Ok(br)
}

impl HBranches {
    /// Inverse of `h` on the decreasing branch `(z0, x_lambda]`.
    pub fn h_inv_minus(&self, b: &BasisFunctions, y: f64) -> Result<f64> {
        let lo_val = self.h_at_xlambda;
        if !(y >= lo_val && y <= self.minus_top) || self.x_lambda == 0.0 {
            return Err(Error::Range {
                y,
                lo: lo_val,
                hi: self.minus_top,
            });
        }
        if y == lo_val {
            return Ok(self.x_lambda);
        }
        let mut lo = self.minus_lo;
        let f = |x: f64| b.h_unchecked(x) - y;
        // Shrink towards z0 until the bracket holds.
        while f(lo) < 0.0 && self.z0 > 0.0 && lo - self.z0 > 1e-15 * (1.0 + self.z0) {
            lo = self.z0 + 0.5 * (lo - self.z0);
        }
        if f(lo) < 0.0 {
            return Err(Error::Range {
                y,
                lo: lo_val,
                hi: b.h_unchecked(lo),
            });
        }
        roots::brent(f, lo, self.x_lambda, 1e-14)
    }

    /// Inverse of `h` on the increasing branch `[x_lambda, x_max]`.
    pub fn h_inv_plus(&self, b: &BasisFunctions, y: f64) -> Result<f64> {
        if !(y >= self.h_at_xlambda && y <= self.plus_top) {
            return Err(Error::Range {
                y,
                lo: self.h_at_xlambda,
                hi: self.plus_top,
            });
        }
        if y == self.h_at_xlambda {
            return Ok(self.x_lambda);
        }
        roots::brent(|x| b.h_unchecked(x) - y, self.x_lambda, self.x_max, 1e-14)
    }
}
