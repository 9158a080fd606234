//! Problem instances: drift, diffusion, discount rate and transaction costs.

use serde::{Deserialize, Serialize};

use crate::error::{Assumption, Error, Result};
use crate::roots;

/// Number of sample points used for the assumption checks on `[0, x_max]`.
const ASSUMPTION_SAMPLES: usize = 4001;

/// Search horizon for `x_lambda` when no truncation point is supplied.
const DEFAULT_SEARCH_LIMIT: f64 = 1.0e3;

/// Parametric coefficient families.
///
/// Parameter vectors (`s` is an optional trailing linear slope, default 0):
///
/// | family       | params                 | value                                   |
/// |--------------|------------------------|-----------------------------------------|
/// | `affine`     | `a, b`                 | `a + b x`                               |
/// | `saturating` | `a, b, c [, s]`        | `a + b (1 - e^{-c x}) + s x`            |
/// | `logistic`   | `a, b, c, x0 [, s]`    | `a + b / (1 + e^{-c (x - x0)}) + s x`   |
/// | `hump`       | `a, s, b, c [, d]`     | `a + s x + (b x - d) e^{-c x} + d`      |
/// | `tabulated`  | `x0, y0, x1, y1, ...`  | natural cubic spline, linear beyond     |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Affine,
    Saturating,
    Logistic,
    Hump,
    Tabulated,
}

/// Serialized form of a coefficient: `{"family": "...", "params": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: FamilyKind,
    pub params: Vec<f64>,
}

impl FamilySpec {
    pub fn new(family: FamilyKind, params: &[f64]) -> Self {
        Self {
            family,
            params: params.to_vec(),
        }
    }

    pub fn constant(a: f64) -> Self {
        Self::new(FamilyKind::Affine, &[a, 0.0])
    }
}

/// A problem instance as read from a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub drift: FamilySpec,
    pub diffusion: FamilySpec,
    pub lambda: f64,
    pub k: f64,
    #[serde(rename = "K")]
    pub fixed_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
}

/// Natural cubic spline with linear extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidParameter(
                "tabulated family needs at least two (x, y) pairs".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the natural spline system.
            let mut c_prime = vec![0.0; n];
            let mut d_prime = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let c = h1 / 6.0;
                let d = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
                let denom = b - a * c_prime[i - 1];
                c_prime[i] = c / denom;
                d_prime[i] = (d - a * d_prime[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d_prime[i] - c_prime[i] * m[i + 1];
            }
        }
        Ok(Self { xs, ys, m })
    }

    fn value_and_slope(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        let (x0, xn) = (self.xs[0], self.xs[n - 1]);
        if x <= x0 {
            let s = self.slope_at_knot(0);
            return (self.ys[0] + s * (x - x0), s);
        }
        if x >= xn {
            let s = self.slope_at_knot(n - 1);
            return (self.ys[n - 1] + s * (x - xn), s);
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let y = a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dy = (self.ys[i + 1] - self.ys[i]) / h
            - (3.0 * a * a - 1.0) / 6.0 * h * m0
            + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        (y, dy)
    }

    fn slope_at_knot(&self, i: usize) -> f64 {
        let n = self.xs.len();
        if i == 0 {
            let h = self.xs[1] - self.xs[0];
            (self.ys[1] - self.ys[0]) / h - h * (2.0 * self.m[0] + self.m[1]) / 6.0
        } else {
            let h = self.xs[n - 1] - self.xs[n - 2];
            (self.ys[n - 1] - self.ys[n - 2]) / h + h * (self.m[n - 2] + 2.0 * self.m[n - 1]) / 6.0
        }
    }
}

/// A coefficient function with closed-form first derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Affine { a: f64, b: f64 },
    Saturating { a: f64, b: f64, c: f64, s: f64 },
    Logistic { a: f64, b: f64, c: f64, x0: f64, s: f64 },
    Hump { a: f64, s: f64, b: f64, c: f64, d: f64 },
    Tabulated(CubicSpline),
}

impl Coefficient {
    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        let p = &spec.params;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite parameter in {:?} family",
                spec.family
            )));
        }
        let arity = |allowed: &[usize]| -> Result<()> {
            if allowed.contains(&p.len()) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{:?} family expects {:?} parameters, got {}",
                    spec.family,
                    allowed,
                    p.len()
                )))
            }
        };
        let coef = match spec.family {
            FamilyKind::Affine => {
                arity(&[1, 2])?;
                Coefficient::Affine {
                    a: p[0],
                    b: p.get(1).copied().unwrap_or(0.0),
                }
            }
            FamilyKind::Saturating => {
                arity(&[3, 4])?;
                Coefficient::Saturating {
                    a: p[0],
                    b: p[1],
                    c: p[2],
                    s: p.get(3).copied().unwrap_or(0.0),
                }
            }
            FamilyKind::Logistic => {
                arity(&[4, 5])?;
                Coefficient::Logistic {
                    a: p[0],
                    b: p[1],
                    c: p[2],
                    x0: p[3],
                    s: p.get(4).copied().unwrap_or(0.0),
                }
            }
            FamilyKind::Hump => {
                arity(&[4, 5])?;
                Coefficient::Hump {
                    a: p[0],
                    s: p[1],
                    b: p[2],
                    c: p[3],
                    d: p.get(4).copied().unwrap_or(0.0),
                }
            }
            FamilyKind::Tabulated => {
                if !p.len().is_multiple_of(2) {
                    return Err(Error::InvalidParameter(
                        "tabulated family expects (x, y) pairs".into(),
                    ));
                }
                let xs = p.iter().step_by(2).copied().collect();
                let ys = p.iter().skip(1).step_by(2).copied().collect();
                Coefficient::Tabulated(CubicSpline::new(xs, ys)?)
            }
        };
        Ok(coef)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Coefficient::Affine { a, b } => a + b * x,
            Coefficient::Saturating { a, b, c, s } => a + b * (-(-c * x).exp_m1()) + s * x,
            Coefficient::Logistic { a, b, c, x0, s } => {
                a + b / (1.0 + (-c * (x - x0)).exp()) + s * x
            }
            Coefficient::Hump { a, s, b, c, d } => a + s * x + b * x * (-c * x).exp() - d * (-c * x).exp_m1(),
            Coefficient::Tabulated(ref sp) => sp.value_and_slope(x).0,
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Coefficient::Affine { b, .. } => b,
            Coefficient::Saturating { b, c, s, .. } => b * c * (-c * x).exp() + s,
            Coefficient::Logistic { b, c, x0, s, .. } => {
                let e = (-c * (x - x0)).exp();
                b * c * e / ((1.0 + e) * (1.0 + e)) + s
            }
            Coefficient::Hump { s, b, c, d, .. } => s + (b * (1.0 - c * x) + d * c) * (-c * x).exp(),
            Coefficient::Tabulated(ref sp) => sp.value_and_slope(x).1,
        }
    }
}

/// A model that passed the assumption checks, together with `x_lambda`.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct ValidatedModel {
    spec: ModelSpec,
    drift: Coefficient,
    diffusion: Coefficient,
    x_lambda: f64,
    x_max: f64,
    growth_constant: f64,
}

impl ValidatedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }
    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }
    pub fn k(&self) -> f64 {
        self.spec.k
    }
    pub fn fixed_cost(&self) -> f64 {
        self.spec.fixed_cost
    }
    pub fn x_lambda(&self) -> f64 {
        self.x_lambda
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    /// Fitted constant of the linear growth bound on the sample.
    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
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

    pub fn eval_mu(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.mu(x))
    }
    pub fn eval_sigma(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.sigma(x))
    }
    pub fn eval_mu_prime(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.mu_prime(x))
    }
    pub fn eval_sigma_prime(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.sigma_prime(x))
    }

    // Unchecked evaluations; used on hot paths where the caller owns the domain.
    #[inline]
    pub fn mu(&self, x: f64) -> f64 {
        self.drift.value(x)
    }
    #[inline]
    pub fn sigma(&self, x: f64) -> f64 {
        self.diffusion.value(x)
    }
    #[inline]
    pub fn mu_prime(&self, x: f64) -> f64 {
        self.drift.derivative(x)
    }
    #[inline]
    pub fn sigma_prime(&self, x: f64) -> f64 {
        self.diffusion.derivative(x)
    }
    #[inline]
    pub fn sigma2(&self, x: f64) -> f64 {
        let s = self.sigma(x);
        s * s
    }

    /// `mu(x) k - lambda (k x - K)`, the generator applied to `k x - K`.
    #[inline]
    pub fn payout_generator(&self, x: f64) -> f64 {
        self.mu(x) * self.k() - self.lambda() * (self.k() * x - self.fixed_cost())
    }
}

/// Checks a model against A1-A4 and locates `x_lambda`.
pub fn validate(spec: &ModelSpec) -> Result<ValidatedModel> {
    let positive = |name: &str, v: f64| -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
        }
    };
    positive("lambda", spec.lambda)?;
    positive("k", spec.k)?;
    positive("K", spec.fixed_cost)?;
    if let Some(xm) = spec.x_max {
        positive("x_max", xm)?;
    }
    let drift = Coefficient::from_spec(&spec.drift)?;
    let diffusion = Coefficient::from_spec(&spec.diffusion)?;
    let lambda = spec.lambda;

    let search_hi = spec.x_max.unwrap_or(DEFAULT_SEARCH_LIMIT);
    let x_lambda = locate_x_lambda(&drift, lambda, search_hi)?;
    let x_max = spec.x_max.unwrap_or(50.0 * x_lambda.max(1.0));

    let n = ASSUMPTION_SAMPLES;
    let mut growth_constant = 0.0_f64;
    for i in 0..n {
        let x = x_max * i as f64 / (n - 1) as f64;
        let (mu, sig) = (drift.value(x), diffusion.value(x));
        let (dmu, dsig) = (drift.derivative(x), diffusion.derivative(x));
        if !(mu.is_finite() && sig.is_finite()) {
            return Err(Error::AssumptionViolation {
                assumption: Assumption::A1,
                x,
                detail: "non-finite coefficient".into(),
            });
        }
        if !(dmu.is_finite() && dsig.is_finite()) {
            return Err(Error::AssumptionViolation {
                assumption: Assumption::A2,
                x,
                detail: "non-finite derivative".into(),
            });
        }
        if sig * sig <= 0.0 {
            return Err(Error::AssumptionViolation {
                assumption: Assumption::A3,
                x,
                detail: format!("sigma^2 = {}", sig * sig),
            });
        }
        growth_constant = growth_constant.max((mu.abs() + sig.abs()) / (1.0 + x));
        if x > x_lambda && dmu - lambda > 1e-12 * (1.0 + lambda) {
            return Err(Error::AssumptionViolation {
                assumption: Assumption::A4,
                x,
                detail: format!("mu'(x) - lambda = {} > 0 beyond x_lambda = {x_lambda}", dmu - lambda),
            });
        }
        if x < x_lambda && dmu <= lambda {
            return Err(Error::AssumptionViolation {
                assumption: Assumption::A4,
                x,
                detail: format!("mu'(x) - lambda = {} <= 0 before x_lambda = {x_lambda}", dmu - lambda),
            });
        }
    }

    Ok(ValidatedModel {
        spec: ModelSpec {
            x_max: Some(x_max),
            ..spec.clone()
        },
        drift,
        diffusion,
        x_lambda,
        x_max,
        growth_constant,
    })
}

fn locate_x_lambda(drift: &Coefficient, lambda: f64, hi: f64) -> Result<f64> {
    let f = |x: f64| drift.derivative(x) - lambda;
    if f(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let n = ASSUMPTION_SAMPLES;
    let mut prev = 0.0;
    for i in 1..n {
        let x = hi * i as f64 / (n - 1) as f64;
        if f(x) <= 0.0 {
            return roots::bisect(f, prev, x, 0.0);
        }
        prev = x;
    }
    Err(Error::AssumptionViolation {
        assumption: Assumption::A4,
        x: hi,
        detail: "mu'(x) > lambda on the whole sampled domain".into(),
    })
}
