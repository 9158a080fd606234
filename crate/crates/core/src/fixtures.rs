//! Named model instances, one per solution regime.
//!
//! Drift families: saturating `a + b (1 - e^{-cx})` with unit volatility, whose
//! canonical solution has an unbounded slope, and the hump
//! `a + x/2 + (b x - d) e^{-cx} + d` with volatility `1 + x`, whose slope tends to a
//! finite limit.

use crate::model::{FamilyKind, FamilySpec, ModelSpec};

fn saturating(p: [f64; 3], k: f64, fixed_cost: f64) -> ModelSpec {
    ModelSpec {
        drift: FamilySpec::new(FamilyKind::Saturating, &p),
        diffusion: FamilySpec::constant(1.0),
        lambda: 0.5,
        k,
        fixed_cost,
        x_max: None,
    }
}

/// `a + x/2 + (b x - d) e^{-cx} + d`, volatility `1 + x`, `lambda = 1/2`, `k = 1`.
pub fn hump(a: f64, b: f64, c: f64, d: f64, fixed_cost: f64) -> ModelSpec {
    ModelSpec {
        drift: FamilySpec::new(FamilyKind::Hump, &[a, 0.5, b, c, d]),
        diffusion: FamilySpec::new(FamilyKind::Affine, &[1.0, 1.0]),
        lambda: 0.5,
        k: 1.0,
        fixed_cost,
        x_max: None,
    }
}

/// Zero drift, `sigma^2 = 2`, `lambda = 1`, so `g'' = g` and the canonical solution is a
/// multiple of `sinh`.
pub fn zero_drift() -> ModelSpec {
    ModelSpec {
        drift: FamilySpec::constant(0.0),
        diffusion: FamilySpec::constant(std::f64::consts::SQRT_2),
        lambda: 1.0,
        k: 1.0,
        fixed_cost: 0.1,
        x_max: Some(20.0),
    }
}

pub fn p_shape() -> ModelSpec {
    saturating([-1.0, 2.0, 0.5], 1.0, 0.1)
}

pub fn r1() -> ModelSpec {
    saturating([-1.0, 4.0, 1.0], 1.0, 0.1)
}

pub fn r2() -> ModelSpec {
    saturating([-0.5, 2.0, 1.0], 0.8, 0.2)
}

pub fn r3() -> ModelSpec {
    saturating([-1.5, 4.0, 0.5], 1.0, 0.5)
}

pub fn r4() -> ModelSpec {
    saturating([-1.0, 2.0, 2.0], 1.0, 0.5)
}

/// R5 with `mu(x_lambda) k <= lambda (k x_lambda - K)`.
pub fn r5_low_drift() -> ModelSpec {
    saturating([-2.0, 4.0, 0.5], 1.0, 0.1)
}

pub fn g1() -> ModelSpec {
    saturating([-3.0, 4.0, 2.0], 1.0, 0.1)
}

pub fn g1_finite_slope() -> ModelSpec {
    hump(-1.0, 1.0, 0.5, 0.5, 0.1)
}

pub fn g2() -> ModelSpec {
    hump(-1.5, 1.0, 0.3, 1.0, 0.1)
}

pub fn g3() -> ModelSpec {
    hump(-1.0, 0.5, 0.3, 1.0, 0.1)
}

pub fn g4() -> ModelSpec {
    hump(-1.0, 1.0, 1.0, 1.0, 0.05)
}

/// R6 with `c* < c^inf`.
pub fn r6_below_cinf() -> ModelSpec {
    hump(-1.0, 0.5, 0.3, 1.0, 0.2)
}

pub fn h1() -> ModelSpec {
    hump(-1.0, 0.5, 1.0, 1.0, 0.1)
}

pub fn h2() -> ModelSpec {
    hump(-1.5, 1.0, 1.0, 1.5, 0.1)
}

pub fn h3() -> ModelSpec {
    hump(-1.5, 0.5, 0.5, 1.5, 0.05)
}

/// Concave tail with `c* > c^inf` outside H1–H3.
pub fn concave_tail_two_level() -> ModelSpec {
    hump(-1.5, 0.5, 0.5, 1.5, 0.02)
}

/// Concave tail where the pair equation has no solution.
pub fn concave_tail_no_pair() -> ModelSpec {
    hump(-1.0, 1.0, 2.0, 1.0, 0.1)
}

/// Fixed cost at which `c* = c^inf` in the family `hump(-1, 0.5, 0.5, 1, K)`.
pub const G5_EDGE_K: f64 = 0.132_504_887_379_775_64;

/// Fixed cost at which `c* = c^inf` in the concave-tail family `hump(-1.5, 0.5, 1, 1.5, K)`.
pub const H4_EDGE_K: f64 = 0.191_593_919_708_286_07;

pub fn g5_edge() -> ModelSpec {
    hump(-1.0, 0.5, 0.5, 1.0, G5_EDGE_K)
}

pub fn h4_edge() -> ModelSpec {
    hump(-1.5, 0.5, 1.0, 1.5, H4_EDGE_K)
}

/// G4 in the family of `g5_edge`, at a lower fixed cost.
pub fn g4_low_cost() -> ModelSpec {
    hump(-1.0, 0.5, 0.5, 1.0, 0.05)
}
