//! Structural points of the canonical solution and the P / R1–R7 labels.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisFunctions, HBranches, Limit};
use crate::error::{Error, Result};
use crate::roots;
use crate::stratify::CStarSolution;

/// Relative size below which a curvature sample is treated as zero.
const CURVATURE_NOISE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// Concave, then convex.
    P,
    /// Convex, concave, and possibly convex again.
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    P,
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Landmarks {
    pub x_lambda: f64,
    pub z0: f64,
    pub shape: Shape,
    /// Inflection point in the P shape (`0` when convex throughout).
    pub x_star: Option<Limit>,
    pub x1_star: Option<f64>,
    pub x2_star: Option<Limit>,
    /// Root of `mu(z) k - lambda (k z - K)` below `x_lambda`.
    pub z_lower: Option<f64>,
    pub h_z_lower: Option<f64>,
    pub h_inf: Limit,
    pub g_inf_prime: Limit,
    pub c_inf: f64,
    /// `mu(x_lambda) k - lambda (k x_lambda - K)`.
    pub q_at_x_lambda: f64,
    /// `q_at_x_lambda > 0`.
    pub cond_23: bool,
}

/// `mu(z) k - lambda (k z - K)`.
pub fn payout_drift(basis: &BasisFunctions, z: f64) -> f64 {
    basis.model().payout_generator(z)
}

fn curvature_scale(basis: &BasisFunctions, x: f64) -> (f64, f64) {
    let j = basis.jet(x);
    let m = basis.model();
    let gc = j.gc;
    let scale = (m.lambda() * gc[0]).abs() + (m.mu(x) * gc[1]).abs();
    (gc[2], 2.0 * scale / m.sigma2(x))
}

/// Sign changes of `g''` on the grid, refined by bisection.
pub fn inflection_points(basis: &BasisFunctions) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = basis.grid();
    let mut signs: Vec<f64> = Vec::with_capacity(grid.len());
    for &x in grid {
        let (v, scale) = curvature_scale(basis, x);
        signs.push(if v.abs() <= CURVATURE_NOISE * scale { 0.0 } else { v });
    }
    let brackets = roots::sign_change_brackets(&signs);
    let mut points = Vec::with_capacity(brackets.len());
    for (i, j) in brackets {
        let f = |x: f64| basis.jet(x).gc[2];
        points.push(roots::bisect(f, grid[i], grid[j], 1e-13)?);
    }
    let segment_signs: Vec<f64> = {
        let mut out = Vec::new();
        for &v in &signs {
            if v != 0.0 && out.last().is_none_or(|&s: &f64| s != v.signum()) {
                out.push(v.signum());
            }
        }
        out
    };
    Ok((points, segment_signs))
}

pub fn find_landmarks(basis: &BasisFunctions, branches: &HBranches) -> Result<Landmarks> {
    let m = basis.model();
    let (points, segs) = inflection_points(basis)?;
    if points.len() > 2 {
        return Err(Error::ClassificationAmbiguous {
            sign_changes: points.len(),
        });
    }
    let first_sign = segs.first().copied().unwrap_or(1.0);
    let (shape, x_star, x1_star, x2_star) = match (first_sign > 0.0, points.as_slice()) {
        (true, []) => (Shape::P, Some(Limit::Finite(0.0)), None, None),
        (false, []) => (Shape::P, Some(Limit::Infinite), None, None),
        (false, [x]) => (Shape::P, Some(Limit::Finite(*x)), None, None),
        (true, [x1]) => (Shape::R, None, Some(*x1), Some(Limit::Infinite)),
        (true, [x1, x2]) => (Shape::R, None, Some(*x1), Some(Limit::Finite(*x2))),
        _ => {
            return Err(Error::ClassificationAmbiguous {
                sign_changes: points.len(),
            })
        }
    };

    let xl = m.x_lambda();
    let q = |z: f64| payout_drift(basis, z);
    let lo = x1_star.unwrap_or(0.0).min(xl);
    let z_lower = if xl > lo && q(lo) < 0.0 && q(xl) > 0.0 {
        Some(roots::brent(q, lo, xl, 1e-14)?)
    } else {
        None
    };
    let h_z_lower = z_lower.map(|z| basis.h_unchecked(z));
    let s = basis.s();
    let g_inf_prime = basis.limit_of(|x| s * basis.jet(x).gc[1]);
    let c_inf = match g_inf_prime {
        Limit::Finite(v) => m.k() / v,
        Limit::Infinite => 0.0,
    };
    let q_xl = q(xl);
    Ok(Landmarks {
        x_lambda: xl,
        z0: branches.z0,
        shape,
        x_star,
        x1_star,
        x2_star,
        z_lower,
        h_z_lower,
        h_inf: branches.h_inf,
        g_inf_prime,
        c_inf,
        q_at_x_lambda: q_xl,
        cond_23: q_xl > 0.0,
    })
}

/// Margins `c* g'(x) - k` at the points used to split the R labels.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct RMargins {
    pub at_zero: f64,
    pub at_x1: Option<f64>,
    pub at_x2: Option<f64>,
}

pub fn r_margins(basis: &BasisFunctions, lm: &Landmarks, cs: &CStarSolution) -> RMargins {
    let k = basis.model().k();
    let slope = |x: f64| cs.c_star * basis.g(x, 1.0)[1] - k;
    RMargins {
        at_zero: slope(0.0),
        at_x1: lm.x1_star.map(slope),
        at_x2: lm.x2_star.and_then(Limit::finite).map(slope),
    }
}

/// Applies the defining inequalities of P and R1–R7.
pub fn classify_r(basis: &BasisFunctions, lm: &Landmarks, cs: &CStarSolution) -> Result<CaseLabel> {
    if lm.shape == Shape::P {
        return Ok(CaseLabel::P);
    }
    let x1 = lm.x1_star.expect("R shape has a first inflection");
    let x2 = match lm.x2_star {
        Some(Limit::Finite(v)) => v,
        _ => return Ok(CaseLabel::R7),
    };
    let mg = r_margins(basis, lm, cs);
    let (lo, hi) = (cs.u_lower_star, cs.u_bar_star);
    if cs.c_star > 0.0 {
        if lo > 0.0 && x1 < lo && lo < x2 && x2 < hi {
            return Ok(if mg.at_zero >= 0.0 { CaseLabel::R1 } else { CaseLabel::R2 });
        }
        if lo == 0.0 && x1 < x2 && x2 < hi {
            return Ok(if mg.at_x1.unwrap_or(-1.0) >= 0.0 { CaseLabel::R3 } else { CaseLabel::R4 });
        }
        if lo == 0.0 && hi > 0.0 && hi < x1 {
            return Ok(if mg.at_x2.unwrap_or(-1.0) >= 0.0 { CaseLabel::R5 } else { CaseLabel::R6 });
        }
    }
    Err(Error::UnsupportedCase(format!(
        "R8: c* = {}, u_lower* = {lo}, u_bar* = {hi}, x1* = {x1}, x2* = {x2}",
        cs.c_star
    )))
}
