//! The critical scale `c*` and the barrier pair `(u_lower*, u_bar*)`.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisFunctions, Limit};
use crate::error::{Error, Result};
use crate::landmarks::{Landmarks, Shape};
use crate::roots;

/// Samples per level interval in the search for the largest admissible `c`.
const LEVEL_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CStarSource {
    SetC,
    PairEquations,
    Absent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CStarSolution {
    /// Zero when absent.
    pub c_star: f64,
    pub u_bar_star: f64,
    pub u_lower_star: f64,
    pub source: CStarSource,
    /// All solutions of `c* g'(u) = k`.
    pub u_set: Vec<f64>,
}

impl CStarSolution {
    pub fn absent() -> Self {
        Self {
            c_star: 0.0,
            u_bar_star: 0.0,
            u_lower_star: 0.0,
            source: CStarSource::Absent,
            u_set: Vec::new(),
        }
    }
}

/// `I(a1, a2, c) = k (a2 - a1) - c (g(a2) - g(a1))`.
pub fn integral_i(basis: &BasisFunctions, a1: f64, a2: f64, c: f64) -> f64 {
    let k = basis.model().k();
    k * (a2 - a1) - c * (basis.g(a2, 1.0)[0] - basis.g(a1, 1.0)[0])
}

/// `gamma(beta, x) = k (g(x; beta) / g'(x; beta) - x) + K`.
pub fn gamma(basis: &BasisFunctions, beta: f64, x: f64) -> Result<f64> {
    let g = basis.g(x, beta);
    if !(g[1] > 0.0) {
        return Err(Error::NonpositiveDerivative { x, beta, value: g[1] });
    }
    let m = basis.model();
    Ok(m.k() * (g[0] / g[1] - x) + m.fixed_cost())
}

/// Unchecked variant for use inside root finders.
#[inline]
pub fn gamma_raw(basis: &BasisFunctions, beta: f64, x: f64) -> f64 {
    let g = basis.g(x, beta);
    let m = basis.model();
    m.k() * (g[0] / g[1] - x) + m.fixed_cost()
}

/// Maximal intervals on which `g'` is monotone.
pub fn monotone_branches(basis: &BasisFunctions, lm: &Landmarks) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    match lm.shape {
        Shape::P => {
            if let Some(Limit::Finite(x)) = lm.x_star {
                if x > 0.0 {
                    cuts.push(x);
                }
            }
        }
        Shape::R => {
            if let Some(x1) = lm.x1_star {
                cuts.push(x1);
            }
            if let Some(Limit::Finite(x2)) = lm.x2_star {
                cuts.push(x2);
            }
        }
    }
    cuts.push(basis.x_max());
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn root_on_branch(basis: &BasisFunctions, (a, b): (f64, f64), level: f64) -> Option<f64> {
    let gp = |x: f64| basis.g(x, 1.0)[1] - level;
    let (fa, fb) = (gp(a), gp(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    roots::brent(gp, a, b, 1e-15 * (1.0 + b)).ok()
}

/// A candidate pair: lower end at the origin (`None`) or on a branch, upper
/// end on a later branch.
type PairKey = (Option<usize>, usize);

fn pair_residual(basis: &BasisFunctions, branches: &[(f64, f64)], key: PairKey, level: f64) -> Option<f64> {
    let m = basis.model();
    let upper = root_on_branch(basis, branches[key.1], level)?;
    let lower = match key.0 {
        None => 0.0,
        Some(i) => root_on_branch(basis, branches[i], level)?,
    };
    if !(lower < upper) {
        return None;
    }
    Some(integral_i(basis, lower, upper, m.k() / level) - m.fixed_cost())
}

fn level_samples(lo: f64, hi: f64) -> Vec<f64> {
    let n = LEVEL_SAMPLES;
    let geometric = lo > 0.0 && hi / lo > 10.0;
    let mut out = Vec::with_capacity(n + 2);
    let at = |t: f64| {
        if geometric {
            lo * (hi / lo).powf(t)
        } else {
            lo + (hi - lo) * t
        }
    };
    out.push(at(1e-9));
    for i in 1..n {
        out.push(at(i as f64 / n as f64));
    }
    out.push(at(1.0 - 1e-9));
    out
}

/// Largest `c` admitting the barrier-pair structure, with `u_bar*`, `u_lower*`.
pub fn solve_cstar(basis: &BasisFunctions, lm: &Landmarks) -> Result<CStarSolution> {
    let branches = monotone_branches(basis, lm);
    let gp = |x: f64| basis.g(x, 1.0)[1];
    let gp0 = gp(0.0);
    let mut levels: Vec<f64> = branches.iter().flat_map(|&(a, b)| [gp(a), gp(b)]).collect();
    levels.push(gp0);
    levels.retain(|v| v.is_finite() && *v > 0.0);
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());

    let mut best: Option<(f64, PairKey)> = None;
    'intervals: for w in levels.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let samples = level_samples(lo, hi);
        let covering: Vec<usize> = (0..branches.len())
            .filter(|&i| {
                let (a, b) = branches[i];
                let (ga, gb) = (gp(a), gp(b));
                ga.min(gb) <= lo && hi <= ga.max(gb)
            })
            .collect();
        let mut keys: Vec<PairKey> = Vec::new();
        for (jj, &j) in covering.iter().enumerate() {
            if lo >= gp0 {
                keys.push((None, j));
            }
            for &i in &covering[..jj] {
                keys.push((Some(i), j));
            }
        }
        if keys.is_empty() {
            continue;
        }
        let mut prev: Vec<Option<f64>> = vec![None; keys.len()];
        let mut prev_level = samples[0];
        for &level in &samples {
            let mut found: Vec<(f64, PairKey)> = Vec::new();
            for (idx, &key) in keys.iter().enumerate() {
                let r = pair_residual(basis, &branches, key, level);
                if let (Some(p), Some(cur)) = (prev[idx], r) {
                    if cur == 0.0 {
                        found.push((level, key));
                    } else if p.signum() != cur.signum() {
                        let f = |l: f64| pair_residual(basis, &branches, key, l).unwrap_or(f64::NAN);
                        if let Ok(l) = roots::brent(f, prev_level, level, 1e-15 * level) {
                            found.push((l, key));
                        }
                    }
                }
                prev[idx] = r;
            }
            if let Some(&first) = found.iter().min_by(|a, b| a.0.partial_cmp(&b.0).unwrap()) {
                best = Some(first);
                break 'intervals;
            }
            prev_level = level;
        }
    }

    let Some((level, _)) = best else {
        return Ok(CStarSolution::absent());
    };
    let m = basis.model();
    let c_star = m.k() / level;
    let mut u_set: Vec<f64> = branches
        .iter()
        .filter_map(|&br| root_on_branch(basis, br, level))
        .collect();
    u_set.sort_by(|a, b| a.partial_cmp(b).unwrap());
    u_set.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let tol = 1e-9 * m.fixed_cost().max(1.0);
    let hits = |lower: f64, upper: f64| lower < upper && (integral_i(basis, lower, upper, c_star) - m.fixed_cost()).abs() <= tol;
    let lowers: Vec<f64> = std::iter::once(0.0).chain(u_set.iter().copied()).collect();
    let u_bar_star = u_set
        .iter()
        .copied()
        .filter(|&u| lowers.iter().any(|&l| hits(l, u)))
        .fold(f64::NAN, f64::max);
    if !u_bar_star.is_finite() {
        return Err(Error::NoSolution(format!(
            "c* = {c_star} found but no pair in U satisfies I = K"
        )));
    }
    let u_lower_star = lowers
        .iter()
        .copied()
        .filter(|&l| hits(l, u_bar_star))
        .fold(f64::NAN, f64::max);
    let source = match (lm.shape, lm.x1_star) {
        (Shape::R, Some(x1)) if u_lower_star == 0.0 && u_bar_star < x1 => CStarSource::PairEquations,
        _ => CStarSource::SetC,
    };
    Ok(CStarSolution {
        c_star,
        u_bar_star,
        u_lower_star,
        source,
        u_set,
    })
}
