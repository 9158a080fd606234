//! The family `g(.; beta)` for `beta` between `h(z_lower)` and 1.
//!
//! For each `beta`, `u1` is the tangency point `gamma(beta, u1) = 0`, and `u2 < u3`
//! are the other two points where `g'(.; beta)` takes the value `g'(u1; beta)`.
//! The functionals `J1`, `J2`, `J13`, the ratios `v` and `G`, and the thresholds
//! `beta0`, `alpha0` decide which of G1–G5 (and H1–H4 for a concave tail) holds.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisFunctions, HBranches, Limit};
use crate::error::{Error, Result};
use crate::landmarks::{Landmarks, Shape};
use crate::roots;
use crate::stratify::{gamma_raw, CStarSolution};

/// Samples used when scanning `beta` for the first crossing of a level.
pub const BETA_SCAN: usize = 200;

/// `|G(1) - 1|` below which `c*` and `c^inf` are treated as equal.
pub const CSTAR_CINF_RTOL: f64 = 1e-8;

/// Relative inset used when a function is evaluated next to an endpoint of
/// `(alpha0, beta0)` where `u2`, `u3` degenerate.
const ENDPOINT_INSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GCase {
    G1,
    G2,
    G3,
    G4,
    G5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HCase {
    H1,
    H2,
    H3,
    H4,
}

impl std::fmt::Display for GCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::fmt::Display for HCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The three level points for one `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPoints {
    pub u1: f64,
    pub u2: f64,
    /// `Infinite` when `g'(.; beta)` stays below the level up to `x_max`.
    pub u3: Limit,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JValues {
    pub j1: f64,
    pub j2: f64,
    pub j13: f64,
    /// `u3` was replaced by `x_max`; `j2` and `j13` are then lower bounds.
    pub truncated: bool,
}

/// Everything needed by the solver, evaluated once.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaMachinery {
    pub h_z_lower: f64,
    pub z_lower: f64,
    /// `min(1, h_inf)`.
    pub beta_hi: f64,
    /// Absent when `h(z_lower) >= h_inf`.
    pub beta0: Option<f64>,
    pub alpha0: Option<f64>,
    pub g_at_h_z_lower: f64,
    /// `G(1) = c*/c^inf`.
    pub g_at_one: f64,
    pub j_at_alpha0: Option<JValues>,
    pub case_g: Option<GCase>,
    /// Only for a concave tail (R7).
    pub case_h: Option<HCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSample {
    pub beta: f64,
    pub u1: f64,
    pub u2: Option<f64>,
    pub u3: Option<Limit>,
    pub j: Option<JValues>,
    pub v: f64,
    pub g: f64,
}

/// Evaluator for the `beta`-dependent quantities of one instance.
#[derive(Debug, Clone, Copy)]
pub struct Curves<'a> {
    basis: &'a BasisFunctions,
    branches: &'a HBranches,
    u_bar_star: f64,
    c_star: f64,
    c_inf: f64,
    z_lower: f64,
    h_z_lower: f64,
    h_inf: Limit,
    concave_tail: bool,
}

impl<'a> Curves<'a> {
    /// Requires shape R, `u_bar* < z_lower` and a positive `c*`.
    pub fn new(
        basis: &'a BasisFunctions,
        branches: &'a HBranches,
        lm: &Landmarks,
        cs: &CStarSolution,
    ) -> Result<Self> {
        if lm.shape != Shape::R {
            return Err(Error::CaseMismatch("beta curves need the R shape".into()));
        }
        let (Some(z), Some(hz)) = (lm.z_lower, lm.h_z_lower) else {
            return Err(Error::CaseMismatch("z_lower does not exist".into()));
        };
        if !(cs.c_star > 0.0 && cs.u_bar_star < z) {
            return Err(Error::CaseMismatch(format!(
                "need c* > 0 and u_bar* < z_lower (c* = {}, u_bar* = {}, z_lower = {z})",
                cs.c_star, cs.u_bar_star
            )));
        }
        Ok(Self {
            basis,
            branches,
            u_bar_star: cs.u_bar_star,
            c_star: cs.c_star,
            c_inf: lm.c_inf,
            z_lower: z,
            h_z_lower: hz,
            h_inf: lm.h_inf,
            concave_tail: matches!(lm.x2_star, Some(Limit::Infinite)),
        })
    }

    pub fn basis(&self) -> &BasisFunctions {
        self.basis
    }

    pub fn h_z_lower(&self) -> f64 {
        self.h_z_lower
    }

    pub fn z_lower(&self) -> f64 {
        self.z_lower
    }

    fn k(&self) -> f64 {
        self.basis.model().k()
    }

    /// `gamma(beta, u1(beta)) = 0` on `(u_bar*, h_-^{-1}(beta))`.
    pub fn u1(&self, beta: f64) -> Result<f64> {
        if !(beta >= self.h_z_lower && beta <= 1.0) {
            return Err(Error::Range {
                y: beta,
                lo: self.h_z_lower,
                hi: 1.0,
            });
        }
        if beta == 1.0 {
            return Ok(self.u_bar_star);
        }
        if beta == self.h_z_lower {
            return Ok(self.z_lower);
        }
        let hi = self.branches.h_inv_minus(self.basis, beta)?;
        let f = |x: f64| gamma_raw(self.basis, beta, x);
        let lo = self.u_bar_star;
        if f(lo) <= 0.0 {
            return Ok(lo);
        }
        if f(hi) >= 0.0 {
            return Ok(hi);
        }
        roots::brent(f, lo, hi, 1e-15 * (1.0 + hi))
    }

    /// `g'(u1(beta); beta)`.
    pub fn level(&self, beta: f64) -> Result<f64> {
        Ok(self.basis.g(self.u1(beta)?, beta)[1])
    }

    /// `c_beta = k / g'(u1(beta); beta)`.
    pub fn c_of(&self, beta: f64) -> Result<f64> {
        Ok(self.k() / self.level(beta)?)
    }

    /// `u1`, `u2`, `u3` and the common level of `g'`.
    pub fn level_points(&self, beta: f64) -> Result<LevelPoints> {
        let u1 = self.u1(beta)?;
        let b = self.basis;
        let level = b.g(u1, beta)[1];
        let a = self.branches.h_inv_minus(b, beta)?;
        let m = self.branches.h_inv_plus(b, beta)?;
        let f = |x: f64| b.g(x, beta)[1] - level;
        let (fa, fm) = (f(a), f(m));
        let tiny = 1e-12 * level.abs();
        let u2 = if fa <= tiny {
            a
        } else if fm.abs() <= tiny {
            m
        } else if fm > 0.0 {
            return Err(Error::BracketFailure(format!(
                "g'(.; {beta}) stays above the level on (h_-^-1, h_+^-1)"
            )));
        } else {
            roots::brent(f, a, m, 1e-15 * (1.0 + m))?
        };
        let xm = b.x_max();
        let u3 = if fm.abs() <= tiny {
            Limit::Finite(m)
        } else if f(xm) < 0.0 {
            Limit::Infinite
        } else {
            Limit::Finite(roots::brent(f, m, xm, 1e-15 * (1.0 + xm))?)
        };
        Ok(LevelPoints { u1, u2, u3, level })
    }

    /// `J(beta, a, b) = k (b - a - (g(b; beta) - g(a; beta)) / g'(b; beta))`.
    pub fn j(&self, beta: f64, a: f64, b: f64) -> f64 {
        let gb = self.basis.g(b, beta);
        self.k() * (b - a - (gb[0] - self.basis.g(a, beta)[0]) / gb[1])
    }

    /// Same integral with the denominator fixed at `level`.
    fn j_at_level(&self, beta: f64, a: f64, b: f64, level: f64) -> f64 {
        let g = |x: f64| self.basis.g(x, beta)[0];
        self.k() * (b - a - (g(b) - g(a)) / level)
    }

    pub fn j_of(&self, lp: &LevelPoints, beta: f64) -> JValues {
        let (u3, truncated) = match lp.u3 {
            Limit::Finite(v) => (v, false),
            Limit::Infinite => (self.basis.x_max(), true),
        };
        let j1 = self.j_at_level(beta, lp.u1, lp.u2, lp.level);
        let j2 = self.j_at_level(beta, lp.u2, u3, lp.level);
        JValues {
            j1,
            j2,
            j13: j1 + j2,
            truncated,
        }
    }

    pub fn j_values(&self, beta: f64) -> Result<JValues> {
        let lp = self.level_points(beta)?;
        Ok(self.j_of(&lp, beta))
    }

    /// `v(beta) = g'(h_+^{-1}(beta); beta) / g'(u1(beta); beta)`, `+inf` outside
    /// `[h(z_lower), min(1, h_inf))`.
    pub fn v(&self, beta: f64) -> Result<f64> {
        if beta < self.h_z_lower || beta > 1.0 || beta >= self.h_inf.value() {
            return Ok(f64::INFINITY);
        }
        let m = match self.branches.h_inv_plus(self.basis, beta) {
            Ok(m) => m,
            Err(Error::Range { .. }) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        Ok(self.basis.g(m, beta)[1] / self.level(beta)?)
    }

    /// `G(beta) = lim g'(x; beta) / g'(u1(beta); beta)`, `+inf` when the limit diverges.
    pub fn g_ratio(&self, beta: f64) -> Result<f64> {
        match self.basis.gp_inf(beta) {
            Limit::Infinite => Ok(f64::INFINITY),
            Limit::Finite(l) => Ok(l / self.level(beta)?),
        }
    }

    pub fn beta_hi(&self) -> f64 {
        self.h_inf.value().min(1.0)
    }

    /// Largest `beta1` with `v <= 1` on `(h(z_lower), beta1]`.
    pub fn beta0(&self) -> Result<Option<f64>> {
        let lo = self.h_z_lower;
        let hi = self.beta_hi();
        if !(lo < hi) {
            return Ok(None);
        }
        let vm1 = |b: f64| self.v(b).map(|v| (v - 1.0).min(1e300));
        let mut prev = lo;
        for i in 1..=BETA_SCAN {
            let b = lo + (hi - lo) * i as f64 / BETA_SCAN as f64;
            let r = vm1(b)?;
            if r > 0.0 {
                // Sign-only bisection: v may be infinite beyond the plus branch.
                let f = |x: f64| vm1(x).unwrap_or(1e300);
                return Ok(Some(roots::bisect(f, prev, b, 1e-15)?));
            }
            prev = b;
        }
        Ok(Some(hi))
    }

    /// `alpha0` from `G`, given `beta0`.
    pub fn alpha0(&self, beta0: f64) -> Result<Option<f64>> {
        let lo = self.h_z_lower;
        if self.g_ratio(lo)? >= 1.0 {
            return Ok(Some(lo));
        }
        let g_top = self.g_ratio(beta0)?;
        if beta0 >= 1.0 && g_top <= 1.0 + CSTAR_CINF_RTOL {
            return Ok(None);
        }
        if g_top <= 1.0 {
            return Ok(None);
        }
        let f = |b: f64| self.g_ratio(b).map(|g| g - 1.0).unwrap_or(f64::NAN);
        Ok(Some(roots::brent(f, lo, beta0, 1e-15)?))
    }

    /// `J` values at `alpha0`; `u3` sits at the truncation point when
    /// `alpha0 > h(z_lower)`.
    pub fn j_at_alpha0(&self, alpha0: f64) -> Result<JValues> {
        let lp = self.level_points(alpha0)?;
        let mut jv = self.j_of(&lp, alpha0);
        if alpha0 == self.h_z_lower {
            jv.j1 = 0.0;
            jv.j13 = jv.j2;
        }
        Ok(jv)
    }

    /// `c* / c^inf - 1`, `+inf` when `c^inf = 0`.
    fn cstar_excess(&self) -> f64 {
        if self.c_inf > 0.0 {
            self.c_star / self.c_inf - 1.0
        } else {
            f64::INFINITY
        }
    }

    pub fn machinery(&self) -> Result<BetaMachinery> {
        let k_fixed = self.basis.model().fixed_cost();
        let g_hz = self.g_ratio(self.h_z_lower)?;
        let g_one = self.g_ratio(1.0)?;
        let beta0 = self.beta0()?;
        let mut alpha0 = None;
        let mut j_at_alpha0 = None;
        let mut case_g = None;
        if let Some(b0) = beta0 {
            alpha0 = self.alpha0(b0)?;
            if self.cstar_excess() <= CSTAR_CINF_RTOL {
                alpha0 = alpha0.filter(|_| g_hz >= 1.0);
            }
            case_g = Some(match alpha0 {
                _ if g_hz >= 1.0 => GCase::G1,
                None => GCase::G5,
                Some(a0) => {
                    let jv = self.j_at_alpha0(a0)?;
                    j_at_alpha0 = Some(jv);
                    if jv.j13 >= 0.0 {
                        GCase::G2
                    } else if jv.j2 > k_fixed {
                        GCase::G3
                    } else {
                        GCase::G4
                    }
                }
            });
            if j_at_alpha0.is_none() {
                if let Some(a0) = alpha0 {
                    j_at_alpha0 = Some(self.j_at_alpha0(a0)?);
                }
            }
        }
        let case_h = if self.concave_tail {
            let excess = self.cstar_excess();
            let h_inf = self.h_inf.value();
            if excess.abs() <= CSTAR_CINF_RTOL {
                Some(HCase::H4)
            } else if excess < 0.0 {
                None
            } else if self.h_z_lower >= h_inf {
                Some(HCase::H1)
            } else if h_inf < 1.0 && self.g_ratio(h_inf)? <= 1.0 {
                Some(HCase::H2)
            } else if case_g == Some(GCase::G4) {
                Some(HCase::H3)
            } else {
                None
            }
        } else {
            None
        };
        Ok(BetaMachinery {
            h_z_lower: self.h_z_lower,
            z_lower: self.z_lower,
            beta_hi: self.beta_hi(),
            beta0,
            alpha0,
            g_at_h_z_lower: g_hz,
            g_at_one: g_one,
            j_at_alpha0,
            case_g,
            case_h,
        })
    }

    /// Pointwise evaluation on `n` equally spaced `beta` in `[h(z_lower), 1]`.
    /// Level points and `J` are filled where they exist.
    pub fn sample(&self, n: usize) -> Result<Vec<BetaSample>> {
        let lo = self.h_z_lower;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let beta = if n == 1 { lo } else { lo + (1.0 - lo) * i as f64 / (n - 1) as f64 };
            out.push(self.sample_at(beta)?);
        }
        Ok(out)
    }

    pub fn sample_at(&self, beta: f64) -> Result<BetaSample> {
        let u1 = self.u1(beta)?;
        let lp = if beta < self.beta_hi() {
            self.level_points(beta).ok()
        } else {
            None
        };
        Ok(BetaSample {
            beta,
            u1,
            u2: lp.map(|l| l.u2),
            u3: lp.map(|l| l.u3),
            j: lp.map(|l| self.j_of(&l, beta)),
            v: self.v(beta)?,
            g: self.g_ratio(beta)?,
        })
    }

    /// Interior point of `(lo, hi)` next to `lo`.
    pub fn inset(lo: f64, hi: f64) -> f64 {
        lo + ENDPOINT_INSET * (hi - lo)
    }
}

/// CSV with columns `beta,u1,u2,u3,J1,J2,J13,v,G`; empty fields where undefined.
pub fn samples_to_csv(samples: &[BetaSample]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    let fin = |v: f64| if v.is_finite() { format!("{v:.17e}") } else { "inf".to_string() };
    let mut s = String::from("beta,u1,u2,u3,J1,J2,J13,v,G\n");
    for r in samples {
        let u3 = match r.u3 {
            Some(Limit::Finite(v)) => format!("{v:.17e}"),
            Some(Limit::Infinite) => "inf".into(),
            None => String::new(),
        };
        s.push_str(&format!(
            "{:.17e},{:.17e},{},{},{},{},{},{},{}\n",
            r.beta,
            r.u1,
            opt(r.u2),
            u3,
            opt(r.j.map(|j| j.j1)),
            opt(r.j.map(|j| j.j2)),
            opt(r.j.map(|j| j.j13)),
            fin(r.v),
            fin(r.g),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, build_h_branches, DEFAULT_TOL};
    use crate::fixtures;
    use crate::landmarks::find_landmarks;
    use crate::model::{validate, ModelSpec};
    use crate::stratify::solve_cstar;

    struct Setup {
        b: BasisFunctions,
        br: HBranches,
        lm: Landmarks,
        cs: CStarSolution,
    }

    fn setup(spec: &ModelSpec) -> Setup {
        let m = validate(spec).unwrap();
        let b = build_basis(&m, DEFAULT_TOL).unwrap();
        let br = build_h_branches(&b).unwrap();
        let lm = find_landmarks(&b, &br).unwrap();
        let cs = solve_cstar(&b, &lm).unwrap();
        Setup { b, br, lm, cs }
    }

    impl Setup {
        fn curves(&self) -> Curves<'_> {
            Curves::new(&self.b, &self.br, &self.lm, &self.cs).unwrap()
        }
    }

    /// `n` points strictly inside `(lo, hi)`.
    fn interior(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
    }

    #[test]
    fn u1_endpoints_and_decrease() {
        let s = setup(&fixtures::g2());
        let c = s.curves();
        assert_eq!(c.u1(1.0).unwrap(), s.cs.u_bar_star);
        assert_eq!(c.u1(c.h_z_lower()).unwrap(), s.lm.z_lower.unwrap());
        let us: Vec<f64> = interior(c.h_z_lower(), 1.0, 40).iter().map(|&b| c.u1(b).unwrap()).collect();
        assert!(us.windows(2).all(|w| w[1] < w[0]));
        for (&b, &u) in interior(c.h_z_lower(), 1.0, 40).iter().zip(&us) {
            assert!(gamma_raw(&s.b, b, u).abs() < 1e-10);
        }
    }

    #[test]
    fn level_points_are_ordered_and_level() {
        let s = setup(&fixtures::g2());
        let c = s.curves();
        let m = c.machinery().unwrap();
        let (a0, b0) = (m.alpha0.unwrap(), m.beta0.unwrap());
        for b in interior(a0, b0, 50) {
            let lp = c.level_points(b).unwrap();
            let u3 = lp.u3.finite().unwrap();
            let hm = s.br.h_inv_minus(&s.b, b).unwrap();
            let hp = s.br.h_inv_plus(&s.b, b).unwrap();
            let z = c.z_lower();
            assert!(s.cs.u_bar_star < lp.u1 && lp.u1 < hm && hm < z && z < lp.u2 && lp.u2 < hp && hp < u3);
            for u in [lp.u2, u3] {
                let gp = s.b.g(u, b)[1];
                assert!((gp - lp.level).abs() < 1e-8 * lp.level, "beta {b}: {gp} vs {}", lp.level);
            }
        }
    }

    #[test]
    fn j_split_matches_closed_form() {
        let s = setup(&fixtures::g2());
        let c = s.curves();
        let m = c.machinery().unwrap();
        for b in interior(m.alpha0.unwrap(), m.beta0.unwrap(), 20) {
            let lp = c.level_points(b).unwrap();
            let jv = c.j_of(&lp, b);
            let u3 = lp.u3.finite().unwrap();
            assert!((jv.j13 - (jv.j1 + jv.j2)).abs() < 1e-12);
            let closed = c.j(b, lp.u1, u3);
            assert!((jv.j13 - closed).abs() < 1e-8 * (1.0 + closed.abs()), "{} vs {closed}", jv.j13);
            assert_eq!(c.j(b, lp.u2, lp.u2), 0.0);
        }
    }

    #[test]
    fn j1_and_j13_decrease() {
        let s = setup(&fixtures::g3());
        let c = s.curves();
        let m = c.machinery().unwrap();
        let js: Vec<JValues> = interior(m.alpha0.unwrap(), m.beta0.unwrap(), 30)
            .iter()
            .map(|&b| c.j_values(b).unwrap())
            .collect();
        let untruncated: Vec<&JValues> = js.iter().filter(|j| !j.truncated).collect();
        assert!(untruncated.len() > 10);
        assert!(js.windows(2).all(|w| w[1].j1 < w[0].j1));
        assert!(untruncated.windows(2).all(|w| w[1].j13 < w[0].j13));
    }

    #[test]
    fn v_below_one_at_h_z_lower_and_g_above_v() {
        for spec in [fixtures::g1(), fixtures::g2(), fixtures::g3(), fixtures::g4()] {
            let s = setup(&spec);
            let c = s.curves();
            let hz = c.h_z_lower();
            assert!(c.v(hz).unwrap() < 1.0);
            let b0 = c.beta0().unwrap().unwrap();
            for b in interior(hz, b0, 25) {
                assert!(c.g_ratio(b).unwrap() > c.v(b).unwrap());
            }
        }
    }

    #[test]
    fn level_derivative_identity() {
        let s = setup(&fixtures::g3());
        let c = s.curves();
        for b in interior(c.h_z_lower(), 1.0, 12) {
            let eps = 1e-5;
            let fd = (c.level(b + eps).unwrap() - c.level(b - eps).unwrap()) / (2.0 * eps);
            let u = c.u1(b).unwrap();
            let g = s.b.g(u, b);
            let g1 = s.b.jet(u).g1[0];
            let exact = -g1 * g[1] / g[0];
            assert!((fd - exact).abs() < 1e-4 * exact.abs(), "beta {b}: {fd} vs {exact}");
        }
    }

    #[test]
    fn c_at_one_is_c_star() {
        let s = setup(&fixtures::g1());
        let c = s.curves();
        assert!((c.c_of(1.0).unwrap() - s.cs.c_star).abs() < 1e-12 * s.cs.c_star);
    }

    #[test]
    fn g_increases_for_concave_tail() {
        let s = setup(&fixtures::h3());
        let c = s.curves();
        let gs: Vec<f64> = interior(c.h_z_lower(), 1.0, 30).iter().map(|&b| c.g_ratio(b).unwrap()).collect();
        assert!(gs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn case_labels_of_fixtures() {
        let cases = [
            (fixtures::g1(), Some(GCase::G1), None),
            (fixtures::g1_finite_slope(), Some(GCase::G1), None),
            (fixtures::g2(), Some(GCase::G2), None),
            (fixtures::g3(), Some(GCase::G3), None),
            (fixtures::g4(), Some(GCase::G4), None),
            (fixtures::g5_edge(), Some(GCase::G5), None),
            (fixtures::h1(), None, Some(HCase::H1)),
            (fixtures::h2(), Some(GCase::G5), Some(HCase::H2)),
            (fixtures::h3(), Some(GCase::G4), Some(HCase::H3)),
            (fixtures::h4_edge(), None, Some(HCase::H4)),
            (fixtures::concave_tail_two_level(), Some(GCase::G3), None),
        ];
        for (spec, g, h) in cases {
            let s = setup(&spec);
            let m = s.curves().machinery().unwrap();
            assert_eq!((m.case_g, m.case_h), (g, h), "{:?}", spec.drift);
        }
    }

    #[test]
    fn alpha0_solves_g_equal_one() {
        let s = setup(&fixtures::g4());
        let c = s.curves();
        let m = c.machinery().unwrap();
        let a0 = m.alpha0.unwrap();
        assert!(a0 > c.h_z_lower() && a0 < m.beta0.unwrap());
        assert!((c.g_ratio(a0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = setup(&fixtures::g2());
        let rows = s.curves().sample(11).unwrap();
        let csv = samples_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "beta,u1,u2,u3,J1,J2,J13,v,G");
        assert_eq!(lines.len(), 12);
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
    }

    #[test]
    fn rejects_non_r_shape() {
        let s = setup(&fixtures::zero_drift());
        assert!(matches!(
            Curves::new(&s.b, &s.br, &s.lm, &s.cs),
            Err(Error::CaseMismatch(_))
        ));
    }
}
