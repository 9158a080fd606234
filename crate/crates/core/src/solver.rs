//! Optimal policy and value function for each regime.

use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, build_h_branches, BasisFunctions, HBranches, DEFAULT_TOL};
use crate::curves::{BetaMachinery, Curves, GCase, HCase, BETA_SCAN, CSTAR_CINF_RTOL};
use crate::error::{Error, Result};
use crate::landmarks::{classify_r, find_landmarks, CaseLabel, Landmarks};
use crate::model::{validate, ModelSpec};
use crate::roots;
use crate::stratify::{solve_cstar, CStarSolution};

/// Dividend strategies.
///
/// `TwoLevelBarrier`: below `u_bar1` nothing is paid; on `[u_bar1, u2c]` the surplus
/// is paid down to `u_lower1`; on `(u2c, u_bar2)` nothing; from `u_bar2` on, down to
/// `u_lower2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    SimpleBarrier {
        u_bar: f64,
        u_lower: f64,
    },
    TwoLevelBarrier {
        u_bar1: f64,
        u_lower1: f64,
        u2c: f64,
        u_bar2: f64,
        u_lower2: f64,
    },
    /// The value is a limit of barrier strategies with the barrier sent to infinity.
    NoOptimal { limiting: bool },
}

impl Policy {
    /// Surplus right after the intervention at `x`, or `None` if nothing is paid.
    pub fn target(&self, x: f64) -> Option<f64> {
        match *self {
            Policy::SimpleBarrier { u_bar, u_lower } => (x >= u_bar).then_some(u_lower),
            Policy::TwoLevelBarrier {
                u_bar1,
                u_lower1,
                u2c,
                u_bar2,
                u_lower2,
            } => {
                if x >= u_bar2 {
                    Some(u_lower2)
                } else if x >= u_bar1 && x <= u2c {
                    Some(u_lower1)
                } else {
                    None
                }
            }
            Policy::NoOptimal { .. } => None,
        }
    }

    pub fn check(&self) -> Result<()> {
        let ok = match *self {
            Policy::SimpleBarrier { u_bar, u_lower } => 0.0 <= u_lower && u_lower < u_bar,
            Policy::TwoLevelBarrier {
                u_bar1,
                u_lower1,
                u2c,
                u_bar2,
                u_lower2,
            } => 0.0 <= u_lower1 && u_lower1 < u_bar1 && u_bar1 < u2c && u2c < u_bar2 && 0.0 <= u_lower2 && u_lower2 < u_bar2,
            Policy::NoOptimal { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::VerificationFailure(format!("inconsistent policy levels {self:?}")))
        }
    }
}

/// One piece of a value function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// `c g(x; beta)`.
    ScaledBasis { c: f64, beta: f64 },
    /// `k x - K`.
    Affine,
    /// `c g(u; beta) + k (x - u) - K`.
    AffineFrom { c: f64, beta: f64, u: f64 },
}

/// Piecewise value function; segment `i` covers `[knots[i], knots[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub knots: Vec<f64>,
    pub segments: Vec<Segment>,
    pub k: f64,
    #[serde(rename = "K")]
    pub fixed_cost: f64,
}

impl ValueFunction {
    fn new(basis: &BasisFunctions, pieces: Vec<(f64, Segment)>) -> Self {
        let m = basis.model();
        let (knots, segments) = pieces.into_iter().unzip();
        Self {
            knots,
            segments,
            k: m.k(),
            fixed_cost: m.fixed_cost(),
        }
    }

    pub fn segment_at(&self, x: f64) -> usize {
        self.knots.partition_point(|&kn| kn <= x).saturating_sub(1)
    }

    fn eval_segment(&self, basis: &BasisFunctions, seg: Segment, x: f64) -> [f64; 3] {
        match seg {
            Segment::ScaledBasis { c, beta } => {
                let g = basis.g(x, beta);
                [c * g[0], c * g[1], c * g[2]]
            }
            Segment::Affine => [self.k * x - self.fixed_cost, self.k, 0.0],
            Segment::AffineFrom { c, beta, u } => {
                [c * basis.g(u, beta)[0] + self.k * (x - u) - self.fixed_cost, self.k, 0.0]
            }
        }
    }

    /// `(V, V', V'')`, with the right-hand piece at a knot.
    pub fn eval(&self, basis: &BasisFunctions, x: f64) -> [f64; 3] {
        let i = self.segment_at(x);
        self.eval_segment(basis, self.segments[i], x)
    }

    /// Left and right values of `(V, V')` at interior knot `i`.
    pub fn knot_jumps(&self, basis: &BasisFunctions, i: usize) -> (f64, f64) {
        let x = self.knots[i];
        let l = self.eval_segment(basis, self.segments[i - 1], x);
        let r = self.eval_segment(basis, self.segments[i], x);
        (r[0] - l[0], r[1] - l[1])
    }

    /// Largest value and slope jump over all interior knots.
    pub fn max_jumps(&self, basis: &BasisFunctions) -> (f64, f64) {
        (1..self.knots.len()).fold((0.0f64, 0.0f64), |acc, i| {
            let (dv, dp) = self.knot_jumps(basis, i);
            (acc.0.max(dv.abs()), acc.1.max(dp.abs()))
        })
    }
}

/// Which form the solution takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// One barrier, paying down to `u_lower*`.
    Barrier,
    /// Two barriers; the upper payment ruins the company.
    TwoLevelToRuin,
    /// Two barriers; the upper payment leaves `u2`.
    TwoLevelPartial,
    /// Barrier below `u1`, no optimal strategy above it.
    BarrierThenLimit,
    /// `c* g` everywhere, no optimal strategy.
    CriticalLimit,
    /// `c^inf g` everywhere, no optimal strategy.
    TailLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "x", rename_all = "snake_case")]
pub enum OptimalRegion {
    Everywhere,
    /// The policy is optimal for initial surplus up to this point.
    UpTo(f64),
    Nowhere,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scalars {
    pub c_star: f64,
    pub c_inf: f64,
    pub u_bar_star: f64,
    pub u_lower_star: f64,
    /// `beta` of the upper piece when there is one.
    pub beta: Option<f64>,
    pub c_beta: Option<f64>,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub u3: Option<f64>,
    pub j1: Option<f64>,
    pub j2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub case_r: CaseLabel,
    pub case_g: Option<GCase>,
    pub case_h: Option<HCase>,
    pub cond_23: bool,
    pub regime: Regime,
    pub policy: Policy,
    pub optimal: OptimalRegion,
    pub value: ValueFunction,
    pub scalars: Scalars,
}

impl Solution {
    /// A policy whose value approaches `V` as `u_bar` grows, for regimes
    /// without an optimal strategy: below `u1` the optimal barrier rule, and
    /// everything paid once the surplus reaches `u_bar`. Other regimes return
    /// their optimal policy.
    pub fn near_optimal_policy(&self, u_bar: f64) -> Result<Policy> {
        let s = &self.scalars;
        let policy = match self.regime {
            Regime::BarrierThenLimit => {
                let u1 = s.u1.ok_or_else(|| Error::CaseMismatch("u1 missing".into()))?;
                if u1 > s.u_bar_star {
                    Policy::TwoLevelBarrier {
                        u_bar1: s.u_bar_star,
                        u_lower1: 0.0,
                        u2c: u1,
                        u_bar2: u_bar,
                        u_lower2: 0.0,
                    }
                } else {
                    Policy::SimpleBarrier { u_bar, u_lower: 0.0 }
                }
            }
            Regime::CriticalLimit | Regime::TailLimit => Policy::SimpleBarrier { u_bar, u_lower: 0.0 },
            _ => self.policy,
        };
        policy.check()?;
        Ok(policy)
    }
}

/// Everything computed from a model before dispatching.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub basis: BasisFunctions,
    pub branches: HBranches,
    pub landmarks: Landmarks,
    pub cstar: CStarSolution,
    pub label: CaseLabel,
}

impl Prepared {
    pub fn curves(&self) -> Result<Curves<'_>> {
        Curves::new(&self.basis, &self.branches, &self.landmarks, &self.cstar)
    }

    /// `c* / c^inf - 1`; `+inf` when `c^inf = 0`.
    pub fn cstar_excess(&self) -> f64 {
        let ci = self.landmarks.c_inf;
        if ci > 0.0 {
            self.cstar.c_star / ci - 1.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn prepare(spec: &ModelSpec) -> Result<Prepared> {
    prepare_with_tol(spec, DEFAULT_TOL)
}

pub fn prepare_with_tol(spec: &ModelSpec, tol: f64) -> Result<Prepared> {
    let model = validate(spec)?;
    let basis = build_basis(&model, tol)?;
    let branches = build_h_branches(&basis)?;
    let landmarks = find_landmarks(&basis, &branches)?;
    let cstar = solve_cstar(&basis, &landmarks)?;
    let label = classify_r(&basis, &landmarks, &cstar)?;
    Ok(Prepared {
        basis,
        branches,
        landmarks,
        cstar,
        label,
    })
}

/// Which of the two-level alternatives holds at `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subcase {
    /// `-J1 = J2 <= K`.
    A,
    /// `-J1 > J2 = K`.
    B,
}

/// First `beta > lo` with `J2(beta) = K`.
fn first_j2_crossing(curves: &Curves<'_>, lo: f64, hi: f64) -> Result<f64> {
    let k_fixed = curves.basis().model().fixed_cost();
    let f = |b: f64| curves.j_values(b).map(|j| j.j2 - k_fixed).unwrap_or(f64::NAN);
    let a = Curves::inset(lo, hi);
    let z = Curves::inset(hi, lo);
    roots::first_root_by_scan(f, a, z, BETA_SCAN, 1e-15)
        .ok_or_else(|| Error::NoSolution(format!("J2 = K has no root on ({lo}, {hi})")))
}

/// `beta~` and the alternative that applies, for G1, G2 and G3.
pub fn find_tilde_beta(curves: &Curves<'_>, mach: &BetaMachinery) -> Result<(f64, Subcase)> {
    let (Some(a0), Some(b0)) = (mach.alpha0, mach.beta0) else {
        return Err(Error::CaseMismatch("alpha0 and beta0 are required".into()));
    };
    let k_fixed = curves.basis().model().fixed_cost();
    let (beta, sub) = match mach.case_g {
        Some(GCase::G1) | Some(GCase::G2) => {
            let f = |b: f64| curves.j_values(b).map(|j| j.j13).unwrap_or(f64::NAN);
            let lo = Curves::inset(a0, b0);
            let hi = Curves::inset(b0, a0);
            let bh = if f(lo) <= 0.0 { lo } else { roots::brent(f, lo, hi, 1e-15)? };
            let j = curves.j_values(bh)?;
            if j.j2 <= k_fixed {
                (bh, Subcase::A)
            } else {
                (first_j2_crossing(curves, bh, b0)?, Subcase::B)
            }
        }
        Some(GCase::G3) => (first_j2_crossing(curves, a0, b0)?, Subcase::B),
        other => {
            return Err(Error::CaseMismatch(format!("two-level construction needs G1-G3, got {other:?}")));
        }
    };
    if curves.j_values(beta)?.truncated {
        return Err(Error::TruncationHit { beta });
    }
    Ok((beta, sub))
}

/// `beta^` with `G(beta^) = 1` in `(h(z_lower), 1)`.
pub fn find_hat_beta(curves: &Curves<'_>) -> Result<f64> {
    let lo = curves.h_z_lower();
    let f = |b: f64| curves.g_ratio(b).map(|g| g - 1.0).unwrap_or(f64::NAN);
    if !(f(lo) < 0.0 && f(1.0) > 0.0) {
        return Err(Error::CaseMismatch(format!(
            "G - 1 does not change sign on [h(z_lower), 1]: {} .. {}",
            f(lo),
            f(1.0)
        )));
    }
    let b = roots::brent(f, lo, 1.0, 1e-15)?;
    if !(curves.u1(b)? < curves.z_lower()) {
        return Err(Error::VerificationFailure("u1(beta^) >= z_lower".into()));
    }
    Ok(b)
}

struct Builder<'p> {
    p: &'p Prepared,
    scalars: Scalars,
    case_g: Option<GCase>,
    case_h: Option<HCase>,
}

impl Builder<'_> {
    fn finish(self, regime: Regime, policy: Policy, optimal: OptimalRegion, pieces: Vec<(f64, Segment)>) -> Solution {
        Solution {
            case_r: self.p.label,
            case_g: self.case_g,
            case_h: self.case_h,
            cond_23: self.p.landmarks.cond_23,
            regime,
            policy,
            optimal,
            value: ValueFunction::new(&self.p.basis, pieces),
            scalars: self.scalars,
        }
    }

    fn barrier(self) -> Solution {
        let cs = &self.p.cstar;
        let (ub, ul) = (cs.u_bar_star, cs.u_lower_star);
        let pieces = vec![
            (0.0, Segment::ScaledBasis { c: cs.c_star, beta: 1.0 }),
            (ub, Segment::AffineFrom { c: cs.c_star, beta: 1.0, u: ul }),
        ];
        self.finish(
            Regime::Barrier,
            Policy::SimpleBarrier { u_bar: ub, u_lower: ul },
            OptimalRegion::Everywhere,
            pieces,
        )
    }

    fn scaled_limit(self, regime: Regime, c: f64) -> Solution {
        self.finish(
            regime,
            Policy::NoOptimal { limiting: true },
            OptimalRegion::Nowhere,
            vec![(0.0, Segment::ScaledBasis { c, beta: 1.0 })],
        )
    }

    fn barrier_then_limit(mut self, curves: &Curves<'_>, beta: f64) -> Result<Solution> {
        let cs = &self.p.cstar;
        let u1 = curves.u1(beta)?;
        let c_beta = curves.c_of(beta)?;
        self.scalars.beta = Some(beta);
        self.scalars.c_beta = Some(c_beta);
        self.scalars.u1 = Some(u1);
        let mut pieces = vec![(0.0, Segment::ScaledBasis { c: cs.c_star, beta: 1.0 })];
        if u1 > cs.u_bar_star {
            pieces.push((cs.u_bar_star, Segment::Affine));
        }
        pieces.push((u1, Segment::ScaledBasis { c: c_beta, beta }));
        let policy = Policy::SimpleBarrier {
            u_bar: cs.u_bar_star,
            u_lower: 0.0,
        };
        Ok(self.finish(Regime::BarrierThenLimit, policy, OptimalRegion::UpTo(u1), pieces))
    }

    fn two_level(mut self, curves: &Curves<'_>, beta: f64, sub: Subcase) -> Result<Solution> {
        let cs = &self.p.cstar;
        let lp = curves.level_points(beta)?;
        let u3 = lp.u3.finite().ok_or(Error::TruncationHit { beta })?;
        let jv = curves.j_of(&lp, beta);
        let c_beta = self.p.basis.model().k() / lp.level;
        self.scalars.beta = Some(beta);
        self.scalars.c_beta = Some(c_beta);
        self.scalars.u1 = Some(lp.u1);
        self.scalars.u2 = Some(lp.u2);
        self.scalars.u3 = Some(u3);
        self.scalars.j1 = Some(jv.j1);
        self.scalars.j2 = Some(jv.j2);
        let (regime, tail, u_lower2) = match sub {
            Subcase::A => (Regime::TwoLevelToRuin, Segment::Affine, 0.0),
            Subcase::B => (
                Regime::TwoLevelPartial,
                Segment::AffineFrom {
                    c: c_beta,
                    beta,
                    u: lp.u2,
                },
                lp.u2,
            ),
        };
        let pieces = vec![
            (0.0, Segment::ScaledBasis { c: cs.c_star, beta: 1.0 }),
            (cs.u_bar_star, Segment::Affine),
            (lp.u1, Segment::ScaledBasis { c: c_beta, beta }),
            (u3, tail),
        ];
        let policy = Policy::TwoLevelBarrier {
            u_bar1: cs.u_bar_star,
            u_lower1: 0.0,
            u2c: lp.u1,
            u_bar2: u3,
            u_lower2,
        };
        policy.check()?;
        Ok(self.finish(regime, policy, OptimalRegion::Everywhere, pieces))
    }
}

fn base_scalars(p: &Prepared) -> Scalars {
    Scalars {
        c_star: p.cstar.c_star,
        c_inf: p.landmarks.c_inf,
        u_bar_star: p.cstar.u_bar_star,
        u_lower_star: p.cstar.u_lower_star,
        ..Scalars::default()
    }
}

/// Two-level form assembled at an arbitrary `beta`, without imposing the
/// equations that fix it. Used as a negative control.
pub fn two_level_at(p: &Prepared, beta: f64, sub: Subcase) -> Result<Solution> {
    let curves = p.curves()?;
    let mach = curves.machinery()?;
    let b = Builder {
        p,
        scalars: base_scalars(p),
        case_g: mach.case_g,
        case_h: mach.case_h,
    };
    b.two_level(&curves, beta, sub)
}

/// Dispatches on the labels and assembles the solution.
pub fn solve(p: &Prepared) -> Result<Solution> {
    let cs = &p.cstar;
    let lm = &p.landmarks;
    let mut b = Builder {
        p,
        scalars: base_scalars(p),
        case_g: None,
        case_h: None,
    };
    let excess = p.cstar_excess();
    let below_tail = cs.c_star <= 0.0 || excess < -CSTAR_CINF_RTOL;
    match p.label {
        CaseLabel::P | CaseLabel::R1 | CaseLabel::R2 | CaseLabel::R3 | CaseLabel::R4 => {
            if cs.c_star <= 0.0 {
                return Ok(b.scaled_limit(Regime::TailLimit, lm.c_inf));
            }
            Ok(b.barrier())
        }
        CaseLabel::R5 | CaseLabel::R6 => {
            if !lm.cond_23 {
                return Ok(b.barrier());
            }
            let curves = p.curves()?;
            let mach = curves.machinery()?;
            b.case_g = mach.case_g;
            match mach.case_g {
                None => Err(Error::UnsupportedCase("h(z_lower) >= h_inf with a convex tail".into())),
                Some(GCase::G1 | GCase::G2 | GCase::G3) => {
                    let (beta, sub) = find_tilde_beta(&curves, &mach)?;
                    b.two_level(&curves, beta, sub)
                }
                Some(GCase::G4) => b.barrier_then_limit(&curves, mach.alpha0.expect("G4 has alpha0")),
                Some(GCase::G5) if below_tail => Ok(b.scaled_limit(Regime::TailLimit, lm.c_inf)),
                Some(GCase::G5) => Ok(b.scaled_limit(Regime::CriticalLimit, cs.c_star)),
            }
        }
        CaseLabel::R7 => {
            if below_tail {
                return Ok(b.scaled_limit(Regime::TailLimit, lm.c_inf));
            }
            if !lm.cond_23 {
                return Ok(b.barrier());
            }
            let curves = p.curves()?;
            let mach = curves.machinery()?;
            b.case_g = mach.case_g;
            b.case_h = mach.case_h;
            match (mach.case_h, mach.case_g) {
                (Some(HCase::H4), _) => Ok(b.scaled_limit(Regime::CriticalLimit, cs.c_star)),
                (Some(_), _) => {
                    let beta = find_hat_beta(&curves)?;
                    b.barrier_then_limit(&curves, beta)
                }
                (None, Some(GCase::G1 | GCase::G2 | GCase::G3)) => {
                    let (beta, sub) = find_tilde_beta(&curves, &mach)?;
                    b.two_level(&curves, beta, sub)
                }
                (None, g) => Err(Error::UnsupportedCase(format!("concave tail with G case {g:?} outside H1-H4"))),
            }
        }
    }
}

/// `prepare` followed by `solve`.
pub fn solve_spec(spec: &ModelSpec) -> Result<(Prepared, Solution)> {
    let p = prepare(spec)?;
    let s = solve(&p)?;
    Ok((p, s))
}
