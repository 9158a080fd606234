//! Monte Carlo evaluation of dividend policies and a grid dynamic-programming
//! oracle for the impulse control problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::par;
use crate::solver::Policy;

/// Paths per accumulation chunk. Fixed so that the reduction order does not
/// depend on the number of threads.
const CHUNK: usize = 2048;
/// Steps between checks of the tail bound.
const TAIL_CHECK: u64 = 64;
/// Above this exponent the bridge crossing probability is below `e^-40`.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
    /// A path stops once its remaining discounted dividends are provably below this.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_tail_tol() -> f64 {
    1e-7
}

impl SimConfig {
    pub fn new(x0: f64, lambda: f64) -> Self {
        Self {
            x0,
            dt: 1e-3,
            horizon: 100.0 / lambda,
            n_paths: 10_000,
            seed: 0,
            antithetic: false,
            tail_tol: default_tail_tol(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::ConfigError(what.into()));
        if !(self.x0 >= 0.0 && self.x0.is_finite()) {
            return bad("x0 must be finite and non-negative");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if self.n_paths < 2 {
            return bad("at least two paths are needed");
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return bad("antithetic sampling needs an even number of paths");
        }
        if !(self.tail_tol >= 0.0) {
            return bad("tail_tol must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub stderr: f64,
    pub ruin_fraction: f64,
    pub mean_events: f64,
    pub n_paths: usize,
    /// Mean simulated time per path.
    pub mean_time: f64,
    /// Upper bound on the dividends lost to stopping paths early.
    pub truncation_bound: f64,
}

/// Compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    fn merge(&mut self, o: &Kahan) {
        self.add(o.sum);
        self.add(-o.c);
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: usize,
    v: Kahan,
    /// Running mean and centred sum of squares of the samples.
    mean: f64,
    m2: f64,
    ruined: Kahan,
    events: Kahan,
    time: Kahan,
    tail: Kahan,
}

impl Acc {
    fn merge(&mut self, o: &Acc) {
        if o.n > 0 {
            let n = (self.n + o.n) as f64;
            let delta = o.mean - self.mean;
            self.mean += delta * o.n as f64 / n;
            self.m2 += o.m2 + delta * delta * self.n as f64 * o.n as f64 / n;
        }
        self.n += o.n;
        self.v.merge(&o.v);
        self.ruined.merge(&o.ruined);
        self.events.merge(&o.events);
        self.time.merge(&o.time);
        self.tail.merge(&o.tail);
    }
}

struct PathOutcome {
    value: f64,
    ruined: bool,
    events: u32,
    time: f64,
    tail: f64,
}

/// Per-path random streams: normals and bridge uniforms on separate streams,
/// both keyed by `(seed, key)`.
fn streams(seed: u64, key: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut z = ChaCha8Rng::seed_from_u64(seed);
    z.set_stream(2 * key);
    let mut u = ChaCha8Rng::seed_from_u64(seed);
    u.set_stream(2 * key + 1);
    (z, u)
}

struct PathSim<'a> {
    model: &'a ValidatedModel,
    policy: &'a Policy,
    cfg: &'a SimConfig,
    /// `sup (mu(y) - lambda y)^+ / lambda` over the reachable range.
    drift_excess: f64,
    pays: bool,
}

impl PathSim<'_> {
    fn tail_bound(&self, t: f64, x: f64) -> f64 {
        if !self.pays {
            return 0.0;
        }
        (-self.model.lambda() * t).exp() * self.model.k() * (x.max(0.0) + self.drift_excess)
    }

    fn run(&self, key: u64, flip: bool) -> PathOutcome {
        let m = self.model;
        let (lam, k, k_fixed) = (m.lambda(), m.k(), m.fixed_cost());
        let dt = self.cfg.dt;
        let sq = dt.sqrt();
        let max_steps = (self.cfg.horizon / dt).ceil() as u64;
        let (mut zs, mut us) = streams(self.cfg.seed, key);
        let sign = if flip { -1.0 } else { 1.0 };
        let mut x = self.cfg.x0;
        let mut value = 0.0;
        let mut events = 0u32;
        let mut n = 0u64;
        // Pays while the surplus sits in a payment region; returns whether it ruined.
        let pay = |x: &mut f64, t: f64, value: &mut f64, events: &mut u32| -> bool {
            while let Some(to) = self.policy.target(*x) {
                let xi = *x - to;
                *value += (-lam * t).exp() * (k * xi - k_fixed);
                *events += 1;
                *x = to;
                if to <= 0.0 {
                    return true;
                }
            }
            false
        };
        if pay(&mut x, 0.0, &mut value, &mut events) {
            return PathOutcome { value, ruined: true, events, time: 0.0, tail: 0.0 };
        }
        loop {
            if n.is_multiple_of(TAIL_CHECK) {
                let t = n as f64 * dt;
                let tail = self.tail_bound(t, x);
                if tail < self.cfg.tail_tol || n >= max_steps {
                    return PathOutcome { value, ruined: false, events, time: t, tail };
                }
            } else if n >= max_steps {
                let t = n as f64 * dt;
                return PathOutcome { value, ruined: false, events, time: t, tail: self.tail_bound(t, x) };
            }
            let (lo, hi) = continuation(self.policy, x);
            let z: f64 = zs.sample(StandardNormal);
            let s = m.sigma(x);
            let next = x + m.mu(x) * dt + s * sq * sign * z;
            n += 1;
            let t = n as f64 * dt;
            // A boundary is hit if the step ends beyond it, or else with the
            // Brownian bridge crossing probability.
            let var = s * s * dt;
            let mut crossed = |d0: f64, d1: f64| d1 <= 0.0 || {
                let a = 2.0 * d0 * d1 / var;
                a < BRIDGE_CUTOFF && us.random::<f64>() < (-a).exp()
            };
            if crossed(x - lo, next - lo) {
                if lo <= 0.0 {
                    return PathOutcome { value, ruined: true, events, time: t, tail: 0.0 };
                }
                x = lo;
            } else if crossed(hi - x, hi - next) {
                x = hi;
            } else {
                x = next;
                continue;
            }
            if pay(&mut x, t, &mut value, &mut events) {
                return PathOutcome { value, ruined: true, events, time: t, tail: 0.0 };
            }
        }
    }
}

/// The continuation interval `(lo, hi)` around `x`; `lo = 0` is ruin.
fn continuation(policy: &Policy, x: f64) -> (f64, f64) {
    match *policy {
        Policy::SimpleBarrier { u_bar, .. } => (0.0, u_bar),
        Policy::TwoLevelBarrier { u_bar1, u2c, u_bar2, .. } => {
            if x < u_bar1 {
                (0.0, u_bar1)
            } else {
                (u2c, u_bar2)
            }
        }
        Policy::NoOptimal { .. } => (0.0, f64::INFINITY),
    }
}

fn top_level(policy: &Policy) -> Option<f64> {
    match *policy {
        Policy::SimpleBarrier { u_bar, .. } => Some(u_bar),
        Policy::TwoLevelBarrier { u_bar2, .. } => Some(u_bar2),
        Policy::NoOptimal { .. } => None,
    }
}

/// Expected discounted dividends of `policy` from `cfg.x0`, by Euler-Maruyama.
///
/// Ruin and payment boundaries crossed between grid times are detected with
/// the Brownian bridge crossing probability; a crossed boundary is paid from
/// exactly, so overshoot does not bias the payments.
pub fn simulate_policy(model: &ValidatedModel, policy: &Policy, cfg: &SimConfig) -> Result<SimResult> {
    cfg.check()?;
    policy.check()?;
    let lam = model.lambda();
    let top = top_level(policy);
    let drift_excess = match top {
        Some(b) => {
            let hi = b.max(cfg.x0) + 1.0 + 10.0 * cfg.dt.sqrt() * (1.0 + model.sigma(b.max(cfg.x0)));
            (0..=2000)
                .map(|i| {
                    let y = hi * i as f64 / 2000.0;
                    model.mu(y) - lam * y
                })
                .fold(0.0f64, f64::max)
                / lam
                + 1.0
        }
        None => 0.0,
    };
    let sim = PathSim {
        model,
        policy,
        cfg,
        drift_excess,
        pays: top.is_some(),
    };
    // Antithetic pairs share a key; their mean is one sample.
    let per_sample = if cfg.antithetic { 2 } else { 1 };
    let n_samples = cfg.n_paths / per_sample;
    let n_chunks = n_samples.div_ceil(CHUNK);
    let chunks: Vec<Acc> = par::map_range(n_chunks, |c| {
        let mut acc = Acc::default();
        let mut vals = Vec::with_capacity(CHUNK);
        for s in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
            let outs: Vec<PathOutcome> = (0..per_sample).map(|j| sim.run(s as u64, j == 1)).collect();
            let v = outs.iter().map(|o| o.value).sum::<f64>() / per_sample as f64;
            acc.v.add(v);
            vals.push(v);
            for o in &outs {
                acc.ruined.add(if o.ruined { 1.0 } else { 0.0 });
                acc.events.add(o.events as f64);
                acc.time.add(o.time);
                acc.tail.add(o.tail);
            }
        }
        acc.n = vals.len();
        if acc.n > 0 {
            acc.mean = acc.v.sum / acc.n as f64;
            acc.m2 = vals.iter().map(|v| (v - acc.mean).powi(2)).sum();
        }
        acc
    });
    let mut tot = Acc::default();
    for c in &chunks {
        tot.merge(c);
    }
    let n = tot.n as f64;
    let mean = tot.v.sum / n;
    let var = tot.m2 / (n - 1.0);
    let paths = (tot.n * per_sample) as f64;
    Ok(SimResult {
        estimate: mean,
        stderr: (var / n).sqrt(),
        ruin_fraction: tot.ruined.sum / paths,
        mean_events: tot.events.sum / paths,
        n_paths: tot.n * per_sample,
        mean_time: tot.time.sum / paths,
        truncation_bound: tot.tail.sum / paths,
    })
}

/// A maximal run of grid nodes where paying is optimal, and where it pays to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionInterval {
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DPOracle {
    pub xs: Vec<f64>,
    pub v: Vec<f64>,
    pub actions: Vec<ActionInterval>,
    pub outer_iterations: usize,
    /// Last sup-norm change of the outer iteration.
    pub increment: f64,
}

impl DPOracle {
    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    /// Linear interpolation of the grid value.
    pub fn value_at(&self, x: f64) -> f64 {
        let h = self.dx();
        let i = ((x / h).floor() as usize).min(self.xs.len() - 2);
        let w = (x - self.xs[i]) / h;
        (1.0 - w) * self.v[i] + w * self.v[i + 1]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,V\n");
        for (x, v) in self.xs.iter().zip(&self.v) {
            s.push_str(&format!("{x:e},{v:e}\n"));
        }
        s
    }
}

pub const DP_INCREMENT_TOL: f64 = 1e-9;
const DP_MAX_OUTER: usize = 200_000;

/// Upwind discretization of `L` on the grid; node 0 is absorbing and the last
/// node reflects.
struct Generator {
    lo: Vec<f64>,
    diag: Vec<f64>,
    up: Vec<f64>,
}

impl Generator {
    fn new(model: &ValidatedModel, xs: &[f64]) -> Self {
        let n = xs.len();
        let h = xs[1] - xs[0];
        let lam = model.lambda();
        let (mut lo, mut diag, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 1..n {
            let x = xs[i];
            let d = 0.5 * model.sigma2(x) / (h * h);
            let mu = model.mu(x);
            let (a, b) = (d + (-mu).max(0.0) / h, d + mu.max(0.0) / h);
            diag[i] = -(a + b) - lam;
            if i + 1 == n {
                lo[i] = a + b;
            } else {
                lo[i] = a;
                up[i] = b;
            }
        }
        Self { lo, diag, up }
    }

    fn apply(&self, v: &[f64], i: usize) -> f64 {
        let n = v.len();
        let mut r = self.lo[i] * v[i - 1] + self.diag[i] * v[i];
        if i + 1 < n {
            r += self.up[i] * v[i + 1];
        }
        r
    }
}

/// `M V` on the grid and the node each payment goes to.
fn intervention(v: &[f64], xs: &[f64], k: f64, k_fixed: f64) -> (Vec<f64>, Vec<usize>) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    let mut mv = Vec::with_capacity(v.len());
    let mut to = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let c = v[i] - k * xs[i];
        if c > best {
            best = c;
            arg = i;
        }
        mv.push(k * xs[i] - k_fixed + best);
        to.push(arg);
    }
    (mv, to)
}

/// Solves `max(L_h V, psi - V) = 0`, `V_0 = 0`, by policy iteration. `stop`
/// holds the starting policy and receives the final one.
fn obstacle(gen: &Generator, psi: &[f64], stop: &mut [bool], v: &mut [f64]) -> Result<()> {
    let n = v.len();
    let (mut a, mut b, mut c, mut d) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for _ in 0..n + 5 {
        b[0] = 1.0;
        d[0] = 0.0;
        for i in 1..n {
            if stop[i] {
                a[i] = 0.0;
                b[i] = 1.0;
                c[i] = 0.0;
                d[i] = psi[i];
            } else {
                a[i] = gen.lo[i];
                b[i] = gen.diag[i];
                c[i] = gen.up[i];
                d[i] = 0.0;
            }
        }
        thomas(&a, &b, &c, &mut d);
        v.copy_from_slice(&d);
        // A stop row has `V = psi` exactly and leaves only if `L_h V > 0`; a
        // continuation row has `L_h V = 0` up to rounding of size
        // `eps |diag| |V|` and leaves only if `psi > V`. Margins keep ties from cycling.
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut changed = false;
        for i in 1..n {
            let flip = if stop[i] {
                gen.apply(v, i) > 1e-13 * scale * (1.0 + gen.diag[i].abs())
            } else {
                psi[i] - v[i] > 1e-13 * scale
            };
            if flip {
                stop[i] = !stop[i];
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
    Err(Error::NonConvergence("obstacle policy iteration".into()))
}

/// Tridiagonal solve; `d` is overwritten by the solution.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Grid solution of `max(L V, M V - V) = 0` on `[0, x_max_dp]` with `nx` cells.
///
/// Outer loop: `V <- S(M V)`, where `S(psi)` solves the obstacle problem with
/// obstacle `psi`. Starting from `V = 0` the iterates increase to the fixed point.
pub fn dp_solve(model: &ValidatedModel, nx: usize, x_max_dp: f64) -> Result<DPOracle> {
    if nx < 500 {
        return Err(Error::ConfigError(format!("nx = {nx} is below 500")));
    }
    if !(x_max_dp > 0.0 && x_max_dp.is_finite()) {
        return Err(Error::ConfigError("x_max_dp must be positive".into()));
    }
    let xs: Vec<f64> = (0..=nx).map(|i| x_max_dp * i as f64 / nx as f64).collect();
    let gen = Generator::new(model, &xs);
    let (k, k_fixed) = (model.k(), model.fixed_cost());
    let mut v = vec![0.0; nx + 1];
    let mut next = v.clone();
    let mut stop = vec![false; nx + 1];
    for it in 1..=DP_MAX_OUTER {
        let (mv, _) = intervention(&v, &xs, k, k_fixed);
        obstacle(&gen, &mv, &mut stop, &mut next)?;
        let inc = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if inc <= DP_INCREMENT_TOL * scale {
            let (_, to) = intervention(&v, &xs, k, k_fixed);
            let actions = action_intervals(&xs, &stop, &to);
            return Ok(DPOracle {
                xs,
                v,
                actions,
                outer_iterations: it,
                increment: inc,
            });
        }
    }
    Err(Error::NonConvergence(format!("dp oracle after {DP_MAX_OUTER} sweeps")))
}

fn action_intervals(xs: &[f64], stop: &[bool], to: &[usize]) -> Vec<ActionInterval> {
    let mut out = Vec::new();
    let mut i = 1;
    while i < xs.len() {
        if stop[i] {
            let start = i;
            while i + 1 < xs.len() && stop[i + 1] {
                i += 1;
            }
            out.push(ActionInterval {
                lo: xs[start],
                hi: xs[i],
                target: xs[to[start]],
            });
        }
        i += 1;
    }
    out
}
