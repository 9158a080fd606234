use std::path::Path;

use serde::Serialize;
use serde_json::json;

use impulse_dividend::basis::{build_basis, build_h_branches, DEFAULT_TOL};
use impulse_dividend::curves::samples_to_csv;
use impulse_dividend::fixtures;
use impulse_dividend::landmarks::{classify_r, find_landmarks, r_margins};
use impulse_dividend::model::{validate, ModelSpec};
use impulse_dividend::simulate::{dp_solve, simulate_policy, SimConfig};
use impulse_dividend::solver::{prepare_with_tol, solve, Policy, Prepared, Solution};
use impulse_dividend::stratify::solve_cstar;
use impulse_dividend::verify::{default_x_end, identity_suite, qvi_report};
use impulse_dividend::Error;

use crate::manifest::{print_stdout, Recorder};
use crate::{Command, Failure, ModelArgs};

type Res<T> = Result<T, Failure>;

fn load_model(a: &ModelArgs) -> Res<ModelSpec> {
    let text = std::fs::read_to_string(&a.model).map_err(|e| Failure::Other(format!("{}: {e}", a.model.display())))?;
    let mut spec: ModelSpec = serde_json::from_str(&text)?;
    if a.x_max.is_some() {
        spec.x_max = a.x_max;
    }
    Ok(spec)
}

fn load_solution(path: &Path) -> Res<Solution> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn pretty<T: Serialize>(v: &T) -> Res<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn csv_text<R: Serialize>(header: &[&str], rows: impl Iterator<Item = R>) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Other(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Other(e.to_string()))
}

pub fn run(cmd: Command) -> Res<()> {
    match cmd {
        Command::Classify { model, out } => classify(&model, out.as_deref()),
        Command::Solve { model, out, emit_v, grid } => solve_cmd(&model, out.as_deref(), emit_v.as_deref(), grid),
        Command::Verify { model, solution, out, grid, seed } => {
            verify_cmd(&model, solution.as_deref(), out.as_deref(), grid, seed)
        }
        Command::Simulate {
            model,
            solution,
            x0,
            paths,
            dt,
            horizon,
            seed,
            antithetic,
            u_bar,
            out,
        } => {
            let spec = load_model(&model)?;
            let p = prepare_with_tol(&spec, model.tol)?;
            let sol = match &solution {
                Some(path) => load_solution(path)?,
                None => solve(&p)?,
            };
            let policy = match u_bar {
                Some(u) => sol.near_optimal_policy(u)?,
                None => sol.policy,
            };
            if matches!(policy, Policy::NoOptimal { .. }) {
                return Err(Failure::Other("no optimal policy exists for this model; pass --u-bar".into()));
            }
            let mut rec = Recorder::new("simulate", Some(&model.model), model.tol);
            let m = p.basis.model();
            let mut rows = Vec::new();
            for &x in &x0 {
                let mut cfg = SimConfig::new(x, m.lambda());
                cfg.dt = dt;
                cfg.n_paths = paths;
                cfg.seed = seed;
                cfg.antithetic = antithetic;
                if let Some(h) = horizon {
                    cfg.horizon = h;
                }
                let r = simulate_policy(m, &policy, &cfg)?;
                let v = sol.value.eval(&p.basis, x)[0];
                let z = if r.stderr > 0.0 { (r.estimate - v) / r.stderr } else { 0.0 };
                rows.push(json!({ "x0": x, "config": cfg, "result": r, "value": v, "z": z }));
            }
            rec.detail("policy", policy);
            rec.detail("seed", seed);
            rec.detail("paths", paths);
            rec.detail("dt", dt);
            rec.detail("solution", &solution);
            rec.emit(out.as_deref(), &pretty(&json!({ "policy": policy, "runs": rows }))?)?;
            Ok(rec.finish()?)
        }
        Command::Curves { model, grid, out } => {
            let p = prepare_with_tol(&load_model(&model)?, model.tol)?;
            let rows = p.curves()?.sample(grid)?;
            let mut rec = Recorder::new("curves", Some(&model.model), model.tol);
            rec.detail("grid", grid);
            rec.emit(out.as_deref(), &samples_to_csv(&rows))?;
            Ok(rec.finish()?)
        }
        Command::Oracle { model, grid, dp_x_max, out } => {
            let spec = load_model(&model)?;
            let p = prepare_with_tol(&spec, model.tol)?;
            let x_end = match dp_x_max {
                Some(x) => x,
                None => {
                    let sol = solve(&p)?;
                    let last = sol.value.knots.last().copied().unwrap_or(0.0);
                    (1.5 * last + 2.0).max(6.0)
                }
            };
            let dp = dp_solve(p.basis.model(), grid, x_end)?;
            let mut rec = Recorder::new("oracle", Some(&model.model), model.tol);
            rec.detail("grid", grid);
            rec.detail("dp_x_max", x_end);
            rec.detail("actions", &dp.actions);
            rec.detail("outer_iterations", dp.outer_iterations);
            rec.detail("increment", dp.increment);
            rec.emit(out.as_deref(), &dp.to_csv())?;
            Ok(rec.finish()?)
        }
        Command::DumpBasis { model, out } => {
            let m = validate(&load_model(&model)?)?;
            let b = build_basis(&m, model.tol)?;
            let text = csv_text(&["x", "g1", "g1p", "g1pp", "g2", "g2p", "g2pp"], b.nodes())?;
            let mut rec = Recorder::new("dump-basis", Some(&model.model), model.tol);
            rec.detail("s", b.s());
            rec.detail("z0", b.z0());
            rec.detail("x_max", b.x_max());
            rec.emit(out.as_deref(), &text)?;
            Ok(rec.finish()?)
        }
        Command::Selftest => selftest(),
    }
}

fn classify(a: &ModelArgs, out: Option<&Path>) -> Res<()> {
    let m = validate(&load_model(a)?)?;
    let b = build_basis(&m, a.tol)?;
    let br = build_h_branches(&b)?;
    let lm = find_landmarks(&b, &br)?;
    let cs = solve_cstar(&b, &lm)?;
    let margins = r_margins(&b, &lm, &cs);
    let label = classify_r(&b, &lm, &cs);
    let mut report = json!({
        "case": label.as_ref().ok(),
        "landmarks": lm,
        "c_star": cs,
        "r_margins": margins,
    });
    let mut rec = Recorder::new("classify", Some(&a.model), a.tol);
    if let Ok(label) = label {
        let p = Prepared {
            basis: b,
            branches: br,
            landmarks: lm,
            cstar: cs,
            label,
        };
        report["c_star_over_c_inf_minus_one"] = json!(finite_or_null(p.cstar_excess()));
        if let Ok(mach) = p.curves().and_then(|c| c.machinery()) {
            report["case_g"] = json!(mach.case_g);
            report["case_h"] = json!(mach.case_h);
            report["beta"] = json!(mach);
        }
    }
    rec.emit(out, &pretty(&report)?)?;
    rec.finish()?;
    label.map(|_| ()).map_err(Failure::from)
}

fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn solve_cmd(a: &ModelArgs, out: Option<&Path>, emit_v: Option<&Path>, grid: usize) -> Res<()> {
    let p = prepare_with_tol(&load_model(a)?, a.tol)?;
    let sol = solve(&p)?;
    let mut rec = Recorder::new("solve", Some(&a.model), a.tol);
    if let Some(path) = emit_v {
        let x_end = default_x_end(&p.basis, &sol.value);
        let n = grid.max(2);
        let rows = (0..n).map(|i| {
            let x = x_end * i as f64 / (n - 1) as f64;
            let [v, vp, _] = sol.value.eval(&p.basis, x);
            (x, v, vp)
        });
        rec.emit(Some(path), &csv_text(&["x", "V", "Vp"], rows)?)?;
        rec.detail("emit_v_grid", n);
    }
    rec.emit(out, &pretty(&sol)?)?;
    Ok(rec.finish()?)
}

fn verify_cmd(a: &ModelArgs, solution: Option<&Path>, out: Option<&Path>, grid: usize, seed: u64) -> Res<()> {
    let p = prepare_with_tol(&load_model(a)?, a.tol)?;
    let sol = match solution {
        Some(path) => load_solution(path)?,
        None => solve(&p)?,
    };
    let qvi = qvi_report(&p.basis, &sol, grid);
    let ids = identity_suite(&p.basis, &p.landmarks, 200, seed);
    let passed = qvi.passed && ids.passed;
    let mut rec = Recorder::new("verify", Some(&a.model), a.tol);
    rec.detail("grid", grid);
    rec.detail("seed", seed);
    rec.detail("solution", solution);
    rec.emit(out, &pretty(&json!({ "passed": passed, "qvi": qvi, "identities": ids }))?)?;
    rec.finish()?;
    if passed {
        Ok(())
    } else {
        let names: Vec<&str> = qvi
            .failures()
            .into_iter()
            .chain(ids.checks.iter().filter(|c| !c.passed))
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure::from(Error::VerificationFailure(names.join(", "))))
    }
}

/// Zero drift, `sigma^2 = 2`, `lambda = 1`: `g1 = cosh`, `g2 = e^x`, `W = 1`,
/// and the optimal barrier value is `(u - K) sinh(x) / sinh(u)` below `u`.
fn selftest() -> Res<()> {
    let spec = fixtures::zero_drift();
    let m = validate(&spec)?;
    let b = build_basis(&m, DEFAULT_TOL)?;
    let (mut e1, mut e2, mut ew) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..=1000 {
        let x = 10.0 * i as f64 / 1000.0;
        let j = b.jet(x);
        e1 = e1.max((j.g1[0] / x.cosh() - 1.0).abs());
        e2 = e2.max((j.g2()[0] / x.exp() - 1.0).abs());
        ew = ew.max((j.w - 1.0).abs());
    }
    let p = prepare_with_tol(&spec, DEFAULT_TOL)?;
    let sol = solve(&p)?;
    let u = sol.scalars.u_bar_star;
    let k_fixed = spec.fixed_cost;
    // Smooth fit: (u - K) cosh(u) / sinh(u) = 1.
    let fit = ((u - k_fixed) / u.tanh() - 1.0).abs();
    let mut ev = 0.0f64;
    for i in 0..=200 {
        let x = u * i as f64 / 200.0;
        let exact = (u - k_fixed) * x.sinh() / u.sinh();
        ev = ev.max((sol.value.eval(&p.basis, x)[0] - exact).abs() / (u - k_fixed));
    }
    let qvi = qvi_report(&p.basis, &sol, 2000).passed;
    let ids = identity_suite(&p.basis, &p.landmarks, 200, 0).passed;
    let checks = [
        ("g1_is_cosh", e1, 1e-8),
        ("g2_is_exp", e2, 1e-8),
        ("wronskian_is_one", ew, 1e-8),
        ("smooth_fit", fit, 1e-8),
        ("value_closed_form", ev, 1e-8),
        ("qvi", if qvi { 0.0 } else { 1.0 }, 0.0),
        ("identities", if ids { 0.0 } else { 1.0 }, 0.0),
    ];
    let rows: Vec<_> = checks
        .iter()
        .map(|&(name, value, limit)| json!({ "name": name, "value": value, "limit": limit, "passed": value <= limit }))
        .collect();
    let passed = checks.iter().all(|&(_, v, l)| v <= l);
    print_stdout(&pretty(&json!({ "passed": passed, "checks": rows }))?)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("selftest".into()))
    }
}
