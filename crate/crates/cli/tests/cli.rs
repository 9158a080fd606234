use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use impulse_dividend::fixtures;
use impulse_dividend::model::ModelSpec;
use impulse_dividend::solver::{prepare, solve, two_level_at, Solution, Subcase};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_impulse-dividend"));
    c.env_remove("IMPULSE_DIVIDEND_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_model(dir: &Path, name: &str, spec: &ModelSpec) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(spec).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn solve_then_verify_round_trips_and_writes_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "g2.json", &fixtures::g2());
    let sol = dir.path().join("sol.json");
    let grid = dir.path().join("v.csv");
    let o = run(&["solve", "--model", s(&model), "--out", s(&sol), "--emit-v", s(&grid), "--grid", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let read: Solution = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    let fresh = solve(&prepare(&fixtures::g2()).unwrap()).unwrap();
    assert_eq!(read, fresh);

    let csv = std::fs::read_to_string(&grid).unwrap();
    assert!(csv.starts_with("x,V,Vp\n"));
    assert_eq!(csv.lines().count(), 51);
    for out in [&sol, &grid] {
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(format!("{}.manifest.json", s(out))).unwrap()).unwrap();
        assert_eq!(m["subcommand"], "solve");
        assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
        assert_eq!(m["tolerances"]["qvi_rtol"], 1e-6);
    }

    let report = dir.path().join("report.json");
    let o = run(&["verify", "--model", s(&model), "--solution", s(&sol), "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_rejects_a_perturbed_solution() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "g2.json", &fixtures::g2());
    let p = prepare(&fixtures::g2()).unwrap();
    let beta = solve(&p).unwrap().scalars.beta.unwrap();
    let bad = two_level_at(&p, beta + 0.01, Subcase::B).unwrap();
    let sol = dir.path().join("bad.json");
    std::fs::write(&sol, serde_json::to_string(&bad).unwrap()).unwrap();
    let o = run(&["verify", "--model", s(&model), "--solution", s(&sol)]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn unsupported_case_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "r8.json", &fixtures::hump(-1.0, 0.5, 0.5, 1.0, 0.2));
    let o = run(&["classify", "--model", s(&model)]);
    assert_eq!(code(&o), 3);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["case"].is_null());
    assert_eq!(code(&run(&["solve", "--model", s(&model)])), 3);
}

#[test]
fn usage_and_input_errors_exit_with_one() {
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["solve"])), 1);
    assert_eq!(code(&run(&["solve", "--model", "/nonexistent/m.json"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn simulation_ignores_the_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "g1.json", &fixtures::g1());
    let args = ["simulate", "--model", s(&model), "--x0", "0.1,1.0", "--paths", "5000", "--seed", "3"];
    let a = bin().args(args).env("IMPULSE_DIVIDEND_THREADS", "1").output().unwrap();
    let b = bin().args(args).arg("--threads").arg("3").output().unwrap();
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn limit_regimes_need_a_payout_level() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "h4.json", &fixtures::h4_edge());
    assert_eq!(code(&run(&["simulate", "--model", s(&model), "--x0", "1.0", "--paths", "100"])), 1);
    let o = run(&["simulate", "--model", s(&model), "--x0", "1.0", "--paths", "100", "--u-bar", "4.0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn csv_outputs_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "g2.json", &fixtures::g2());
    let cases: [(&[&str], &str); 3] = [
        (&["oracle", "--grid", "600"], "x,V"),
        (&["curves", "--grid", "7"], "beta,u1,u2,u3,J1,J2,J13,v,G"),
        (&["dump-basis"], "x,g1,g1p,g1pp,g2,g2p,g2pp"),
    ];
    for (args, header) in cases {
        let out = dir.path().join("out.csv");
        let o = bin().args(args).args(["--model", s(&model), "--out", s(&out)]).output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
        assert!(Path::new(&format!("{}.manifest.json", s(&out))).exists());
    }
}
