use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sabr-atom")).args(args).env_remove("SABR_ATOM_THREADS").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn results(v: &Value) -> &Vec<Value> {
    v["results"].as_array().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

#[test]
fn series_rows_are_bounded_by_the_next_term() {
    let v = json(&["mass", "--method", "largetime-series", "--n", "5", "--x0", "0.2", "--y0", "0.1", "--nu", "1.0", "--beta", "0.2"]);
    let rows = results(&v);
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert!(f(&r["error"]) <= f(&r["bound"]), "{r}");
    }
    assert!(f(&rows[5]["error"]) < 7.3e-9);
    assert!(v["meta"]["reference_value"].is_number());
}

#[test]
fn beta_zero_closed_form() {
    let v = json(&["mass", "--method", "beta0", "--x0", "0.35", "--y0", "0.05", "--nu", "0.3"]);
    assert!((f(&results(&v)[0]["value"]) - 0.283).abs() < 5e-4);
}

#[test]
fn long_horizon_matches_the_perpetual_mass() {
    let finite = json(&["mass", "--method", "finite", "--t", "1e9"]);
    let perpetual = json(&["mass", "--method", "largetime"]);
    let (a, b) = (f(&results(&finite)[0]["value"]), f(&results(&perpetual)[0]["value"]));
    assert!((a - b).abs() < 1e-6, "{a} {b}");
}

#[test]
fn zero_strike_call_is_the_forward() {
    let v = json(&["price", "--K", "0", "--x0", "0.3"]);
    assert_eq!(f(&results(&v)[0]["price"]), 0.3);
}

#[test]
fn density_integrates_to_one() {
    let v = json(&["density", "--t", "5", "--grid-integrate"]);
    assert!((f(&results(&v)[0]["integral"]) - 1.0).abs() < 1e-3);
}

#[test]
fn monte_carlo_output_is_reproducible() {
    let args = ["mc", "--paths", "2000", "--T", "100", "--seed", "42", "--format", "csv"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x0,beta,steps_per_unit,t,mass,ci_low,ci_high");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["smile", "--k", ""]).status.code(), Some(2));
    assert_eq!(run(&["mass", "--method", "finite"]).status.code(), Some(2));
    assert_eq!(run(&["mass", "--rho", "0.4"]).status.code(), Some(2));
    assert_eq!(run(&["mass", "--nu", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["mass", "--x0", "1:0:0.1"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_that_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# closed form\nx0 = 0.35\ny0 = 0.05\nnu = 0.3\nmethod = beta0\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&["mass", "--config", cfg]);
    assert!((f(&results(&v)[0]["value"]) - 0.283).abs() < 5e-4);
    let v = json(&["--config", cfg, "mass", "--x0", "0.5"]);
    assert_eq!(f(&results(&v)[0]["x0"]), 0.5);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "x0 = 0.35\nunknown_key = 1\n").unwrap();
    let out = run(&["mass", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown-key"));
}

#[test]
fn output_file_and_json_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mass.json");
    let out = run(&["mass", "--output", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["version", "schema_version", "wall_time_s"] {
        assert!(!v["meta"][key].is_null(), "{key}");
    }
    assert_eq!(v["method"], "largetime");
    assert_eq!(f(&v["params"]["beta"]), 0.2);
}

#[test]
fn sweeps_produce_one_row_per_combination() {
    let v = json(&["mass", "--x0", "0.1,0.2", "--beta", "0:0.4:0.2"]);
    assert_eq!(results(&v).len(), 6);
}

#[test]
fn slope_ratio_columns_separate_the_two_smiles() {
    let v = json(&["smile", "--x0", "0.35", "--y0", "0.05", "--nu", "0.3", "--beta", "0", "--t", "10", "--regularize"]);
    let deep: Vec<&Value> = results(&v).iter().filter(|r| f(&r["k"]) <= -2.0).collect();
    assert!(deep.iter().any(|r| f(&r["model_lee_ratio"]) > std::f64::consts::SQRT_2));
    assert!(deep.iter().all(|r| f(&r["dmhj4_lee_ratio"]) <= std::f64::consts::SQRT_2));
    assert!(deep.iter().all(|r| f(&r["lee_ratio"]) <= std::f64::consts::SQRT_2));
    assert!(v["meta"]["crossover"].is_number());
}
