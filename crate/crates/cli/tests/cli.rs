use std::process::{Command, Output};

use serde_json::Value;
use whkae_cli::RunConfig;

fn whkae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whkae")).args(args).output().expect("binary runs")
}

fn json_of(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn zeta_of_circle_at_three() {
    let v = json_of(&whkae(&["zeta", "--model", "circle", "--s=3"]));
    let x = &v["values"][0];
    assert!((x["value"].as_f64().unwrap() - 2.4041138063191885).abs() < 1e-10);
    assert!(x["abs_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["zeta", "--model", "sphere_torus(1)", "--s=0.37,-0.6+1.1i,3.5"][..],
        &["trace", "--model", "nc_torus", "--kernel", "gauss", "--count", "5"][..],
        &["expand", "--model", "qds(number_op)", "--order", "4"][..],
    ] {
        let a = whkae(args);
        let b = whkae(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn every_number_carries_a_bound_or_exact_tag() {
    let v = json_of(&whkae(&["dimspec", "--model", "sphere_eq(1)", "--obs", "id", "--obs", "pos"]));
    for (_, data) in v["observables"].as_object().unwrap() {
        for (_, r) in data["residues"].as_object().unwrap() {
            assert!(r.get("exact") == Some(&Value::Bool(true)) || r.get("err").is_some(), "{r}");
        }
    }
    let v = json_of(&whkae(&["trace", "--model", "circle", "--count", "3"]));
    for s in v["samples"].as_array().unwrap() {
        assert!(s["abs_error"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn config_file_round_trips_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let cfg = RunConfig { model: "qds(circle)".into(), eps: 1e-11, rho: 0.4, ..RunConfig::default() };
    std::fs::write(&path, cfg.to_toml()).unwrap();
    let p = path.to_str().unwrap();

    let echoed = whkae(&["config", "--config", p]);
    assert!(echoed.status.success());
    assert_eq!(RunConfig::from_toml(&String::from_utf8(echoed.stdout).unwrap()).unwrap(), cfg);

    let overridden = whkae(&["config", "--config", p, "--model", "circle"]);
    let got = RunConfig::from_toml(&String::from_utf8(overridden.stdout).unwrap()).unwrap();
    assert_eq!(got, RunConfig { model: "circle".into(), ..cfg });
}

#[test]
fn exit_codes_follow_error_class() {
    assert_eq!(whkae(&["trace", "--model", "no_such_model"]).status.code(), Some(2));
    assert_eq!(whkae(&["zeta", "--model", "circle", "--s=1"]).status.code(), Some(2));
    assert_eq!(whkae(&["trace", "--model", "circle", "--eps", "1e-30"]).status.code(), Some(3));
    assert_eq!(whkae(&["trace", "--model", "circle", "--budget-levels", "3", "--t0", "0.001"]).status.code(), Some(3));
    assert_eq!(whkae(&["trace", "--rho", "2"]).status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let bad = Command::new(env!("CARGO_BIN_EXE_whkae")).args(["models"]).env("WHKAE_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let one = Command::new(env!("CARGO_BIN_EXE_whkae"))
        .args(["trace", "--model", "sphere_eq(2)", "--count", "4"])
        .env("WHKAE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(one.stdout, whkae(&["trace", "--model", "sphere_eq(2)", "--count", "4"]).stdout);
}

#[test]
fn plot_data_is_csv() {
    let o = whkae(&["plot-data", "--model", "number_op", "--count", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value,abs_error,kernel"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn suspension_report() {
    let v = json_of(&whkae(&["suspend", "--model", "circle", "--times", "2"]));
    assert_eq!(v["model"]["p"], 3);
    assert_eq!(v["dimension_spectrum"]["dimension_spectrum"], serde_json::json!([1, 2, 3]));
    assert_eq!(whkae(&["suspend", "--model", "nc_torus"]).status.code(), Some(2));
}

#[test]
fn verify_single_criterion() {
    let v = json_of(&whkae(&["verify", "--criterion", "1"]));
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 1);
}
