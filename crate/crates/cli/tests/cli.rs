use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn adi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adi")).args(args).current_dir(cwd).output().expect("spawn adi")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(adi(&[], tmp.path()).status.code(), Some(1));
    assert_eq!(adi(&["optimize", "--no-such-flag"], tmp.path()).status.code(), Some(1));
    assert_eq!(adi(&["--help"], tmp.path()).status.code(), Some(0));

    let out = adi(&["trace"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "Usage");

    let out = adi(&["trace", "--tau0", "1.65", "--tol-ode", "-1"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = adi(&["angle-bounds", "--format", "png"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_start_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adi(&["trace", "--tau0", "1.64"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "NoCrossing");
    assert!(v["error"]["message"].as_str().unwrap().contains("1.64"));
}

#[test]
fn trace_reports_cost_and_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adi(&["trace", "--tau0", "1.6469768608776936", "--samples", "50", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let total = v["cost"]["total"].as_f64().unwrap();
    assert!((total - 3.5492595860809693).abs() <= 1e-6);
    assert_eq!(v["feasibility"]["feasible"], true);
    assert!(v["solution"]["n_steps"].as_u64().unwrap() > 0);
    let csv = fs::read_to_string(tmp.path().join("o/trace.csv")).unwrap();
    assert!(csv.starts_with("x,psi,tau\n"));
    assert_eq!(csv.lines().count(), 52);
}

#[test]
fn optimize_reports_the_optimum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adi(&["optimize"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["cost"].as_f64().unwrap() - 3.5492595860809693).abs() <= 1e-6);
    assert!((v["tau0"].as_f64().unwrap() - 1.6469768608776936).abs() <= 1e-6);
    assert_eq!(v["solution"]["polished"], true);
    // nothing is written without --out
    assert!(files(tmp.path()).is_empty());
}

#[test]
fn angle_bounds_report_the_window() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adi(&["angle-bounds"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["theta_lo"], 0.52);
    assert_eq!(v["theta_hi"], 1.148);
    assert!((v["margins"]["lo"].as_f64().unwrap() - 3.2e-4).abs() < 5e-5);
    assert!((v["margins"]["hi"].as_f64().unwrap() - 0.00258).abs() < 1e-4);
}

#[test]
fn lower_bound_sweep_writes_the_figure_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adi(&["lower-bound", "--grid", "20", "--k", "200", "--out", "lb"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["strictly_decreasing"], true);
    let dir = tmp.path().join("lb");
    let csv = fs::read_to_string(dir.join("lower_bound.csv")).unwrap();
    assert!(csv.starts_with("theta,k,objective,composed_bound,kkt_residual\n"));
    assert_eq!(csv.lines().count(), 21);
    assert!(fs::read_to_string(dir.join("lower_bound.svg")).unwrap().contains("3.551"));
}

#[test]
fn format_flag_selects_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adi(&["sweep-feasibility", "--grid", "20", "--out", "f", "--format", "json"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<_> = files(&tmp.path().join("f")).into_iter().map(|f| f.0).collect();
    assert_eq!(names, vec!["sweep_feasibility.json".to_string()]);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let a = adi(&["sweep-feasibility", "--grid", "100", "--out", dir], tmp.path());
        let b = adi(&["sweep-cost", "--grid", "50", "--levels", "2", "--out", dir], tmp.path());
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(b.status.code(), Some(0));
        (a.stdout, b.stdout, files(&tmp.path().join(dir)))
    };
    let first = run("a");
    let second = run("b");
    assert_eq!(first, second);
    assert!(first.2.iter().any(|f| f.0 == "sweep_feasibility.csv"));
    assert!(first.2.iter().any(|f| f.0 == "sweep_cost_level1.svg"));

    let v1 = adi(&["verify", "--seed", "7", "--samples", "20000"], tmp.path());
    let v2 = adi(&["verify", "--seed", "7", "--samples", "20000"], tmp.path());
    assert_eq!(v1.status.code(), Some(0), "{}", String::from_utf8_lossy(&v1.stdout));
    assert_eq!(v1.stdout, v2.stdout);
}

#[test]
fn converge_reports_first_order_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adi(&["converge"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for row in v["rows"].as_array().unwrap().iter().skip(1) {
        for key in ["ratio_psi", "ratio_tau"] {
            let r = row[key].as_f64().unwrap();
            assert!((1.6..=2.4).contains(&r), "{key} = {r}");
        }
    }
}
