use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lightcone")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Field-by-field check of the report layout, independent of the library types.
fn check_report_schema(v: &Value) {
    for key in ["config", "points", "aggregate", "version", "timing_ms"] {
        assert!(v.get(key).is_some(), "missing top-level field {key}");
    }
    assert!(v["version"].is_string());
    assert!(v["timing_ms"].is_u64());
    let points = v["points"].as_array().expect("points array");
    assert!(!points.is_empty());
    for p in points {
        assert!(p["coords"].as_array().unwrap().iter().all(Value::is_f64));
        for key in ["s", "case", "dim_delta", "delta", "error"] {
            assert!(p.get(key).is_some(), "point lacks {key}");
        }
        assert!(p["flat_point"].is_boolean());
        let res = &p["residuals"];
        for key in ["flat", "sff_radial", "alpha1_sym", "delta_orth"] {
            assert!(res[key].is_f64(), "residual {key} missing");
        }
        if p["error"].is_null() && !p["flat_point"].as_bool().unwrap() {
            assert!(p["s"].is_u64());
            assert!(["NONDEG_L", "DEG_L"].contains(&p["case"].as_str().unwrap()));
        }
    }
    let agg = &v["aggregate"];
    let class = agg["classification"].as_str().unwrap();
    assert!(["CASE_I_REAL_KAEHLER", "CASE_II_COMPOSITION", "MINIMAL_S4", "MIXED", "UNDETERMINED"].contains(&class));
    assert!(agg["counts"].is_object());
    assert!(agg["max_residuals"].is_object());
    assert!(agg.get("delta_variance").is_some());
}

#[test]
fn gallery_list_prints_ids() {
    let o = bin(&["gallery", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for id in ["catenoid-cyl-n2", "inv-catenoid-cyl-n2", "product-catenoid-n5", "holo-graph-sq-n5", "z-squared-annulus"] {
        assert!(out.lines().any(|l| l == id), "{id} not listed");
    }
}

#[test]
fn gallery_without_flags_is_usage_error() {
    assert_eq!(bin(&["gallery"]).status.code(), Some(2));
    assert_eq!(bin(&["gallery", "--show", "torus"]).status.code(), Some(2));
}

#[test]
fn gallery_show_round_trips_through_inline_config() {
    let o = bin(&["gallery", "--show", "catenoid-cyl-n4"]);
    assert_eq!(o.status.code(), Some(0));
    let example: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("r.json");
    let config = serde_json::json!({ "inline": example, "grid": 2, "max_points": 16 });
    std::fs::write(&cfg, config.to_string()).unwrap();
    let o = bin(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    check_report_schema(&report);
    assert_eq!(report["aggregate"]["classification"], "CASE_I_REAL_KAEHLER");
}

#[test]
fn verify_psi_succeeds() {
    let o = bin(&["verify", "--suite", "psi"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["metrics"]["psi_null"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let o = bin(&["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("roundtrip"));
}

#[test]
fn analyze_writes_schema_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = bin(&[
        "analyze",
        "--example",
        "inv-catenoid-cyl-n4",
        "--grid",
        "3",
        "--max-points",
        "40",
        "--tol-var",
        "1e-5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    check_report_schema(&report);
    assert_eq!(report["points"].as_array().unwrap().len(), 40);
    assert_eq!(report["config"]["tolerances"]["var"], 1e-5);
    assert_eq!(report["aggregate"]["classification"], "CASE_I_REAL_KAEHLER");
}

#[test]
fn analyze_is_deterministic_apart_from_timing() {
    let run = || {
        let o = bin(&["analyze", "--example", "catenoid-cyl", "--n", "4", "--max-points", "12", "--seed", "5"]);
        assert_eq!(o.status.code(), Some(0));
        let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["timing_ms"] = Value::Null;
        v.to_string()
    };
    assert_eq!(run(), run());
}

#[test]
fn analyze_usage_errors() {
    assert_eq!(bin(&["analyze"]).status.code(), Some(2));
    let o = bin(&["analyze", "--example", "catenoid-cyl-n4", "--grid", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_points"));
    assert_eq!(bin(&["analyze", "--example", "no-such-thing"]).status.code(), Some(2));
    assert_eq!(bin(&["analyze", "--example", "catenoid-cyl-n4", "--tol-flat", "-1"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn congruence_negative_control_and_inversion() {
    let o = bin(&["congruence", "--left", "identity-annulus", "--right", "z-squared-annulus"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["defect"].as_f64().unwrap() >= 0.1);
    let o = bin(&["congruence", "--left", "catenoid-cyl-n2", "--right", "inv-catenoid-cyl-n2"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["defect"].as_f64().unwrap() <= 1e-6);
    let o = bin(&["congruence", "--left", "catenoid-cyl-n2", "--right", "enneper-cyl-n2"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["error"], "METRIC_MISMATCH");
}

#[test]
fn library_entry_point_matches_binary() {
    assert_eq!(lightcone_cli::run(["lightcone", "gallery", "--list"]), 0);
    assert_eq!(lightcone_cli::run(["lightcone", "verify", "--suite", "x"]), 2);
    assert_eq!(lightcone_cli::run(["lightcone", "--help"]), 0);
}
