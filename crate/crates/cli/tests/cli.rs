use clap::Parser;
use measolv_cli::{execute, Cli};
use serde_json::Value;
use std::process::Command;

fn run(args: &[&str]) -> Value {
    let cli = Cli::try_parse_from(std::iter::once("measolv").chain(args.iter().copied())).unwrap();
    let (text, _) = execute(&cli).unwrap_or_else(|e| panic!("{args:?}: {}", e.message));
    serde_json::from_str(&text).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_measolv")).args(args).output().unwrap();
    out.status.code().unwrap()
}

fn finite(v: &Value) -> bool {
    v.as_f64().is_some_and(f64::is_finite)
}

#[test]
fn operator_certificates() {
    let g = run(&["operator", "catalog:gradient"]);
    assert_eq!(g["report"]["elliptic"], true);
    assert_eq!(g["report"]["canceling"], true);
    let l = run(&["operator", "catalog:laplacian", "--dim", "3"]);
    assert_eq!(l["report"]["elliptic"], true);
    assert_eq!(l["report"]["canceling"], false);
    assert_eq!(l["report"]["intersection_dim"], 1);
    // A false verdict is still a completed run.
    let p = run(&["operator", "catalog:partial1"]);
    assert_eq!(p["report"]["elliptic"], false);
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"N\": 2, \"m\": 1").unwrap();
    assert_eq!(exit_code(&["operator", bad.to_str().unwrap()]), 2);
    assert_eq!(exit_code(&["operator", "/nonexistent/op.json"]), 2);
    assert_eq!(exit_code(&["operator", "catalog:nonsense"]), 2);
    assert_eq!(exit_code(&["frobnicate"]), 2);
    assert_eq!(exit_code(&["verify", "hardy", "--ensemble", "0", "--resolution", "16"]), 2);
}

#[test]
fn non_elliptic_solve_exits_with_four() {
    assert_eq!(exit_code(&["solve", "catalog:partial1", "catalog:bump", "--resolution", "16"]), 4);
}

#[test]
fn catalog_documents_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let op_path = dir.path().join("grad.json");
    let mu_path = dir.path().join("bump.json");
    for (args, path) in [
        (vec!["catalog", "operator", "gradient"], &op_path),
        (vec!["catalog", "measure", "bump", "--resolution", "32"], &mu_path),
    ] {
        let mut a = args.clone();
        a.extend(["--out", path.to_str().unwrap()]);
        let cli = Cli::try_parse_from(std::iter::once("measolv").chain(a)).unwrap();
        let (text, out) = execute(&cli).unwrap();
        std::fs::write(out.unwrap(), text).unwrap();
    }
    let op = measolv::operator::parse_operator(&std::fs::read_to_string(&op_path).unwrap()).unwrap();
    assert_eq!(op, measolv::operator::catalog::gradient(2));
    let mu = measolv::measures::parse_measure(&std::fs::read_to_string(&mu_path).unwrap()).unwrap();
    assert_eq!(mu.grid().unwrap().resolution(), &[32, 32]);

    // File inputs are digested.
    let doc = run(&["solve", op_path.to_str().unwrap(), mu_path.to_str().unwrap()]);
    let inputs = doc["manifest"]["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn measure_reports() {
    let ex = run(&["measure", "catalog:example", "--resolution", "64"]);
    let reg = &ex["report"]["regularity"];
    for k in ["origin_ahlfors", "wolff_bracket"] {
        assert!(finite(&reg[k]["value"]), "{k}");
        assert_eq!(reg[k]["divergent"], false, "{k}");
    }
    let d = run(&["measure", "catalog:dirac"]);
    assert_eq!(d["report"]["regularity"]["ahlfors"]["divergent"], true);
    assert_eq!(d["report"]["regularity"]["origin_ahlfors"]["divergent"], true);
    let z = run(&["measure", "catalog:zero", "--resolution", "16"]);
    assert_eq!(z["report"]["regularity"]["ahlfors"]["value"].as_f64(), Some(0.0));
    assert_eq!(z["report"]["regularity"]["wolff_bracket"]["value"].as_f64(), Some(0.0));
}

#[test]
fn gradient_solve_with_mean_adjustment() {
    let s = run(&["solve", "catalog:gradient", "catalog:bump", "--resolution", "64", "--ensemble", "20"]);
    let r = &s["report"];
    assert!(r["weak_residual"].as_f64().unwrap() <= 1e-8);
    let mean = r["mean_adjustment"][0][0].as_f64().unwrap();
    assert!(mean > 0.0);
    assert!(r["lp_norms"].as_array().unwrap().iter().all(|n| finite(&n["value"])));
    assert_eq!(s["manifest"]["grid"]["resolution"], serde_json::json!([64, 64]));
}

#[test]
fn verify_hardy_and_hypothesis_failure() {
    let h = run(&["verify", "hardy", "--resolution", "64", "--ensemble", "30"]);
    assert_eq!(h["report"]["forward"]["pass"], true);
    assert_eq!(h["report"]["condition"]["divergent"], false);

    let f = run(&["verify", "fundamental-lemma", "--measure", "catalog:line", "--resolution", "32", "--ensemble", "6"]);
    let r = &f["report"];
    assert_eq!(r["hypotheses"]["met"], false);
    assert_eq!(r["inequality"]["pass"], false);
    let detail = r["inequality"]["violations"][0]["detail"].as_str().unwrap();
    assert!(detail.starts_with("hypotheses not met"), "{detail}");
}

#[test]
fn remaining_checks_complete() {
    for args in [
        vec!["verify", "moment", "--ensemble", "8", "--resolution", "32"],
        vec!["verify", "duality", "--ensemble", "8", "--resolution", "32"],
        vec!["verify", "trace", "--ensemble", "8", "--resolution", "32"],
        vec!["verify", "triviality", "--resolution", "32"],
        vec!["verify", "necessity", "--resolution", "32"],
    ] {
        let doc = run(&args);
        assert!(doc["report"].is_object(), "{args:?}");
    }
}

#[test]
fn identical_manifests_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let path = dir.path().join("report.json");
        let code = Command::new(env!("CARGO_BIN_EXE_measolv"))
            .args(["verify", "necessity", "--resolution", "32", "--seed", "7", "--out", path.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(code.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = |args: &[&str]| {
        let cli = Cli::try_parse_from(std::iter::once("measolv").chain(args.iter().copied())).unwrap();
        execute(&cli).unwrap().0
    };
    let a = ["verify", "hardy", "--resolution", "32", "--ensemble", "10", "--seed", "3"];
    assert_eq!(text(&a), text(&a));
    let b = ["verify", "hardy", "--resolution", "32", "--ensemble", "10", "--seed", "4"];
    assert_ne!(text(&a), text(&b));
}
