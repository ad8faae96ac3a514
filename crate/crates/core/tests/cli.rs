use std::process::Command;

use serde_json::Value;

fn symlog(args: &str, seed_env: Option<&str>) -> (i32, Value) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_symlog"));
    cmd.args(args.split_whitespace()).env_remove("SYMLOG_SEED");
    if let Some(seed) = seed_env {
        cmd.env("SYMLOG_SEED", seed);
    }
    let out = cmd.output().unwrap();
    let doc: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)));
    (out.status.code().unwrap(), doc)
}

#[test]
fn verify_reports_the_log_squared_margin() {
    let (code, doc) = symlog("verify --n 3 --a 1,1,1 --b 0.5,1,2 --f log2", None);
    assert_eq!(code, 0);
    let margin = doc["result"]["verdict"]["margin"].as_f64().unwrap();
    assert!((margin - 2.0 * 2f64.ln().powi(2)).abs() < 1e-12);
    assert_eq!(doc["exit_code"], 0);
}

#[test]
fn incomparable_pair_is_an_operational_failure() {
    let (code, doc) = symlog("verify --n 2 --a 1,3 --b 1,2 --f log2", None);
    assert_eq!(code, 2);
    assert_eq!(doc["error"]["kind"], "not-dominating");
    assert_eq!(doc["config"]["a"], serde_json::json!([1.0, 3.0]));
}

#[test]
fn counterexample_is_requested_evidence() {
    let (code, doc) = symlog("counterexample --f log2 --n 2 --k 0", None);
    assert_eq!(code, 1);
    assert!(doc["result"]["counterexample"]["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let (code, doc) = symlog("fuzz --f log2 --n 3 --S 1,2 --trials 20", Some("17"));
    assert_eq!(code, 0);
    assert_eq!(doc["config"]["seed"], 17);
    assert_eq!(doc["result"]["seed"], 17);
    let (_, explicit) = symlog("fuzz --f log2 --n 3 --S 1,2 --trials 20 --seed 17", Some("3"));
    assert_eq!(explicit["result"], doc["result"]);
}

#[test]
fn config_echo_reproduces_defaults() {
    let (_, doc) = symlog("fuzz --f pow:0.5 --n 2 --S 1 --trials 5", None);
    let config = &doc["config"];
    for key in ["seed", "tolerance", "scale_lo", "scale_hi", "sampler", "jobs", "trials"] {
        assert!(!config[key].is_null(), "missing {key}");
    }
}

#[test]
fn failures_still_print_json() {
    let (code, doc) = symlog("verify --a 1,2", None);
    assert_eq!(code, 2);
    assert_eq!(doc["error"]["kind"], "usage");
    let (code, _) = symlog("curve --a 1,3 --b 1,2", None);
    assert_eq!(code, 2);
}

#[test]
fn curve_writes_plot_ready_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let args = format!("curve --a 1,1 --b 0.5,2 --csv {}", path.display());
    let (code, doc) = symlog(&args, None);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["audit"]["passed"], true);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("t,y_1,y_2,E_0,E_1,B_0,B_1,eta"));
    assert!(text.lines().count() > 2);
}

#[test]
fn criterion_certifies_and_flags() {
    let (code, _) = symlog("criterion --f log2 --n 4 --S 1,2,3", None);
    assert_eq!(code, 0);
    let (code, doc) = symlog("criterion --f log2 --n 4 --S 0,1", None);
    assert_eq!(code, 1);
    assert!(doc["result"].to_string().contains("PositiveFound"));
}

#[test]
fn iff_relies_on_the_criterion_when_no_sampler_reaches_s() {
    let (code, doc) = symlog("iff --f pow:-0.5 --n 3 --S 0,1 --trials 50", None);
    assert_eq!(code, 1);
    assert_eq!(doc["result"]["agree"], true);
    assert_eq!(doc["result"]["fuzz_skipped"], true);
    assert!(!doc["result"]["counterexamples"].as_array().unwrap().is_empty());
}
