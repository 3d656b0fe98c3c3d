use std::path::Path;
use std::process::Command;

use mirrorforge_cli::report::{Report, SuiteStatus};
use serde_json::{json, Value};

fn run(args: &[&str], cache: &Path, envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mirrorforge"));
    cmd.args(args).env_remove("MIRRORFORGE_ORDER").env("MIRRORFORGE_CACHE", cache);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().expect("exit status"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn cache_in(dir: &tempfile::TempDir) -> std::path::PathBuf {
    dir.path().join("wk-cache.json")
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("timing_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn series_dump_of_l() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["series", "--name", "l", "--order", "2"], &cache_in(&dir), &[]);
    assert_eq!(code, 0);
    let r: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(r.schema, "mirrorforge-report-v1");
    assert_eq!(r.data["coefficients"], json!(["1", "9", "162"]));
    let (_, csv, _) = run(&["series", "--name", "l", "--order", "2", "--format", "csv"], &cache_in(&dir), &[]);
    assert_eq!(csv, "power,coefficient\n0,1\n1,9\n2,162\n");
}

#[test]
fn named_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    for (suite, order) in [("pf", "50"), ("serre", "30")] {
        let (code, out, _) = run(&["verify", "--suite", suite, "--order", order], &cache_in(&dir), &[]);
        assert_eq!(code, 0, "{out}");
        let r: Report = serde_json::from_str(&out).unwrap();
        assert!(r.pass && r.suites[0].first_failure.is_none());
        assert_eq!(r.suites[0].identities[0].order, order.parse::<usize>().unwrap());
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache_in(&dir);
    let (code, _, err) = run(&["correlator", "--g", "9", "--n", "1"], &c, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("g_max"), "{err}");
    assert_eq!(run(&["frobnicate"], &c, &[]).0, 2);
    assert_eq!(run(&["verify", "--suite", "nope"], &c, &[]).0, 2);
    assert_eq!(run(&["correlator", "--g", "1", "--n", "1", "--deg", "1", "--pair", "psi:1"], &c, &[]).0, 2);
    assert_eq!(run(&["intersect", "--g", "0", "--psi", "0,0"], &c, &[]).0, 2);
    assert_eq!(run(&["hae", "--g", "0", "--n", "3"], &c, &[]).0, 2);
}

#[test]
fn low_order_reports_insufficient_order() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["verify", "--suite", "quasimod"], &cache_in(&dir), &[("MIRRORFORGE_ORDER", "5")]);
    assert_eq!(code, 2);
    let r: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(r.suites[0].status, SuiteStatus::InsufficientOrder);
    assert!(r.suites[0].first_failure.as_ref().unwrap().label.contains("insufficient order"));
}

#[test]
fn cache_cold_and_warm_agree() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache_in(&dir);
    let args = ["intersect", "--g", "2", "--psi", "1,1,1", "--kappa", "3"];
    let (code1, cold, _) = run(&args, &c, &[]);
    assert!(c.exists());
    let (code2, warm, _) = run(&args, &c, &[]);
    assert_eq!((code1, code2), (0, 0));
    let (a, b): (Value, Value) = (serde_json::from_str(&cold).unwrap(), serde_json::from_str(&warm).unwrap());
    assert_eq!(a["data"]["value"], b["data"]["value"]);
    assert_eq!(a["data"]["cache"]["status"], json!("missing"));
    assert!(b["data"]["cache"]["status"]["loaded"].as_u64().unwrap() > 0);

    let (code, out, _) = run(&["cache", "stats"], &c, &[]);
    assert_eq!(code, 0);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["data"]["schema"], json!("wk-cache-v1"));
    std::fs::write(&c, r#"{"schema":"wk-cache-v0","entries":[]}"#).unwrap();
    assert_eq!(run(&["cache", "stats"], &c, &[]).0, 2);
    assert_eq!(run(&["cache", "clear"], &c, &[]).0, 0);
    assert!(!c.exists());
}

#[test]
fn reruns_are_stable_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--suite", "identification"];
    let (_, first, _) = run(&args, &cache_in(&dir), &[]);
    let (_, second, _) = run(&args, &cache_in(&dir), &[]);
    let (mut a, mut b): (Value, Value) = (serde_json::from_str(&first).unwrap(), serde_json::from_str(&second).unwrap());
    strip_timing(&mut a);
    strip_timing(&mut b);
    assert_eq!(a, b);
    let r: Report = serde_json::from_str(&first).unwrap();
    let again: Report = serde_json::from_str(&r.emit(mirrorforge_cli::config::OutputFormat::Json)).unwrap();
    assert_eq!(again, r);
}

#[test]
fn correlator_and_fit_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache_in(&dir);
    let (code, out, _) = run(&["correlator", "--g", "1", "--ins", "H", "--order", "6", "--explain"], &c, &[]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let sym = &v["data"]["symbolic"];
    assert_eq!(sym["poly"], json!({ "X1^0*L^2": "-1/12", "X1^1*L^0": "-3/8" }));
    assert_eq!(sym["contributions"].as_array().unwrap().len(), 2);
    assert_eq!(v["data"]["series"][0], json!("-1/12"));

    let (code, out, _) = run(&["certify", "--g", "1", "--n", "1", "--order", "25"], &c, &[]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = run(&["hae", "--g", "1", "--n", "1", "--order", "20"], &c, &[]);
    assert_eq!(code, 0, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["suites"][0]["notes"]["convention_flags"]["loop_factor"], json!("1/2"));
}
