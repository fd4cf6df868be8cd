use std::path::Path;

use fastrates::{execute, Output};
use serde_json::{json, Value};

const PROBLEM: &str = r#"{
  "outcomes": ["a", "b", "c"],
  "probs": [0.5, 0.3, 0.2],
  "loss_matrix": [[0.1, 0.4, 0.9], [0.6, 0.2, 0.3], [0.8, 0.9, 0.1]],
  "labels": ["f0", "f1", "f2"]
}"#;

fn run(args: &[&str]) -> Output {
    execute(std::iter::once("fastrates").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(o: &Output) -> Value {
    serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {o:?}"))
}

#[test]
fn usage_errors_exit_64_and_help_exits_0() {
    assert_eq!(run(&["frobnicate"]).code, 64);
    assert_eq!(run(&["run", "--no-such-flag"]).code, 64);
    assert_eq!(run(&["run", "no-such-scenario"]).code, 64);
    let h = run(&["--help"]);
    assert_eq!(h.code, 0);
    assert!(h.stdout.contains("Usage"));
    assert_eq!(run(&["--version"]).code, 0);
}

#[test]
fn check_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", PROBLEM);
    let ok = run(&["check", "strong-central", "--problem", &p, "--eta", "1e-3"]);
    assert_eq!(ok.code, 0, "{ok:?}");
    let r = report(&ok);
    assert_eq!(r["summary"]["verdict"], "pass");
    assert_eq!(r["steps"][0]["result"]["condition"], "strong_central");

    let bad = run(&["check", "strong-central", "--problem", &p, "--eta", "50"]);
    assert_eq!(bad.code, 1);
    assert_eq!(run(&["check", "no-such-condition", "--problem", &p]).code, 64);
    assert_eq!(run(&["check", "witness", "--problem", &p, "--u", "1"]).code, 64);
    let tau = run(&[
        "check",
        "tau-witness",
        "--problem",
        &p,
        "--params",
        r#"{"tau": {"linear_max": {"u": 2.0}}, "c": 0.5}"#,
    ]);
    assert!(tau.code == 0 || tau.code == 1, "{tau:?}");
}

#[test]
fn malformed_documents_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", r#"{"probs": [0.5, 0.6], "loss_matrix": [[0, 1]], "outcomes": ["a","b"], "labels": ["f"]}"#);
    assert_eq!(run(&["check", "strong-central", "--problem", &p, "--eta", "1"]).code, 64);
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["grip", "--problem", missing.to_str().unwrap(), "--eta", "1"]).code, 64);
}

#[test]
fn grip_is_memoized_under_the_cache_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    std::env::set_var("FASTRATES_CACHE_DIR", &cache);
    let p = write(dir.path(), "p.json", PROBLEM);
    let first = run(&["grip", "--problem", &p, "--eta", "0.7"]);
    assert_eq!(first.code, 0, "{first:?}");
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let second = run(&["grip", "--problem", &p, "--eta", "0.7"]);
    assert_eq!(first.stdout, second.stdout);
    let r = report(&first);
    assert!(r["steps"][0]["result"]["central"]["max_moment"].as_f64().unwrap() <= 1.0 + 1e-6);
    let mini = run(&["grip", "--problem", &p, "--eta", "0.7", "--mini", "2"]);
    assert_eq!(mini.code, 0, "{mini:?}");
}

#[test]
fn divergences() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", PROBLEM);
    let kl = report(&run(&["divergence", "--kind", "kl", "--problem", &p, "--f", "1"]));
    assert!(kl["steps"][0]["result"]["value"].as_f64().unwrap() >= 0.0);
    let self_kl = report(&run(&["divergence", "--kind", "kl", "--problem", &p, "--f", "1", "--g", "1"]));
    assert!(self_kl["steps"][0]["result"]["value"].as_f64().unwrap().abs() < 1e-15);
    let m = run(&["divergence", "--kind", "misspec", "--problem", &p, "--f", "1", "--eta-bar", "0.5"]);
    assert_eq!(m.code, 0, "{m:?}");
    assert_eq!(run(&["divergence", "--kind", "renyi", "--problem", &p, "--f", "1"]).code, 64);
}

#[test]
fn verify_plans() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", PROBLEM);
    let plan = write(
        dir.path(),
        "plan.json",
        r#"{"problem": "p.json", "n": 3, "estimator": "bayes", "eta": 0.5}"#,
    );
    let o = run(&["verify", "zhang", "--plan", &plan]);
    assert_eq!(o.code, 0, "{o:?}");
    let r = report(&o);
    assert_eq!(r["steps"][0]["result"]["exact"], true);
    assert!(r["steps"][0]["result"]["moment_or_frequency"].as_f64().unwrap() <= 1.0 + 1e-10);
    assert_eq!(run(&["verify", "nonsense", "--plan", &plan]).code, 64);
    // η above the central rate: the metric premise is unmet, so the result is inconclusive.
    let hot = write(
        dir.path(),
        "hot.json",
        r#"{"problem": "p.json", "n": 2, "estimator": "bayes", "eta": 5.0, "eta_bar": 6.0}"#,
    );
    assert_eq!(run(&["verify", "metric", "--plan", &hot]).code, 2);
    let unknown = write(dir.path(), "u.json", r#"{"problem": "p.json", "n": 1, "estimator": "bayes", "eta": 1, "zzz": 1}"#);
    assert_eq!(run(&["verify", "zhang", "--plan", &unknown]).code, 64);
}

#[test]
fn estimate_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", PROBLEM);
    let cfg = write(
        dir.path(),
        "e.json",
        r#"{"problem": "p.json", "eta": 1.0, "n": 20, "estimator": "twopart", "seed": 3, "replicates": 50}"#,
    );
    let e = run(&["estimate", "--config", &cfg]);
    assert_eq!(e.code, 0, "{e:?}");
    assert_eq!(report(&e)["steps"][0]["result"]["output"]["sample"].as_array().unwrap().len(), 20);

    let s = run(&["sweep", "--param", "eta", "--grid", "0.1,0.5,1,2", "--config", &cfg, "--format", "csv"]);
    assert_eq!(s.code, 0, "{s:?}");
    let lines: Vec<&str> = s.stdout.lines().collect();
    assert_eq!(
        lines[0],
        "param,value,eta,n,eps,replicates,expected_ic,expected_ic_se,expected_excess_risk,expected_excess_risk_se,central_holds,v_central_holds,error"
    );
    assert_eq!(lines.len(), 5);

    let n = run(&["sweep", "--param", "n", "--grid", "5,2.5,10", "--config", &cfg, "--format", "csv"]);
    assert_eq!(n.code, 0);
    let rows: Vec<&str> = n.stdout.lines().collect();
    assert!(rows[2].ends_with("not a positive integer"), "{}", rows[2]);
    assert!(rows[3].ends_with(','));

    assert_eq!(run(&["sweep", "--param", "eta", "--grid", "", "--config", &cfg]).code, 64);
    assert_eq!(run(&["sweep", "--param", "eta", "--config", &cfg]).code, 64);
}

#[test]
fn experiment_config_operations() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", PROBLEM);
    let cfg = json!({
        "scenario": {"problem": "p.json"},
        "seed": 9,
        "operations": [
            {"op": "central_eta"},
            {"op": "check", "condition": "strong-central", "params": {"eta": 1e-3}},
            {"op": "check", "condition": "strong-central", "params": {"eta": 50.0}, "expect": false},
            {"op": "grip", "params": {"eta": 0.5}},
            {"op": "ic_check", "params": {"eta": 1.0, "n": 4}},
            {"op": "estimate", "params": {"eta": 1.0, "n": 5, "estimator": "erm"}},
            {"op": "verify", "inequality": "zhang", "params": {"n": 2, "estimator": "erm", "eta": 1.0}}
        ]
    });
    let path = write(dir.path(), "x.json", &cfg.to_string());
    let out = dir.path().join("out");
    let o = run(&["run", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{o:?}");
    let r = report(&o);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["steps"].as_array().unwrap().len(), 7);
    assert_eq!(std::fs::read_to_string(out.join("report.json")).unwrap(), o.stdout);

    let bad = json!({"scenario": {"problem": "p.json"}, "operations": [], "surprise": true});
    let bad_path = write(dir.path(), "bad.json", &bad.to_string());
    assert_eq!(run(&["run", "--config", &bad_path]).code, 64);

    let builtin = json!({"scenario": "gaussian-threshold", "params": {"sigma_ratio": 4.0}});
    let b = write(dir.path(), "b.json", &builtin.to_string());
    let o = run(&["run", "--config", &b, "--format", "csv"]);
    assert_eq!(o.code, 0, "{o:?}");
    assert!(o.stdout.starts_with("step,verdict,expected,key,value"));
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    let a = run(&["run", "no-bernstein-unbounded", "--seed", "5", "--threads", "1"]);
    let b = run(&["run", "no-bernstein-unbounded", "--seed", "5", "--threads", "4"]);
    let c = run(&["run", "no-bernstein-unbounded", "--seed", "5"]);
    assert_eq!(a.code, 0, "{a:?}");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(run(&["run", "zhang-exact", "--threads", "0"]).code, 64);
}
