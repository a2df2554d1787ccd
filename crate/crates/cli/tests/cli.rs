use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn refract(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refract")).args(args).output().expect("binary runs")
}

fn analyze(file: &str, extra: &[&str]) -> Output {
    let path = fixture(file);
    let mut args = vec!["analyze", path.to_str().unwrap(), "--entry", "Main.main"];
    args.extend_from_slice(extra);
    refract(&args)
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn golden_report() {
    let out = analyze("activities.ir", &["--mode", "ripple", "--format", "json"]);
    assert!(out.status.success());
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/activities.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &out.stdout).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).expect("golden file; regenerate with UPDATE_GOLDEN=1");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn report_shape() {
    let v = json(&analyze("activities.ir", &[]));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["mode"], "ripple");
    assert_eq!(v["digest"].as_str().unwrap().len(), 64);
    assert!(v.get("points_to").is_none() && v.get("taint").is_none());
    let ni: Vec<&serde_json::Value> =
        v["reflection_sites"].as_array().unwrap().iter().filter(|s| s["kind"] == "newInstance").collect();
    assert_eq!(ni.len(), 1);
    assert_eq!(ni[0]["targets"].as_array().unwrap().len(), 5);
    assert_eq!(ni[0]["status"], "resolved");

    let v = json(&analyze("activities.ir", &["--dump-pts"]));
    assert!(v["points_to"].as_object().is_some_and(|m| !m.is_empty()));
}

#[test]
fn logger_leaks() {
    let cfg = fixture("log.taint");
    let v = json(&analyze("logger.ir", &["--taint-config", cfg.to_str().unwrap()]));
    assert_eq!(v["taint"]["leaks"].as_array().unwrap().len(), 12);
    let v = json(&analyze("logger.ir", &["--taint-config", cfg.to_str().unwrap(), "--mode", "strinf"]));
    assert_eq!(v["taint"]["leaks"].as_array().unwrap().len(), 0);
}

#[test]
fn mode_diffs() {
    let v = json(&analyze("activities.ir", &["--diff", "strinf:ripple"]));
    let added: usize = v["sites"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["kind"] == "newInstance")
        .map(|s| s["targets_only_in_b"].as_array().unwrap().len())
        .sum();
    assert_eq!(added, 5);

    let v = json(&analyze("telephony.ir", &["--diff", "strinf:ripple"]));
    let targets: Vec<&str> = v["sites"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["kind"] == "invoke")
        .flat_map(|s| s["targets_only_in_b"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()))
        .collect();
    assert_eq!(targets, ["android.telephony.TelephonyManager.getSubscriberId()"]);
}

#[test]
fn reflection_free_diff_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plain.ir");
    std::fs::write(&path, "class A {\n}\nclass Main {\n  method static main() : void {\n    var a : A\n    a = new A\n  }\n}\n").unwrap();
    let out = refract(&["analyze", path.to_str().unwrap(), "--entry", "Main.main", "--diff", "strinf:ripple"]);
    let v = json(&out);
    assert_eq!(v["sites"].as_array().unwrap().len(), 0);
    assert_eq!(v["other_edges_only_in_b"].as_array().unwrap().len(), 0);
    let out = refract(&["analyze", path.to_str().unwrap(), "--entry", "Main.main", "--diff", "strinf:ripple", "--format", "text"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("no differences"));
}

#[test]
fn text_and_dot_formats() {
    let out = analyze("telephony.ir", &["--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("getSubscriberId()") && text.contains("C3-InvRecv"), "{text}");
    let out = analyze("telephony.ir", &["--format", "dot"]);
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph callgraph {") && dot.contains("style=dashed"), "{dot}");
}

#[test]
fn exit_codes() {
    let out = analyze("activities.ir", &["--mode", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage: refract analyze"));

    let out = analyze("activities.ir", &["--diff", "strinf-ripple"]);
    assert_eq!(out.status.code(), Some(2));

    let out = refract(&["analyze", fixture("activities.ir").to_str().unwrap(), "--entry", "Nope.main"]);
    assert_eq!(out.status.code(), Some(2));

    let out = analyze("missing.ir", &[]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ir");
    std::fs::write(&bad, "class A extends A {\n}\n").unwrap();
    let out = refract(&["analyze", bad.to_str().unwrap(), "--entry", "A.main"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty() && out.stdout.is_empty());

    let cfg = dir.path().join("bad.taint");
    std::fs::write(&cfg, "source Nowhere.m\n").unwrap();
    let out = analyze("logger.ir", &["--taint-config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = refract(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = analyze("media.ir", &["--dump-pts"]).stdout;
    let b = analyze("media.ir", &["--dump-pts"]).stdout;
    assert_eq!(a, b);
}
