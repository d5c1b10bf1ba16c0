use std::path::Path;
use std::process::{Command, Output};

use partmotion::cli::{run, EXIT_DATA, EXIT_OK, EXIT_SERVICE, EXIT_USAGE};
use partmotion::synth::MANIFEST_FILE;

fn bin(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_partmotion"));
    c.args(args);
    c
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn in_process(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("partmotion").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn extract_with_fallback_prints_parts() {
    let (c, out, _) = in_process(&["extract", "--text", "a person kicks a ball with the right foot"]);
    assert_eq!(c, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["parts"], serde_json::json!(["right leg"]));
    let (c, out, _) = in_process(&["extract", "--text", "a person stands still"]);
    assert_eq!(c, EXIT_OK);
    assert!(out.contains("\"none\""));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(in_process(&[]).0, EXIT_USAGE);
    assert_eq!(in_process(&["extract"]).0, EXIT_USAGE);
    assert_eq!(in_process(&["sample", "--text", "x"]).0, EXIT_USAGE);
    assert_eq!(in_process(&["extract", "--text", "x", "--client", "fixture"]).0, EXIT_USAGE);
    assert_eq!(in_process(&["--version"]).0, EXIT_OK);
}

#[test]
fn http_client_failures_exit_three() {
    let o = bin(&["extract", "--text", "x", "--client", "http", "--api-key-env", "PM_TEST_KEY_UNSET"])
        .env_remove("PM_TEST_KEY_UNSET")
        .output()
        .unwrap();
    assert_eq!(code(&o), EXIT_SERVICE);
    let o = bin(&[
        "extract",
        "--text",
        "a person waves the left hand",
        "--client",
        "http",
        "--api-key-env",
        "PM_TEST_KEY",
        "--endpoint",
        "http://127.0.0.1:1/v1/chat/completions",
    ])
    .env("PM_TEST_KEY", "k")
    .output()
    .unwrap();
    assert_eq!(code(&o), EXIT_SERVICE, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdicts"], serde_json::json!(["transport-failed", "transport-failed", "transport-failed"]));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    let (c, _, err) = in_process(&["sample", "--checkpoint", p(&missing), "--text", "x", "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(c, EXIT_DATA);
    assert!(err.starts_with("error:"));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[train]\nlr = -3.0\n").unwrap();
    assert_eq!(in_process(&["train", "--config", p(&bad), "--out", p(&missing)]).0, EXIT_DATA);
    assert_eq!(in_process(&["export", "--motion", p(&missing), "--out", p(&bad)]).0, EXIT_DATA);
    assert_eq!(in_process(&["eval", "--ground-truth", "--dataset", p(&missing)]).0, EXIT_DATA);
}

#[test]
fn synth_train_sample_eval_export() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ckpt = dir.path().join("ckpt");
    let manifest = data.join(MANIFEST_FILE);
    let (c, out, err) = in_process(&["synth", "--out", p(&data), "--count", "4", "--frames", "12", "--seed", "3"]);
    assert_eq!(c, EXIT_OK, "{err}");
    assert!(out.contains("wrote 24 records"), "{out}");

    let (c, _, err) = in_process(&["extract", "--manifest", p(&manifest)]);
    assert_eq!(c, EXIT_OK, "{err}");

    let train = [
        "train", "--dataset", p(&manifest), "--out", p(&ckpt), "--steps", "2", "--batch-size", "2", "--t-steps", "3",
        "--width", "16", "--depth", "1",
    ];
    let (c, _, err) = in_process(&train);
    assert_eq!(c, EXIT_OK, "{err}");
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ckpt.join("training_log.json")).unwrap()).unwrap();
    assert_eq!(log["stage1"].as_array().unwrap().len(), 2);

    let sample = |name: &str, seed: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let mut args = vec!["sample", "--checkpoint", p(&ckpt), "--text", "a person waves the left hand", "--seed", seed, "--out", p(&path)];
        args.extend_from_slice(extra);
        let o = bin(&args).output().unwrap();
        assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(&path).unwrap()
    };
    let trace = dir.path().join("trace.json");
    let a = sample("a.json", "4", &["--trace", p(&trace)]);
    assert_eq!(a, sample("b.json", "4", &[]));
    assert_ne!(a, sample("c.json", "5", &[]));
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t["parts"], serde_json::json!(["left arm"]));

    let joints = dir.path().join("joints.jsonl");
    let (c, _, err) = in_process(&["export", "--motion", p(&dir.path().join("a.json")), "--out", p(&joints)]);
    assert_eq!(c, EXIT_OK, "{err}");
    let lines: Vec<String> = std::fs::read_to_string(&joints).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 16);
    let first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(first["joints"].as_array().unwrap().len(), 22);

    let report = dir.path().join("gt.json");
    let (c, out, err) = in_process(&["eval", "--ground-truth", "--dataset", p(&manifest), "--out", p(&report), "--pool-size", "4"]);
    assert_eq!(c, EXIT_OK, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let mpjpe = v["metrics"].as_array().unwrap().iter().find(|e| e["name"] == "mpjpe").unwrap()["value"].as_f64().unwrap();
    assert_eq!(mpjpe, 0.0);

    let (c, _, err) = in_process(&["eval", "--checkpoint", p(&ckpt), "--dataset", p(&manifest), "--pool-size", "4"]);
    assert_eq!(c, EXIT_OK, "{err}");
}
