use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rppg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rppg"))
        .current_dir(dir)
        .env_remove("RPPG_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = rppg(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--duration", "20", "--size", "32", "--hr", "84", "--out", "subj"];
    args.extend_from_slice(extra);
    ok(dir, &args);
}

#[test]
fn synth_then_extract_recovers_rate() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    for f in ["manifest.toml", "ppg.csv", "trace.csv", "landmarks.txt", "synth.json"] {
        assert!(tmp.path().join("subj").join(f).is_file(), "{f}");
    }
    for m in ["green", "chrom", "pos", "omit"] {
        let v = ok(
            tmp.path(),
            &["extract", "--frames", "subj/frames", "--method", m, "--gt", "subj/ppg.csv", "--out", m],
        );
        assert!(v["mae"].as_f64().unwrap() < 1.0, "{m}: {v}");
        let side: Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join(m).join("extract.json")).unwrap())
                .unwrap();
        assert_eq!(side["schema_version"], 1);
        assert_eq!(side["config"]["method"], m);
        let hr = std::fs::read_to_string(tmp.path().join(m).join("hr.csv")).unwrap();
        assert!(hr.starts_with("t_start,hr_bpm"));
    }
}

#[test]
fn degrade_drop_then_reconstruct() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &["--texture", "24", "--trace-only"]);
    ok(
        tmp.path(),
        &["degrade", "--trace", "subj/trace.csv", "--drop", "0.5", "--seed", "4", "--out", "deg"],
    );
    let manifest = std::fs::read_to_string(tmp.path().join("deg/drop_manifest.csv")).unwrap();
    assert_eq!(manifest.lines().filter(|l| !l.starts_with('#')).count(), 301);
    let base = ["extract", "--trace", "deg/trace.csv", "--drop-manifest", "deg/drop_manifest.csv", "--gt", "subj/ppg.csv"];
    let s2 = ok(tmp.path(), &[&base[..], &["--mitigate", "s2", "--out", "s2"]].concat());
    assert!(s2["mae"].as_f64().unwrap() < 1.0, "{s2}");
    assert_eq!(s2["fs"], 30.0);
    let s1 = ok(tmp.path(), &[&base[..], &["--mitigate", "s1", "--out", "s1"]].concat());
    assert_eq!(s1["missing_windows"], 0);
    assert!(s1["mae"].as_f64().unwrap() >= s2["mae"].as_f64().unwrap(), "{s1} vs {s2}");
}

#[test]
fn spatial_degradation_and_denoise() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &["--texture", "24"]);
    let v = ok(
        tmp.path(),
        &[
            "degrade", "--frames", "subj/frames", "--landmarks", "subj/landmarks.txt",
            "--color-depth", "6", "--occlude", "sunglasses", "--out", "deg",
        ],
    );
    assert_eq!(v["frames"], 600);
    assert!(tmp.path().join("deg/landmarks.txt").is_file());
    let v = ok(
        tmp.path(),
        &[
            "extract", "--frames", "deg/frames", "--method", "pos", "--denoise", "tvi",
            "--signal-denoise", "tvs", "--gt", "subj/ppg.csv", "--out", "ex",
        ],
    );
    assert!(v["mae"].as_f64().unwrap() < 1.0, "{v}");

    let v = ok(
        tmp.path(),
        &[
            "mitigate", "--frames", "subj/frames", "--landmarks", "subj/landmarks.txt",
            "--skin-only", "facemask", "--out", "masked",
        ],
    );
    assert_eq!(v["frames"], 600);
    let v = ok(tmp.path(), &["mitigate", "--bvp", "ex/bvp.csv", "--signal-denoise", "tvs", "--out", "sig"]);
    assert_eq!(v["missing_windows"], 0);
}

const CONFIG: &str = r#"
seeds = [3, 5]
methods = ["chrom", "pos"]

[[datasets]]
manifest = "subj/manifest.toml"

[[degradations]]
kind = "noise"
variance = 0.001

[[degradations]]
kind = "drop"
fraction = 0.2

[[mitigations]]

[[mitigations]]
drop = "s2"
"#;

#[test]
fn evaluate_is_reproducible_and_seed_overridable() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &["--trace-only"]);
    std::fs::write(tmp.path().join("eval.toml"), CONFIG).unwrap();
    let v = ok(tmp.path(), &["--jobs", "2", "evaluate", "--config", "eval.toml", "--out", "a"]);
    ok(tmp.path(), &["--jobs", "1", "evaluate", "--config", "eval.toml", "--out", "b"]);
    // Noise cannot touch a trace, so those cells fail and are recorded.
    assert_eq!(v["rows"], 2 + 2 * 2 * 2 * 2);
    assert_eq!(v["failed_cells"], 2 * 2 * 2);
    let read = |p: &str| std::fs::read(tmp.path().join(p)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.json"), read("b.json"));

    let csv = String::from_utf8(read("a.csv")).unwrap();
    assert!(csv.starts_with("# schema_version=1\n# config={"));
    let json: Value = serde_json::from_slice(&read("a.json")).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["config"]["seeds"], serde_json::json!([3, 5]));

    let out = Command::new(env!("CARGO_BIN_EXE_rppg"))
        .current_dir(tmp.path())
        .env("RPPG_SEED", "11")
        .args(["evaluate", "--config", "eval.toml", "--out", "c"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: Value = serde_json::from_slice(&read("c.json")).unwrap();
    assert_eq!(json["config"]["seeds"], serde_json::json!([11]));
    assert_eq!(json["rows"].as_array().unwrap().len(), 2 + 2 * 2 * 2);
}

fn error_record(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has a record");
    let v: Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(v["error"]["message"].as_str().is_some_and(|m| !m.is_empty()));
    v
}

#[test]
fn failures_emit_json_records() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rppg(tmp.path(), &["extract", "--frames", "missing", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"]["kind"], "io");

    let out = rppg(tmp.path(), &["extract", "--trace", "t.csv", "--method", "ica", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["kind"], "usage");

    std::fs::write(tmp.path().join("bad.toml"), "seeds = [1]\nbogus = 2\n").unwrap();
    let out = rppg(tmp.path(), &["evaluate", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"]["kind"], "parse");

    std::fs::write(tmp.path().join("ok.toml"), "seeds = [1]\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rppg"))
        .current_dir(tmp.path())
        .env("RPPG_SEED", "abc")
        .args(["evaluate", "--config", "ok.toml"])
        .output()
        .unwrap();
    assert_eq!(error_record(&out)["error"]["kind"], "invalid_input");
    assert!(!tmp.path().join("report.csv").exists());
}
