//! End-to-end runs of the `parisian` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parisian"))
}

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_value(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("identity prints JSON")
}

#[test]
fn up_crossing_is_certain_without_lower_barrier_at_q_zero() {
    for m in ["bm.toml", "cl.toml"] {
        let o = run(bin().args(["identity", "--id", "xr.up", "--limit", "a_inf", "--q", "0", "--r", "1", "--b", "3", "--x", "0.5"])
            .arg("--model")
            .arg(model(m)));
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v = json_value(&o);
        assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-10, "{v}");
        assert_eq!(v["meaning"], "LaplaceTransform");
        assert!(!v["citation"].as_str().unwrap().is_empty());
    }
}

#[test]
fn identity_at_upper_barrier_is_one() {
    let o = run(bin()
        .args(["identity", "--id", "xr.up", "--q", "0.05", "--r", "1", "--a=-2", "--b", "3", "--x", "3"])
        .arg("--model")
        .arg(model("bm.toml")));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_value(&o)["value"].as_f64(), Some(1.0));
}

#[test]
fn perpetual_npv_at_q_zero_is_the_infinity_sentinel() {
    let o = run(bin()
        .args(["identity", "--id", "ytilde.div_singular", "--q", "0", "--r", "1", "--a", "-2", "--b", "3", "--x", "0.5"])
        .arg("--model")
        .arg(model("cl.toml")));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_value(&o)["value"], "inf");
}

#[test]
fn sweep_prints_one_row_per_step_and_flags_the_argmax() {
    let o = run(bin()
        .args(["sweep", "--id", "xr.dividends", "--param", "b", "--from", "0.5", "--to", "5", "--steps", "10"])
        .arg("--model")
        .arg(model("bm.toml")));
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["b", "value", "argmax", "error"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|r| &r[2] == "true").count(), 1);
}

#[test]
fn scale_prints_the_documented_columns() {
    let o = run(bin().args(["scale", "--q", "0.05", "--x-max", "1", "--step", "0.25"]).arg("--model").arg(model("cl.toml")));
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,W,Wp,Wbar,Wbarbar,Z,Zbar"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn unknown_identity_is_rejected_with_the_valid_ids() {
    let o = run(bin().args(["identity", "--id", "xr.nope", "--q", "0", "--x", "0"]).arg("--model").arg(model("bm.toml")));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("xr.nope") && err.contains("xr.dividends"), "{err}");
}

#[test]
fn malformed_model_file_is_rejected_with_its_location() {
    let dir = scratch_dir("malformed_model");
    let path = dir.join("bad.toml");
    std::fs::write(&path, "kind = \"bm\"\ndrift = 0.2\nsigma = \"one\"\n").unwrap();
    let o = run(bin()
        .args(["identity", "--id", "xr.up", "--q", "0", "--r", "1", "--a", "-2", "--b", "3", "--x", "0"])
        .arg("--model")
        .arg(&path));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("sigma"), "{err}");
}

#[test]
fn bad_flags_exit_with_code_one() {
    let o = run(bin().args(["simulate", "--process", "xr", "--functional", "up_exit", "--q", "0.05", "--a", "-2", "--b", "3", "--x", "0.5", "--dt", "0.5"])
        .arg("--model")
        .arg(model("bm.toml")));
    assert_eq!(o.status.code(), Some(1));
    let o = run(bin().arg("frobnicate"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn smoke_verify_is_deterministic() {
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = scratch_dir(&format!("verify_smoke_{k}"));
        let o = run(bin()
            .args(["verify", "--suite", "smoke", "--seed", "7"])
            .arg("--model")
            .arg(model("bm.toml"))
            .arg("--out-dir")
            .arg(&dir));
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let files: Vec<Vec<u8>> = ["verify_checks.csv", "verify_limits.csv", "verify_report.json"]
            .iter()
            .map(|f| std::fs::read(dir.join(f)).unwrap())
            .collect();
        outputs.push((o.stdout, files));
    }
    assert_eq!(outputs[0], outputs[1]);
}
