use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/small.toml");

fn qreadout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qreadout"))
        .args(args)
        .args(["--log-level", "warn"])
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = qreadout(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).unwrap()
}

fn generate_small(root: &Path, name: &str) -> PathBuf {
    let ds = root.join(name);
    ok(&["generate", "--config", SMALL, "--out", s(&ds)]);
    ds
}

#[test]
fn generate_writes_layout_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = generate_small(tmp.path(), "a");
    let b = generate_small(tmp.path(), "b");
    for sub in ["models", "reports", "logs"] {
        assert!(a.join(sub).is_dir(), "{sub}");
    }
    assert_eq!(fs::read(a.join("samples.bin")).unwrap(), fs::read(b.join("samples.bin")).unwrap());
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    let described = read_json(a.join("reports/dataset.json"));
    assert_eq!(described["shots"], 4 * 400);
    assert_eq!(described["seed"], 3);
    assert_eq!(described["config_sha256"].as_str().unwrap().len(), 64);
    let resolved = fs::read_to_string(a.join("resolved-config.toml")).unwrap();
    assert!(resolved.contains("seed = 3"));
    // 4 basis states x 400 shots x 1 trace x 2 channels x 200 bins x 4 bytes.
    assert_eq!(fs::metadata(a.join("samples.bin")).unwrap().len(), 4 * 400 * 2 * 200 * 4);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let a = generate_small(tmp.path(), "a");
    let c = tmp.path().join("c");
    ok(&["generate", "--config", SMALL, "--seed", "99", "--out", s(&c)]);
    assert_ne!(fs::read(a.join("samples.bin")).unwrap(), fs::read(c.join("samples.bin")).unwrap());
    assert_eq!(read_json(c.join("reports/dataset.json"))["seed"], 99);
    assert!(fs::read_to_string(c.join("resolved-config.toml")).unwrap().contains("seed = 99"));
}

#[test]
fn missing_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = qreadout(&["generate", "--config", "/nonexistent/config.toml", "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FileNotFound"));
    assert!(!out_dir.exists());
}

#[test]
fn train_evaluate_and_truncation_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate_small(tmp.path(), "ds");
    let before: Vec<Vec<u8>> = ["samples.bin", "manifest.json"].iter().map(|f| fs::read(ds.join(f)).unwrap()).collect();

    let train = tmp.path().join("train");
    ok(&[
        "train", "--config", SMALL, "--dataset", s(&ds), "--kind", "mf_rmf_nn", "--kind", "raw_fnn", "--out", s(&train),
    ]);
    assert!(train.join("models/mf_rmf_nn/manifest.json").is_file());
    assert!(train.join("models/raw_fnn/network.json").is_file());
    let summary = read_json(train.join("reports/train-mf_rmf_nn.json"));
    assert_eq!(summary["kind"], "mf_rmf_nn");

    let eval = tmp.path().join("eval");
    let model = train.join("models/mf_rmf_nn");
    ok(&[
        "evaluate", "--config", SMALL, "--dataset", s(&ds), "--pipeline", s(&model), "--quantize-bits", "16", "--out", s(&eval),
    ]);
    let report = read_json(eval.join("reports/evaluate-mf_rmf_nn-200.json"));
    let f = report["report"]["cumulative_accuracy"].as_f64().unwrap();
    assert!(f > 0.9 && f <= 1.0, "{f}");
    assert_eq!(report["seed"], 3);
    assert!(report["quantized"]["report"]["cumulative_accuracy"].is_f64());
    assert!(eval.join("reports/evaluate-mf_rmf_nn-200.csv").is_file());

    let truncated = tmp.path().join("eval-raw");
    let raw = train.join("models/raw_fnn");
    let out = qreadout(&[
        "evaluate", "--config", SMALL, "--dataset", s(&ds), "--pipeline", s(&raw), "--use-bins", "100", "--out", s(&truncated),
    ]);
    assert_eq!(out.status.code(), Some(19), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!truncated.exists(), "partial output left behind");

    let after: Vec<Vec<u8>> = ["samples.bin", "manifest.json"].iter().map(|f| fs::read(ds.join(f)).unwrap()).collect();
    assert_eq!(before, after, "input dataset modified");
}

#[test]
fn sweeps_and_labeling() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate_small(tmp.path(), "ds");
    let train = tmp.path().join("train");
    ok(&["train", "--config", SMALL, "--dataset", s(&ds), "--kind", "mf", "--out", s(&train)]);
    let model = train.join("models/mf");

    let sd = tmp.path().join("sd");
    ok(&[
        "sweep-duration", "--config", SMALL, "--dataset", s(&ds), "--pipeline", s(&model), "--durations", "50,100,200", "--out", s(&sd),
    ]);
    let sweep = read_json(sd.join("reports/sweep-duration-mf.json"));
    assert_eq!(sweep["rows"].as_array().unwrap().len(), 3);
    assert!(sweep["saturation_bins"].is_u64());

    let st = tmp.path().join("st");
    ok(&["sweep-train-size", "--config", SMALL, "--dataset", s(&ds), "--kind", "mf", "--out", s(&st)]);
    let rows = read_json(st.join("reports/sweep-train-size-mf.json"));
    let sizes: Vec<u64> = rows["rows"].as_array().unwrap().iter().map(|r| r["train_size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![200, 640]);

    let too_big = tmp.path().join("too-big");
    let out = qreadout(&[
        "sweep-train-size", "--config", SMALL, "--dataset", s(&ds), "--kind", "mf", "--sizes", "100000", "--out", s(&too_big),
    ]);
    assert_eq!(out.status.code(), Some(10));
    assert!(!too_big.exists());

    let lr = tmp.path().join("lr");
    ok(&["label-relax", "--config", SMALL, "--dataset", s(&ds), "--out", s(&lr)]);
    let labels = read_json(lr.join("reports/label-relax.json"));
    let qubits = labels["qubits"].as_array().unwrap();
    assert_eq!(qubits.len(), 2);
    for q in qubits {
        assert!(q["score"]["recall"].is_f64());
        assert!(q["report"]["radius"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn reference_recipe_reproduces_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    ok(&["generate", "--config", "builtin:ref3q", "--out", s(&ds)]);
    let train = tmp.path().join("train");
    ok(&["train", "--config", "builtin:ref3q", "--dataset", s(&ds), "--out", s(&train)]);
    let mut acc = Vec::new();
    for kind in ["mf", "mf_nn", "mf_rmf_nn"] {
        let eval = tmp.path().join(format!("eval-{kind}"));
        let model = train.join("models").join(kind);
        ok(&["evaluate", "--config", "builtin:ref3q", "--dataset", s(&ds), "--pipeline", s(&model), "--out", s(&eval)]);
        let report = read_json(eval.join(format!("reports/evaluate-{kind}-500.json")));
        acc.push(report["report"]["cumulative_accuracy"].as_f64().unwrap());
    }
    assert!(acc[0] <= acc[1] && acc[1] <= acc[2], "{acc:?}");
    assert!(acc[2] - acc[1] >= 0.005, "{acc:?}");
}
