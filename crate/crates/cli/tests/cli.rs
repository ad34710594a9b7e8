use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn plt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plt"))
        .current_dir(root())
        .args(args)
        .output()
        .expect("running plt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_json(path: &Path, value: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    write_json(
        &path,
        &json!({
            "dataset": {"type": "synthetic", "n_pairs": 150, "n_features": 4, "seed": 3},
            "preprocess": [{"z_score": "x0"}],
            "learner": {"type": "rank_svm", "c": 1.0},
            "validation": {"mode": {"type": "k_fold", "k": 3}},
            "seed": 5,
            "output": {"report": "out/report.json", "model": "out/model.json"}
        }),
    );
    std::fs::create_dir_all(dir.join("out")).unwrap();
    path
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(plt(&[]).status.code(), Some(1));
    assert_eq!(plt(&["train"]).status.code(), Some(1));
    assert_eq!(plt(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_writes_outputs_and_report_renders_them() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = plt(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("Average method pairwise accuracy"), "{}", stdout(&out));

    let report = dir.path().join("out/report.json");
    let parsed: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(parsed["status"]["state"], "completed");
    let text = plt(&["report", "--input", report.to_str().unwrap()]);
    assert_eq!(text.status.code(), Some(0));
    assert!(stdout(&text).contains(&format!("{:.6}", parsed["average"].as_f64().unwrap())));
    let as_json = plt(&["report", "--input", report.to_str().unwrap(), "--format", "json"]);
    let again: Value = serde_json::from_str(&stdout(&as_json)).unwrap();
    assert_eq!(again["average"], parsed["average"]);
}

#[test]
fn seed_override_changes_nothing_when_repeated() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let a = plt(&["train", "--config", config.to_str().unwrap(), "--seed", "11"]);
    let b = plt(&["train", "--config", config.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    let avg = |o: &Output| stdout(o).lines().find(|l| l.starts_with("Average")).map(String::from);
    assert_eq!(avg(&a), avg(&b));
}

#[test]
fn gen_then_evaluate_with_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let gen = plt(&["gen", "--spec", "configs/gen_linear.json", "--out", data.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    for f in ["objects.csv", "orders.csv", "dual_options.json", "pairs.csv", "pairs_options.json", "utility.json"] {
        assert!(data.join(f).exists(), "{f} missing");
    }

    let config = dir.path().join("train.json");
    write_json(
        &config,
        &json!({
            "dataset": {
                "type": "dual_file",
                "objects": "data/objects.csv",
                "orders": "data/orders.csv",
                "options": serde_json::from_slice::<Value>(&std::fs::read(data.join("dual_options.json")).unwrap()).unwrap()
            },
            "learner": {"type": "rank_svm", "c": 10.0},
            "validation": {"mode": {"type": "training_set"}},
            "seed": 1,
            "output": {"model": "model.json"}
        }),
    );
    let train = plt(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(train.status.code(), Some(0), "{}", String::from_utf8_lossy(&train.stderr));

    let model = dir.path().join("model.json");
    let eval = plt(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.join("pairs.csv").to_str().unwrap(),
        "--options",
        data.join("pairs_options.json").to_str().unwrap(),
    ]);
    assert_eq!(eval.status.code(), Some(0), "{}", String::from_utf8_lossy(&eval.stderr));
    let acc: f64 = stdout(&eval).trim().strip_prefix("pairwise_accuracy: ").unwrap().parse().unwrap();
    assert!(acc > 0.9, "{acc}");

    // Three feature columns against a ten-feature model.
    let narrow = dir.path().join("narrow.csv");
    std::fs::write(&narrow, "id,a,b,c,group,label\n1,0.1,0.2,0.3,0,1\n2,0.3,0.2,0.1,0,0\n").unwrap();
    let eval = plt(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--data",
        narrow.to_str().unwrap(),
        "--options",
        data.join("pairs_options.json").to_str().unwrap(),
    ]);
    assert_eq!(eval.status.code(), Some(2));
}

#[test]
fn select_prints_the_trace() {
    let out = plt(&["select", "--config", "configs/select_sfs.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let selected = text.lines().find_map(|l| l.strip_prefix("selected: ")).unwrap();
    for f in ["x0", "x1", "x2"] {
        assert!(selected.split(", ").any(|s| s == f), "{text}");
    }
}

#[test]
fn reproduce_exits_nonzero_on_a_miss() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let manifest = dir.path().join("manifest.json");
    write_json(
        &manifest,
        &json!({
            "runs": [{"name": "small", "config": config}],
            "checks": [{"criterion": "impossible", "type": "at_least", "run": "small", "value": 1.5}]
        }),
    );
    let out = plt(&["reproduce", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn runtime_errors_exit_two() {
    assert_eq!(plt(&["train", "--config", "no/such/config.json"]).status.code(), Some(2));
    assert_eq!(plt(&["report", "--input", "configs/gen_linear.json"]).status.code(), Some(2));
}
