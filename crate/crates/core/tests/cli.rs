use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dsvm::data::{write_sparse_text, RawTable};
use dsvm::model::{DictionaryModel, Hyperparameters, TaskParameters, TrainState, Variant};
use dsvm::{ModelDocument, ModelMode};
use ndarray::{array, Array1, Array2};
use tempfile::TempDir;

fn dsvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsvm")).args(args).output().unwrap()
}

fn separable(dir: &Path, name: &str) -> PathBuf {
    let x = array![
        [2.0, 1.0, 0.0],
        [1.5, 2.0, 0.5],
        [2.5, 0.0, 1.0],
        [3.0, 1.0, -0.5],
        [-2.0, -1.0, 0.0],
        [-1.0, -2.5, 0.5],
        [-2.5, 0.5, -1.0],
        [-3.0, -1.0, 0.0]
    ];
    let y = array![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
    write_rows(dir, name, &x, &y)
}

fn write_rows(dir: &Path, name: &str, x: &Array2<f64>, y: &Array1<f64>) -> PathBuf {
    let path = dir.join(name);
    let mut f = fs::File::create(&path).unwrap();
    let labels = y.iter().map(|&v| v as i64).collect();
    write_sparse_text(&mut f, &RawTable::complete(x.clone(), labels)).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_valid_model() {
    let dir = TempDir::new().unwrap();
    let data = separable(dir.path(), "a.svm");
    let out = dir.path().join("m.json");
    let log = dir.path().join("log.jsonl");
    let res = dsvm(&[
        "train",
        "--data",
        path_str(&data),
        "--mode",
        "binary",
        "--lambda1",
        "1",
        "--lambda2",
        "10",
        "--out",
        path_str(&out),
        "--log",
        path_str(&log),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let doc = ModelDocument::load(&out).unwrap();
    let state = doc.to_state().unwrap();
    assert_eq!(state.tasks.len(), 1);
    assert_eq!(doc.hyperparameters.lambda2, 10.0);
    let lines = fs::read_to_string(&log).unwrap();
    assert!(lines
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(lines.lines().count() >= 2);

    let eval = dsvm(&["eval", "--model", path_str(&out), "--data", path_str(&data)]);
    assert!(eval.status.success());
    let text = String::from_utf8(eval.stdout).unwrap();
    assert!(text.contains("100.0000"), "{text}");
}

#[test]
fn missing_file_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.json");
    let res = dsvm(&["train", "--data", "/nonexistent/file.svm", "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let res = dsvm(&["experiment", "tables", "--data", "x"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let data = separable(dir.path(), "a.svm");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let res = dsvm(&[
            "train",
            "--data",
            path_str(&data),
            "--seed",
            "4",
            "--out",
            path_str(out),
        ]);
        assert!(res.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn constant_model(dir: &Path, m: usize) -> PathBuf {
    let state = TrainState {
        dictionary: DictionaryModel::uniform(m, 1, 0.1).unwrap(),
        tasks: vec![TaskParameters {
            delta: Array1::ones(m),
            ..TaskParameters::zeros(m, 1)
        }],
        objective_trace: vec![],
    };
    let doc = ModelDocument::from_state(
        &state,
        &["t".into()],
        &Hyperparameters::default(),
        Variant::Dsvm,
        ModelMode::Binary,
    )
    .unwrap();
    let path = dir.join("const.json");
    doc.save(&path).unwrap();
    path
}

fn eval_accuracy(model: &Path, data: &Path) -> String {
    let res = dsvm(&["eval", "--model", path_str(model), "--data", path_str(data)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    String::from_utf8(res.stdout).unwrap()
}

#[test]
fn all_positive_model_scores_half_on_balanced_data() {
    let dir = TempDir::new().unwrap();
    let data = separable(dir.path(), "a.svm");
    let model = constant_model(dir.path(), 3);
    let text = eval_accuracy(&model, &data);
    assert!(text.contains("50.0000"), "{text}");

    let pred = dsvm(&["predict", "--model", path_str(&model), "--data", path_str(&data)]);
    let labels: Vec<String> = String::from_utf8(pred.stdout)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    assert_eq!(labels.len(), 8);
    assert!(labels.iter().all(|l| l.trim() == "1"), "{labels:?}");
}

#[test]
fn evaluation_ignores_row_order() {
    let dir = TempDir::new().unwrap();
    let data = separable(dir.path(), "a.svm");
    let train_out = dir.path().join("m.json");
    assert!(
        dsvm(&["train", "--data", path_str(&data), "--out", path_str(&train_out)])
            .status
            .success()
    );
    let x = array![[0.5, 0.1, 0.0], [-0.2, 0.3, 1.0], [1.0, -1.0, 0.0], [-0.1, -0.1, 0.2]];
    let y = array![1.0, -1.0, -1.0, 1.0];
    let forward = write_rows(dir.path(), "f.svm", &x, &y);
    let order = [3usize, 1, 0, 2];
    let xr = x.select(ndarray::Axis(0), &order);
    let yr = y.select(ndarray::Axis(0), &order);
    let reversed = write_rows(dir.path(), "r.svm", &xr, &yr);
    assert_eq!(
        eval_accuracy(&train_out, &forward),
        eval_accuracy(&train_out, &reversed)
    );
}

#[test]
fn dimension_mismatch_names_both_sizes() {
    let dir = TempDir::new().unwrap();
    let data = separable(dir.path(), "a.svm");
    let model = constant_model(dir.path(), 2);
    let res = dsvm(&["eval", "--model", path_str(&model), "--data", path_str(&data)]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("expected 2") && err.contains("3"), "{err}");
}

#[test]
fn multiclass_csv_round_trip() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("blobs.csv");
    let mut text = String::from("f1,f2,label\n");
    for i in 0..12 {
        let (cx, cy, label) = [(4.0, 0.0, 1), (-4.0, 0.0, 2), (0.0, 5.0, 3)][i % 3];
        let jitter = (i as f64 * 0.37).sin() * 0.5;
        text.push_str(&format!("{},{},{}\n", cx + jitter, cy - jitter, label));
    }
    fs::write(&csv, text).unwrap();
    let out = dir.path().join("multi.json");
    let res = dsvm(&[
        "train",
        "--data",
        path_str(&csv),
        "--mode",
        "multi",
        "--out",
        path_str(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let metrics = eval_accuracy(&out, &csv);
    assert!(
        metrics.contains("accuracy,100.0000") && metrics.contains("error,0.0000"),
        "{metrics}"
    );
}
