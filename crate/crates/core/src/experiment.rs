//! Experiment protocols comparing independent SVMs with the dictionary-coupled
//! variants. Each protocol returns an [`ExperimentReport`] that renders to CSV
//! with the full configuration embedded, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{
    add_gaussian_noise, clean_arrhythmia, stratified_split, CleanReport, MnistSet, Pca, RawTable, SplitSpec,
};
use crate::error::{DsvmError, Result};
use crate::model::{Hyperparameters, TaskDataset, Variant};
use crate::svm::predict;
use crate::trainer::{
    argmax_rows, distinct_labels, exemplar_tasks, fit, fit_independent, map_tasks, mix_seed, one_vs_rest_tasks,
    TrainConfig,
};

pub const SVM: &str = "SVM";
pub const DSVM: &str = "D-SVM";
pub const MDSVM: &str = "MD-SVM";

/// Label treated as the positive ("normal") class in the binary arrhythmia task.
pub const ARRHYTHMIA_NORMAL: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Arrhythmia,
    NoiseCurve,
    Lambda3Sweep,
    MnistClass,
    MnistExemplar,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::Arrhythmia,
        ExperimentName::NoiseCurve,
        ExperimentName::Lambda3Sweep,
        ExperimentName::MnistClass,
        ExperimentName::MnistExemplar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Arrhythmia => "arrhythmia",
            ExperimentName::NoiseCurve => "noise_curve",
            ExperimentName::Lambda3Sweep => "lambda3_sweep",
            ExperimentName::MnistClass => "mnist_class",
            ExperimentName::MnistExemplar => "mnist_exemplar",
        }
    }

    pub fn uses_mnist(self) -> bool {
        matches!(self, ExperimentName::MnistClass | ExperimentName::MnistExemplar)
    }
}

impl std::str::FromStr for ExperimentName {
    type Err = DsvmError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| DsvmError::InvalidParameter(format!("unknown experiment {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    /// Shared by every method; `seed` drives splits, noise and initialization.
    pub hp: Hyperparameters,
    pub rounds: usize,
    /// Shrinks sample counts (MNIST) in `(0, 1]`.
    pub scale: f64,
    pub split: SplitSpec,
    /// λ3 for the MD-SVM rows of the arrhythmia table.
    pub mdsvm_lambda3: f64,
    pub sigmas: Vec<f64>,
    pub lambda3_grid: Vec<f64>,
    pub mnist_train_samples: usize,
    pub mnist_test_samples: usize,
    pub pca_samples: usize,
    pub pca_dim: usize,
    pub exemplars_per_class: usize,
    pub negatives_per_class: usize,
}

impl ExperimentConfig {
    pub fn new(name: ExperimentName) -> Self {
        let rounds = match name {
            ExperimentName::Arrhythmia => 50,
            ExperimentName::NoiseCurve | ExperimentName::Lambda3Sweep => 10,
            ExperimentName::MnistClass | ExperimentName::MnistExemplar => 3,
        };
        // γ chosen on held-out training data for the MNIST protocols; the
        // arrhythmia protocols keep the library default.
        let gamma = match name {
            ExperimentName::MnistClass => 0.01,
            ExperimentName::MnistExemplar => 1e-4,
            _ => Hyperparameters::default().gamma,
        };
        ExperimentConfig {
            name,
            hp: Hyperparameters {
                gamma,
                ..Hyperparameters::default()
            },
            rounds,
            scale: 1.0,
            split: SplitSpec::default(),
            mdsvm_lambda3: 1.0,
            sigmas: vec![0.0, 0.1, 1.0, 10.0],
            lambda3_grid: vec![0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1000.0],
            mnist_train_samples: 10_000,
            mnist_test_samples: 10_000,
            pca_samples: 20_000,
            pca_dim: 80,
            exemplars_per_class: 50,
            negatives_per_class: 1_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if self.rounds == 0 {
            return Err(DsvmError::InvalidParameter("rounds must be at least 1".into()));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(DsvmError::InvalidParameter(format!(
                "scale must lie in (0, 1], got {}",
                self.scale
            )));
        }
        if self.sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(DsvmError::InvalidParameter("noise levels must be >= 0".into()));
        }
        if self.lambda3_grid.iter().any(|l| !(*l >= 0.0)) {
            return Err(DsvmError::InvalidParameter("lambda3 grid values must be >= 0".into()));
        }
        Ok(())
    }

    fn scaled(&self, n: usize) -> usize {
        ((n as f64 * self.scale).round() as usize).max(1)
    }

    fn train_config(&self, variant: Variant, lambda3: f64, seed: u64) -> TrainConfig {
        let mut hp = self.hp.clone();
        hp.lambda3 = lambda3;
        hp.seed = seed;
        TrainConfig {
            hp,
            variant,
            ..TrainConfig::default()
        }
    }
}

/// One table cell: a method under a setting, summarized over rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub setting: String,
    /// Percent.
    pub mean_accuracy: f64,
    /// Percent, sample standard deviation over rounds.
    pub std: f64,
    pub rounds: usize,
}

impl ReportRow {
    fn from_accuracies(method: &str, setting: &str, acc: &[f64]) -> Self {
        let (mean, std) = mean_std(acc);
        ReportRow {
            method: method.to_string(),
            setting: setting.to_string(),
            mean_accuracy: mean,
            std,
            rounds: acc.len(),
        }
    }

    pub fn mean_error(&self) -> f64 {
        100.0 - self.mean_accuracy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    /// Derived quantities such as accuracy ranges or dataset statistics.
    pub notes: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn row(&self, method: &str, setting: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.setting == setting)
    }

    pub fn note(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `#`-prefixed provenance lines followed by the table.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: {}", self.name);
        let _ = writeln!(out, "# seed: {}", self.config.hp.seed);
        let _ = writeln!(out, "# config: {}", serde_json::to_string(&self.config)?);
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "setting", "mean_accuracy", "mean_error", "std", "rounds"])?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                r.setting.clone(),
                format!("{:.4}", r.mean_accuracy),
                format!("{:.4}", r.mean_error()),
                format!("{:.4}", r.std),
                r.rounds.to_string(),
            ])?;
        }
        let table = w.into_inner().map_err(|e| DsvmError::InvalidData(e.to_string()))?;
        out.push_str(&String::from_utf8(table).map_err(|e| DsvmError::InvalidData(e.to_string()))?);
        Ok(out)
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Percent of positions where `a` and `b` agree.
pub fn accuracy_percent<T: PartialEq>(predicted: &[T], truth: &[T]) -> f64 {
    if truth.is_empty() {
        return f64::NAN;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    100.0 * hits as f64 / truth.len() as f64
}

/// Class chosen by the highest-scoring linear model; ties go to the lowest index.
pub fn predict_argmax(models: &[(Array1<f64>, f64)], owners: &[i64], features: ArrayView2<f64>) -> Result<Vec<i64>> {
    let mut scores = Array2::zeros((features.nrows(), models.len()));
    for (j, (w, b)) in models.iter().enumerate() {
        scores.column_mut(j).assign(&predict(w.view(), *b, features)?);
    }
    Ok(argmax_rows(scores.view()).into_iter().map(|j| owners[j]).collect())
}

fn binary_accuracy(model: &(Array1<f64>, f64), features: ArrayView2<f64>, labels: ArrayView1<f64>) -> Result<f64> {
    let scores = predict(model.0.view(), model.1, features)?;
    let pred: Vec<f64> = scores.iter().map(|&s| if s >= 0.0 { 1.0 } else { -1.0 }).collect();
    Ok(accuracy_percent(&pred, labels.as_slice().expect("contiguous labels")))
}

fn joint_models(datasets: &[TaskDataset], config: &TrainConfig) -> Result<Vec<(Array1<f64>, f64)>> {
    let state = fit(datasets, config)?;
    Ok(state.tasks.into_iter().map(|p| (p.w, p.b)).collect())
}

/// Cleaned arrhythmia data plus the statistics worth reporting.
fn prepare_arrhythmia(table: &RawTable, cfg: &ExperimentConfig) -> Result<(RawTable, CleanReport)> {
    let (clean, report) = clean_arrhythmia(table, cfg.split.min_class_size);
    if report.is_empty() {
        return Err(DsvmError::InvalidData(
            "cleaning removed every instance or feature".into(),
        ));
    }
    if !clean.labels.contains(&ARRHYTHMIA_NORMAL) {
        return Err(DsvmError::InvalidLabels(format!(
            "no instances of the normal class {ARRHYTHMIA_NORMAL}"
        )));
    }
    Ok((clean, report))
}

fn clean_notes(report: &CleanReport) -> Vec<(String, String)> {
    vec![
        ("instances".into(), report.instances.to_string()),
        ("features".into(), report.features.to_string()),
        ("classes".into(), report.classes.to_string()),
        ("dropped_constant_features".into(), report.dropped_constant.to_string()),
        ("dropped_missing_features".into(), report.dropped_missing.to_string()),
        ("dropped_classes".into(), format!("{:?}", report.dropped_classes)),
    ]
}

/// Which methods to run in one arrhythmia round.
#[derive(Clone, Copy)]
struct RoundPlan<'a> {
    baseline: bool,
    /// `(label, variant, λ3)` for each joint model.
    joint: &'a [(&'a str, Variant, f64)],
    binary: bool,
    multi: bool,
}

/// Accuracies keyed by `(method, setting)` for one train/test split.
fn arrhythmia_round(
    train_x: ArrayView2<f64>,
    train_labels: &[i64],
    test_x: ArrayView2<f64>,
    test_labels: &[i64],
    cfg: &ExperimentConfig,
    plan: RoundPlan<'_>,
    seed: u64,
) -> Result<Vec<(String, String, f64)>> {
    let mut out = Vec::new();
    let base = cfg.train_config(Variant::Dsvm, 0.0, seed);
    if plan.binary {
        let to_pm = |l: &[i64]| -> Array1<f64> {
            l.iter()
                .map(|&c| if c == ARRHYTHMIA_NORMAL { 1.0 } else { -1.0 })
                .collect()
        };
        let ds = vec![TaskDataset::new(
            "normal_vs_rest",
            train_x.to_owned(),
            to_pm(train_labels),
        )?];
        let y_test = to_pm(test_labels);
        if plan.baseline {
            let m = fit_independent(&ds, &base.hp, base.svm_max_epochs)?;
            out.push((
                SVM.to_string(),
                "binary".to_string(),
                binary_accuracy(&m[0], test_x, y_test.view())?,
            ));
        }
        for &(label, variant, l3) in plan.joint {
            let m = joint_models(&ds, &cfg.train_config(variant, l3, seed))?;
            out.push((
                label.to_string(),
                "binary".to_string(),
                binary_accuracy(&m[0], test_x, y_test.view())?,
            ));
        }
    }
    if plan.multi {
        let classes = distinct_labels(train_labels);
        let tasks = one_vs_rest_tasks(train_x, train_labels, &classes)?;
        if plan.baseline {
            let m = fit_independent(&tasks, &base.hp, base.svm_max_epochs)?;
            let pred = predict_argmax(&m, &classes, test_x)?;
            out.push((
                SVM.to_string(),
                "multi".to_string(),
                accuracy_percent(&pred, test_labels),
            ));
        }
        for &(label, variant, l3) in plan.joint {
            let m = joint_models(&tasks, &cfg.train_config(variant, l3, seed))?;
            let pred = predict_argmax(&m, &classes, test_x)?;
            out.push((
                label.to_string(),
                "multi".to_string(),
                accuracy_percent(&pred, test_labels),
            ));
        }
    }
    Ok(out)
}

/// Runs `rounds` independent rounds (in parallel when enabled) and collects
/// accuracies per `(method, setting)` in round order.
fn collect_rounds<F>(rounds: usize, f: F) -> Result<BTreeMap<(String, String), Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<(String, String, f64)>> + Sync + Send,
{
    let results = map_tasks(rounds, f);
    let mut acc: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in results {
        for (method, setting, a) in r? {
            acc.entry((method, setting)).or_default().push(a);
        }
    }
    Ok(acc)
}

fn rows_in_order(acc: &BTreeMap<(String, String), Vec<f64>>, order: &[(String, String)]) -> Vec<ReportRow> {
    order
        .iter()
        .filter_map(|key| acc.get(key).map(|a| ReportRow::from_accuracies(&key.0, &key.1, a)))
        .collect()
}

fn split_views(data: &RawTable, spec: &SplitSpec, round: usize) -> Result<(RawTable, RawTable)> {
    let (train, test) = stratified_split(&data.labels, spec, round)?;
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

fn split_spec(cfg: &ExperimentConfig) -> SplitSpec {
    SplitSpec {
        seed: mix_seed(cfg.hp.seed, 1, 0),
        rounds: cfg.rounds,
        ..cfg.split.clone()
    }
}

/// Binary (normal vs rest) and one-vs-rest multiclass accuracy for the
/// baseline, D-SVM and MD-SVM over stratified random splits.
pub fn run_arrhythmia(table: &RawTable, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (data, clean) = prepare_arrhythmia(table, cfg)?;
    let spec = split_spec(cfg);
    let joint = [(DSVM, Variant::Dsvm, 0.0), (MDSVM, Variant::Mdsvm, cfg.mdsvm_lambda3)];
    let plan = RoundPlan {
        baseline: true,
        joint: &joint,
        binary: true,
        multi: true,
    };
    let acc = collect_rounds(cfg.rounds, |r| {
        let (train, test) = split_views(&data, &spec, r)?;
        arrhythmia_round(
            train.rows.view(),
            &train.labels,
            test.rows.view(),
            &test.labels,
            cfg,
            plan,
            mix_seed(cfg.hp.seed, 2, r as u64),
        )
    })?;
    let mut order = Vec::new();
    for setting in ["binary", "multi"] {
        for method in [SVM, MDSVM, DSVM] {
            order.push((method.to_string(), setting.to_string()));
        }
    }
    Ok(ExperimentReport {
        name: cfg.name.as_str().into(),
        config: cfg.clone(),
        rows: rows_in_order(&acc, &order),
        notes: clean_notes(&clean),
    })
}

fn sigma_setting(base: &str, sigma: f64) -> String {
    format!("{base} sigma={sigma}")
}

/// Accuracy against the noise level added to both training and test features.
pub fn run_noise_curve(table: &RawTable, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (data, clean) = prepare_arrhythmia(table, cfg)?;
    let spec = split_spec(cfg);
    let joint = [(DSVM, Variant::Dsvm, 0.0)];
    let plan = RoundPlan {
        baseline: true,
        joint: &joint,
        binary: true,
        multi: true,
    };
    let n_sigma = cfg.sigmas.len();
    let acc = collect_rounds(cfg.rounds * n_sigma, |job| {
        let (si, r) = (job / cfg.rounds, job % cfg.rounds);
        let sigma = cfg.sigmas[si];
        let (train, test) = split_views(&data, &spec, r)?;
        let noise_seed = mix_seed(cfg.hp.seed, 3, (si * cfg.rounds + r) as u64);
        let train_x = add_gaussian_noise(train.rows.view(), sigma, noise_seed)?;
        let test_x = add_gaussian_noise(test.rows.view(), sigma, mix_seed(noise_seed, 1, 1))?;
        let res = arrhythmia_round(
            train_x.view(),
            &train.labels,
            test_x.view(),
            &test.labels,
            cfg,
            plan,
            mix_seed(cfg.hp.seed, 2, r as u64),
        )?;
        Ok(res
            .into_iter()
            .map(|(m, setting, a)| (m, sigma_setting(&setting, sigma), a))
            .collect())
    })?;
    let mut order = Vec::new();
    for setting in ["binary", "multi"] {
        for &sigma in &cfg.sigmas {
            for method in [SVM, DSVM] {
                order.push((method.to_string(), sigma_setting(setting, sigma)));
            }
        }
    }
    Ok(ExperimentReport {
        name: cfg.name.as_str().into(),
        config: cfg.clone(),
        rows: rows_in_order(&acc, &order),
        notes: clean_notes(&clean),
    })
}

fn lambda3_setting(base: &str, lambda3: f64) -> String {
    format!("{base} lambda3={lambda3}")
}

/// MD-SVM accuracy across the λ3 grid; the notes carry the accuracy range
/// (max − min of the per-λ3 means, as a fraction) for each setting.
pub fn run_lambda3_sweep(table: &RawTable, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (data, clean) = prepare_arrhythmia(table, cfg)?;
    let spec = split_spec(cfg);
    let grid = &cfg.lambda3_grid;
    let acc = collect_rounds(cfg.rounds * grid.len(), |job| {
        let (li, r) = (job / cfg.rounds, job % cfg.rounds);
        let (train, test) = split_views(&data, &spec, r)?;
        let joint = [(MDSVM, Variant::Mdsvm, grid[li])];
        let plan = RoundPlan {
            baseline: false,
            joint: &joint,
            binary: true,
            multi: true,
        };
        let res = arrhythmia_round(
            train.rows.view(),
            &train.labels,
            test.rows.view(),
            &test.labels,
            cfg,
            plan,
            mix_seed(cfg.hp.seed, 2, r as u64),
        )?;
        Ok(res
            .into_iter()
            .map(|(m, setting, a)| (m, lambda3_setting(&setting, grid[li]), a))
            .collect())
    })?;
    let mut order = Vec::new();
    for setting in ["binary", "multi"] {
        for &l3 in grid {
            order.push((MDSVM.to_string(), lambda3_setting(setting, l3)));
        }
    }
    let rows = rows_in_order(&acc, &order);
    let mut notes = clean_notes(&clean);
    for setting in ["binary", "multi"] {
        let means: Vec<f64> = rows
            .iter()
            .filter(|r| r.setting.starts_with(setting))
            .map(|r| r.mean_accuracy)
            .collect();
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        notes.push((format!("accuracy_range_{setting}"), format!("{:.6}", (hi - lo) / 100.0)));
    }
    Ok(ExperimentReport {
        name: cfg.name.as_str().into(),
        config: cfg.clone(),
        rows,
        notes,
    })
}

/// Random subset of `n` row indices (sorted) drawn with `seed`.
fn sample_rows(total: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..total).collect();
    if n < total {
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(n);
        idx.sort_unstable();
    }
    idx
}

fn take_labels(labels: &[i64], idx: &[usize]) -> Vec<i64> {
    idx.iter().map(|&i| labels[i]).collect()
}

/// Ten one-vs-rest digit classifiers on a random training subset, evaluated on
/// the test set. Each round draws a new subset and initialization seed.
pub fn run_mnist_class(mnist: &MnistSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n_train = cfg.scaled(cfg.mnist_train_samples).min(mnist.train_images.nrows());
    let n_test = cfg.scaled(cfg.mnist_test_samples).min(mnist.test_images.nrows());
    let test_idx = sample_rows(mnist.test_images.nrows(), n_test, mix_seed(cfg.hp.seed, 4, 0));
    let test_x = mnist.test_images.select(Axis(0), &test_idx);
    let test_y = take_labels(&mnist.test_labels, &test_idx);
    let mut acc: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    // rounds run one at a time; the ten tasks inside each fit are the parallel unit
    for r in 0..cfg.rounds {
        let seed = mix_seed(cfg.hp.seed, 5, r as u64);
        let idx = sample_rows(mnist.train_images.nrows(), n_train, seed);
        let x = mnist.train_images.select(Axis(0), &idx);
        let y = take_labels(&mnist.train_labels, &idx);
        let classes = distinct_labels(&y);
        let tasks = one_vs_rest_tasks(x.view(), &y, &classes)?;
        let base_cfg = cfg.train_config(Variant::Dsvm, 0.0, seed);
        let svm = fit_independent(&tasks, &base_cfg.hp, base_cfg.svm_max_epochs)?;
        let pred = predict_argmax(&svm, &classes, test_x.view())?;
        acc.entry((SVM.into(), "class".into()))
            .or_default()
            .push(accuracy_percent(&pred, &test_y));
        let joint = joint_models(&tasks, &base_cfg)?;
        let pred = predict_argmax(&joint, &classes, test_x.view())?;
        acc.entry((DSVM.into(), "class".into()))
            .or_default()
            .push(accuracy_percent(&pred, &test_y));
    }
    let order = [
        (SVM.to_string(), "class".to_string()),
        (DSVM.to_string(), "class".to_string()),
    ];
    Ok(ExperimentReport {
        name: cfg.name.as_str().into(),
        config: cfg.clone(),
        rows: rows_in_order(&acc, &order),
        notes: vec![
            ("train_samples".into(), n_train.to_string()),
            ("test_samples".into(), n_test.to_string()),
        ],
    })
}

/// Exemplar SVMs in a PCA space: every training exemplar gets its own model
/// against negatives from the other digits, D-SVM couples the exemplars of one
/// digit, and a test point takes the digit of its highest-scoring exemplar.
pub fn run_mnist_exemplar(mnist: &MnistSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n_pca = cfg.scaled(cfg.pca_samples).min(mnist.train_images.nrows());
    let n_test = cfg.scaled(cfg.mnist_test_samples).min(mnist.test_images.nrows());
    let per_class = cfg.scaled(cfg.exemplars_per_class);
    let n_neg = cfg.scaled(cfg.negatives_per_class);
    let test_idx = sample_rows(mnist.test_images.nrows(), n_test, mix_seed(cfg.hp.seed, 4, 0));
    let test_y = take_labels(&mnist.test_labels, &test_idx);
    let mut acc: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in 0..cfg.rounds {
        let seed = mix_seed(cfg.hp.seed, 6, r as u64);
        let pca_idx = sample_rows(mnist.train_images.nrows(), n_pca, seed);
        let pca = Pca::fit(mnist.train_images.select(Axis(0), &pca_idx).view(), cfg.pca_dim)?;
        let test_x = pca.transform(mnist.test_images.select(Axis(0), &test_idx).view())?;

        let mut order: Vec<usize> = (0..mnist.train_images.nrows()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 7, 0)));
        let classes = distinct_labels(&mnist.train_labels);
        let mut svm_models = Vec::new();
        let mut joint_models_all = Vec::new();
        let mut owners = Vec::new();
        for (ci, &c) in classes.iter().enumerate() {
            let pos: Vec<usize> = order
                .iter()
                .copied()
                .filter(|&i| mnist.train_labels[i] == c)
                .take(per_class)
                .collect();
            let neg: Vec<usize> = order
                .iter()
                .rev()
                .copied()
                .filter(|&i| mnist.train_labels[i] != c)
                .take(n_neg)
                .collect();
            let pos_x = pca.transform(mnist.train_images.select(Axis(0), &pos).view())?;
            let neg_x = pca.transform(mnist.train_images.select(Axis(0), &neg).view())?;
            let tasks = exemplar_tasks(pos_x.view(), neg_x.view())?;
            let class_cfg = cfg.train_config(Variant::Dsvm, 0.0, mix_seed(seed, 8, ci as u64));
            svm_models.extend(fit_independent(&tasks, &class_cfg.hp, class_cfg.svm_max_epochs)?);
            joint_models_all.extend(joint_models(&tasks, &class_cfg)?);
            owners.extend(std::iter::repeat_n(c, pos.len()));
        }
        let pred = predict_argmax(&svm_models, &owners, test_x.view())?;
        acc.entry((SVM.into(), "exemplar".into()))
            .or_default()
            .push(accuracy_percent(&pred, &test_y));
        let pred = predict_argmax(&joint_models_all, &owners, test_x.view())?;
        acc.entry((DSVM.into(), "exemplar".into()))
            .or_default()
            .push(accuracy_percent(&pred, &test_y));
    }
    let order = [
        (SVM.to_string(), "exemplar".to_string()),
        (DSVM.to_string(), "exemplar".to_string()),
    ];
    Ok(ExperimentReport {
        name: cfg.name.as_str().into(),
        config: cfg.clone(),
        rows: rows_in_order(&acc, &order),
        notes: vec![
            ("pca_samples".into(), n_pca.to_string()),
            ("exemplars_per_class".into(), per_class.to_string()),
            ("negatives_per_class".into(), n_neg.to_string()),
            ("test_samples".into(), n_test.to_string()),
        ],
    })
}

/// Loaded inputs for [`run_experiment`].
pub enum ExperimentData<'a> {
    Arrhythmia(&'a RawTable),
    Mnist(&'a MnistSet),
}

pub fn run_experiment(data: ExperimentData<'_>, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match (cfg.name, data) {
        (ExperimentName::Arrhythmia, ExperimentData::Arrhythmia(t)) => run_arrhythmia(t, cfg),
        (ExperimentName::NoiseCurve, ExperimentData::Arrhythmia(t)) => run_noise_curve(t, cfg),
        (ExperimentName::Lambda3Sweep, ExperimentData::Arrhythmia(t)) => run_lambda3_sweep(t, cfg),
        (ExperimentName::MnistClass, ExperimentData::Mnist(m)) => run_mnist_class(m, cfg),
        (ExperimentName::MnistExemplar, ExperimentData::Mnist(m)) => run_mnist_exemplar(m, cfg),
        (name, _) => Err(DsvmError::InvalidParameter(format!(
            "experiment {} was given the wrong dataset",
            name.as_str()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn synthetic_arrhythmia(seed: u64) -> RawTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = [(1i64, 60usize), (2, 24), (3, 14), (4, 3)];
        let m = 8;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for &(c, n) in &counts {
            for _ in 0..n {
                for j in 0..m {
                    let centre = if j == c as usize { 2.0 } else { 0.0 };
                    rows.push(centre + rng.random_range(-1.0..1.0));
                }
                labels.push(c);
            }
        }
        let n = labels.len();
        RawTable::complete(Array2::from_shape_vec((n, m), rows).unwrap(), labels)
    }

    fn quick(name: ExperimentName) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(name);
        cfg.rounds = 2;
        cfg.hp.max_outer_iters = 3;
        cfg.lambda3_grid = vec![0.0, 10.0];
        cfg.sigmas = vec![0.0, 1.0];
        cfg
    }

    #[test]
    fn arrhythmia_protocol_on_synthetic_table() {
        let report = run_arrhythmia(&synthetic_arrhythmia(1), &quick(ExperimentName::Arrhythmia)).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.note("classes"), Some("3"));
        for r in &report.rows {
            assert_eq!(r.rounds, 2);
            assert!(r.std >= 0.0);
            assert!((r.mean_accuracy + r.mean_error() - 100.0).abs() < 1e-12);
            assert!(r.mean_accuracy > 50.0, "{r:?}");
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = quick(ExperimentName::NoiseCurve);
        let table = synthetic_arrhythmia(2);
        let a = run_noise_curve(&table, &cfg).unwrap().to_csv().unwrap();
        let b = run_noise_curve(&table, &cfg).unwrap().to_csv().unwrap();
        assert_eq!(a, b);
        assert!(a.contains("# config: {"));
        assert_eq!(a.lines().filter(|l| l.starts_with("SVM,")).count(), 4);
    }

    #[test]
    fn lambda3_sweep_reports_ranges() {
        let report = run_lambda3_sweep(&synthetic_arrhythmia(3), &quick(ExperimentName::Lambda3Sweep)).unwrap();
        assert_eq!(report.rows.len(), 4);
        let range: f64 = report.note("accuracy_range_multi").unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&range));
    }

    #[test]
    fn names_round_trip() {
        for n in ExperimentName::ALL {
            assert_eq!(n.as_str().parse::<ExperimentName>().unwrap(), n);
        }
        assert!("table9".parse::<ExperimentName>().is_err());
    }

    #[test]
    fn sample_std_and_accuracy() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
        assert_eq!(accuracy_percent(&[1, 1, 1, 1], &[1, -1, 1, -1]), 50.0);
    }
}
