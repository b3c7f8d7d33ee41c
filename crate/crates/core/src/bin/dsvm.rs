use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ndarray::{Array1, Array2, Axis};

use dsvm::data::{load_arrhythmia, load_dense_csv, load_sparse_text, MnistSet, RawTable};
use dsvm::experiment::{run_experiment, ExperimentConfig, ExperimentData, ExperimentName};
use dsvm::model::{Hyperparameters, TaskDataset, Variant};
use dsvm::persist::{ModelDocument, ModelMode};
use dsvm::trainer::{
    distinct_labels, exemplar_tasks, fit_with_progress, one_vs_rest_tasks, JsonLinesSink, NullSink, ProgressSink,
    TrainConfig,
};
use dsvm::DsvmError;

#[derive(Parser)]
#[command(
    name = "dsvm",
    version,
    about = "Multi-task linear SVMs with a shared covariance dictionary"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write it as JSON.
    Train(TrainArgs),
    /// Print one prediction per data row.
    Predict(PredictArgs),
    /// Accuracy of a saved model on labelled data.
    Eval(PredictArgs),
    /// Run a named experiment protocol and write a CSV report.
    Experiment(ExperimentArgs),
}

/// Unset flags keep the defaults of the command (library or experiment protocol).
#[derive(Args, Clone)]
struct HyperArgs {
    /// Hinge weight [default: 1]
    #[arg(long)]
    lambda1: Option<f64>,
    /// Weight of Σ w²/δ [default: 10]
    #[arg(long)]
    lambda2: Option<f64>,
    /// Mean regularization for mdsvm [default: 0]
    #[arg(long)]
    lambda3: Option<f64>,
    /// ℓ1 weight on dictionary coefficients [default: 0.1, experiment specific]
    #[arg(long)]
    gamma: Option<f64>,
    /// δ ≈ Bα coupling [default: 1000]
    #[arg(long)]
    nu: Option<f64>,
    /// Dictionary size [default: min(2T, 400)]
    #[arg(long)]
    dict_size: Option<usize>,
    /// Outer iterations [default: 50]
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl HyperArgs {
    fn apply(&self, hp: &mut Hyperparameters) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut hp.lambda1, self.lambda1);
        set(&mut hp.lambda2, self.lambda2);
        set(&mut hp.lambda3, self.lambda3);
        set(&mut hp.gamma, self.gamma);
        set(&mut hp.nu, self.nu);
        if self.dict_size.is_some() {
            hp.dict_size = self.dict_size;
        }
        if let Some(n) = self.max_iters {
            hp.max_outer_iters = n;
        }
        hp.seed = self.seed;
    }

    fn to_hp(&self) -> Hyperparameters {
        let mut hp = Hyperparameters::default();
        self.apply(&mut hp);
        hp
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training data (sparse text, `.csv` with a `label` column, or an MNIST directory).
    /// Repeat for several binary tasks.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long, default_value = "binary")]
    mode: ModelMode,
    #[arg(long, default_value = "dsvm")]
    variant: Variant,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    out: PathBuf,
    /// Progress records as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Repeat to pair one file with each binary task.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    name: ExperimentName,
    /// Arrhythmia data file, or the MNIST directory.
    #[arg(long)]
    data: PathBuf,
    /// Optional separate MNIST test directory.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Single noise level for noise_curve instead of the default list.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_table(path: &Path) -> Result<RawTable> {
    if path.is_dir() {
        let set = MnistSet::load(path).with_context(|| format!("loading MNIST from {}", path.display()))?;
        return Ok(RawTable::complete(set.train_images, set.train_labels));
    }
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let table = match ext {
        "csv" => load_dense_csv(path),
        "data" => load_arrhythmia(path),
        _ => load_sparse_text(path, None),
    }
    .with_context(|| format!("reading {}", path.display()))?;
    if table.has_missing() {
        bail!("{} has missing values; clean it first", path.display());
    }
    Ok(table)
}

/// Labels as ±1: `+1/-1` pass through, otherwise two classes map larger → +1.
fn binary_labels(labels: &[i64], path: &Path) -> Result<Array1<f64>> {
    let classes = distinct_labels(labels);
    match classes.as_slice() {
        [-1, 1] | [1] | [-1] => Ok(labels.iter().map(|&l| l as f64).collect()),
        [_, b] => Ok(labels.iter().map(|&l| if l == *b { 1.0 } else { -1.0 }).collect()),
        _ => bail!(
            "{} has {} classes; binary mode needs two",
            path.display(),
            classes.len()
        ),
    }
}

fn pad_to(x: Array2<f64>, m: usize) -> Array2<f64> {
    if x.ncols() >= m {
        return x;
    }
    let mut out = Array2::zeros((x.nrows(), m));
    out.slice_mut(ndarray::s![.., ..x.ncols()]).assign(&x);
    out
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<RawTable>> {
    let mut tables = paths.iter().map(|p| load_table(p)).collect::<Result<Vec<_>>>()?;
    // sparse files infer their width from the largest index present
    let m = tables.iter().map(RawTable::n_features).max().unwrap_or(0);
    for t in &mut tables {
        t.rows = pad_to(std::mem::take(&mut t.rows), m);
        t.missing = Array2::from_elem(t.rows.dim(), false);
    }
    Ok(tables)
}

fn task_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("task").to_string()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let tables = load_all(&args.data)?;
    let config = TrainConfig {
        hp: args.hyper.to_hp(),
        variant: args.variant,
        ..TrainConfig::default()
    };
    let (tasks, ids, class_labels): (Vec<TaskDataset>, Vec<String>, Option<Vec<i64>>) = match args.mode {
        ModelMode::Binary => {
            let mut tasks = Vec::new();
            for (t, p) in tables.iter().zip(&args.data) {
                tasks.push(TaskDataset::new(
                    task_name(p),
                    t.rows.clone(),
                    binary_labels(&t.labels, p)?,
                )?);
            }
            let ids = tasks.iter().map(|t| t.task_id.clone()).collect();
            (tasks, ids, None)
        }
        ModelMode::Multi => {
            if tables.len() != 1 {
                bail!("multi mode takes exactly one --data file");
            }
            let classes = distinct_labels(&tables[0].labels);
            if classes.len() < 2 {
                bail!("multi mode needs at least two classes");
            }
            let tasks = one_vs_rest_tasks(tables[0].rows.view(), &tables[0].labels, &classes)?;
            let ids = classes.iter().map(|c| format!("class_{c}")).collect();
            (tasks, ids, Some(classes))
        }
        ModelMode::Exemplar => {
            if tables.len() != 1 {
                bail!("exemplar mode takes exactly one --data file");
            }
            let t = &tables[0];
            let y = binary_labels(&t.labels, &args.data[0])?;
            let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
            let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
            let tasks = exemplar_tasks(t.rows.select(Axis(0), &pos).view(), t.rows.select(Axis(0), &neg).view())?;
            let ids = pos.iter().map(|i| format!("row_{}", i + 1)).collect();
            (tasks, ids, None)
        }
    };

    let state = match &args.log {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut sink = JsonLinesSink::new(BufWriter::new(file));
            let state = fit_with_progress(&tasks, &config, &mut sink as &mut dyn ProgressSink)?;
            sink.into_inner().flush()?;
            state
        }
        None => fit_with_progress(&tasks, &config, &mut NullSink)?,
    };
    let mut doc = ModelDocument::from_state(&state, &ids, &config.hp, config.variant, args.mode)?;
    doc.class_labels = class_labels;
    doc.save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_for_model(doc: &ModelDocument, paths: &[PathBuf]) -> Result<Vec<RawTable>> {
    let mut tables = paths.iter().map(|p| load_table(p)).collect::<Result<Vec<_>>>()?;
    let m = doc.n_features();
    for (t, p) in tables.iter_mut().zip(paths) {
        // sparse files may simply omit trailing zero features
        let sparse = !p.is_dir() && !matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "data"));
        if sparse && t.n_features() < m {
            t.rows = pad_to(std::mem::take(&mut t.rows), m);
            t.missing = Array2::from_elem(t.rows.dim(), false);
        }
        if t.n_features() != m {
            return Err(DsvmError::dims(format!("features of {} vs model", p.display()), m, t.n_features()).into());
        }
    }
    Ok(tables)
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let doc = ModelDocument::load(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let tables = load_for_model(&doc, &args.data)?;
    let mut out = open_out(&args.out)?;
    match doc.mode {
        ModelMode::Multi => {
            for c in doc.predict_classes(tables[0].rows.view())? {
                writeln!(out, "{c}")?;
            }
        }
        ModelMode::Binary | ModelMode::Exemplar => {
            for t in &tables {
                let scores = doc.scores(t.rows.view())?;
                for row in scores.rows() {
                    let line: Vec<String> = row
                        .iter()
                        .map(|s| format!("{}", if *s >= 0.0 { 1 } else { -1 }))
                        .collect();
                    writeln!(out, "{}", line.join(","))?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval(args: PredictArgs) -> Result<()> {
    let doc = ModelDocument::load(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let tables = load_for_model(&doc, &args.data)?;
    let mut out = open_out(&args.out)?;
    match doc.mode {
        ModelMode::Multi => {
            let t = &tables[0];
            let pred = doc.predict_classes(t.rows.view())?;
            let acc = dsvm::experiment::accuracy_percent(&pred, &t.labels);
            writeln!(out, "metric,value")?;
            writeln!(out, "accuracy,{acc:.4}")?;
            writeln!(out, "error,{:.4}", 100.0 - acc)?;
        }
        ModelMode::Binary => {
            // one data file per task, or a single file scored by every task
            writeln!(out, "task,accuracy,error")?;
            let scores_for = |t: &RawTable| doc.scores(t.rows.view());
            for (j, task) in doc.tasks.iter().enumerate() {
                let (t, p) = if tables.len() == doc.tasks.len() {
                    (&tables[j], &args.data[j])
                } else {
                    (&tables[0], &args.data[0])
                };
                let y = binary_labels(&t.labels, p)?;
                let s = scores_for(t)?;
                let pred: Vec<f64> = s.column(j).iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
                let acc = dsvm::experiment::accuracy_percent(&pred, y.as_slice().expect("contiguous"));
                writeln!(out, "{},{acc:.4},{:.4}", task.task_id, 100.0 - acc)?;
            }
        }
        ModelMode::Exemplar => {
            let t = &tables[0];
            let y = binary_labels(&t.labels, &args.data[0])?;
            let scores = doc.scores(t.rows.view())?;
            let k = 10.min(t.n_rows());
            writeln!(out, "exemplar,top_row,top_label,precision_at_{k}")?;
            for (j, task) in doc.tasks.iter().enumerate() {
                let col = scores.column(j);
                let mut order: Vec<usize> = (0..col.len()).collect();
                order.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
                let hits = order[..k].iter().filter(|&&i| y[i] > 0.0).count();
                writeln!(
                    out,
                    "{},{},{},{:.4}",
                    task.task_id,
                    order[0] + 1,
                    t.labels[order[0]],
                    hits as f64 / k as f64
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(args.name);
    args.hyper.apply(&mut cfg.hp);
    cfg.scale = args.scale;
    if let Some(r) = args.rounds {
        cfg.rounds = r;
        cfg.split.rounds = r;
    }
    if let Some(s) = args.sigma {
        cfg.sigmas = vec![s];
    }
    let report = if args.name.uses_mnist() {
        let mut set =
            MnistSet::load(&args.data).with_context(|| format!("loading MNIST from {}", args.data.display()))?;
        if let Some(test_dir) = &args.test {
            let test =
                MnistSet::load(test_dir).with_context(|| format!("loading MNIST from {}", test_dir.display()))?;
            set.test_images = test.test_images;
            set.test_labels = test.test_labels;
        }
        run_experiment(ExperimentData::Mnist(&set), &cfg)?
    } else {
        let table = load_arrhythmia(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
        run_experiment(ExperimentData::Arrhythmia(&table), &cfg)?
    };
    let csv = report.to_csv()?;
    match &args.out {
        Some(path) => {
            let tmp = path.with_extension("csv.partial");
            std::fs::write(&tmp, csv).with_context(|| format!("writing {}", tmp.display()))?;
            std::fs::rename(&tmp, path)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<DsvmError>())
        .any(DsvmError::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
