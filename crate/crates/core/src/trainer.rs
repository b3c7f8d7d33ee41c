//! Alternating minimization for D-SVM and MD-SVM.
//!
//! One outer iteration runs three blocks in a fixed order:
//!
//! 1. **w-step**: every task solves a covariance-reweighted SVM.
//! 2. **(α, δ)-step**: every task alternates a nonnegative lasso on its
//!    dictionary coefficients with the closed-form δ update.
//! 3. **B-step**: projected gradient descent on the shared dictionary.
//!
//! The objective tracked after every block is the ν-relaxed objective
//! ([`evaluate_relaxed_objective`]), the function all three blocks descend.
//! Blocks solved inexactly (the SVM and lasso solves) are kept only where they
//! do not increase their task's share of it, so the trace is non-increasing.

use std::io::Write;
use web_time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::{project_capped_simplex, update_delta, update_dictionary, CubicUpdateInputs};
use crate::error::{DsvmError, Result};
use crate::lasso::{build_mean_reg_system, solve_lasso_from, LassoConfig, LassoProblem};
use crate::model::{
    evaluate_relaxed_objective, hinge_sum, DictionaryModel, Hyperparameters, TaskDataset, TaskParameters, TrainState,
    Variant, EPS_DELTA,
};
use crate::svm::{predict, train_reweighted_warm, SvmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Independent baseline SVMs, `δ = max(sqrt(λ2/γ)|w|, ε)`, dictionary
    /// atoms from ℓ1-normalized random mixtures of those δ, each dominated by one task.
    IndependentSvm,
    /// `w = 0`, `α = 0`, `δ = ε`, uniform dictionary `1/(2m)`.
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hp: Hyperparameters,
    pub variant: Variant,
    /// α/δ alternations per outer iteration.
    pub inner_ad_sweeps: usize,
    pub init_strategy: InitStrategy,
    /// Projected gradient steps on the dictionary per outer iteration.
    pub dictionary_steps: usize,
    pub svm_max_epochs: usize,
    /// Skip the B-step.
    pub freeze_dictionary: bool,
    /// Skip the (α, δ)-step, keeping the covariance fixed.
    pub freeze_coefficients: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hp: Hyperparameters::default(),
            variant: Variant::Dsvm,
            inner_ad_sweeps: 3,
            init_strategy: InitStrategy::IndependentSvm,
            dictionary_steps: 25,
            svm_max_epochs: 10_000,
            freeze_dictionary: false,
            freeze_coefficients: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if self.inner_ad_sweeps == 0 {
            return Err(DsvmError::InvalidParameter("inner_ad_sweeps must be >= 1".into()));
        }
        Ok(())
    }

    fn svm_config(&self, seed: u64) -> SvmConfig {
        SvmConfig {
            tol_kkt: self.hp.tol_kkt,
            max_epochs: self.svm_max_epochs,
            seed,
            ..SvmConfig::default()
        }
    }

    /// With a single task `α_t - ᾱ` vanishes, so the term drops out.
    fn mean_regularized(&self, n_tasks: usize) -> bool {
        self.variant == Variant::Mdsvm && self.hp.lambda3 > 0.0 && n_tasks > 1
    }
}

/// Which block produced a trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Init,
    W,
    AlphaDelta,
    Dictionary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub iteration: usize,
    pub block: Block,
    pub objective: f64,
    pub wall_time_secs: f64,
}

pub trait ProgressSink {
    fn record(&mut self, record: &ProgressRecord);
}

/// Discards progress.
pub struct NullSink;

impl ProgressSink for NullSink {
    fn record(&mut self, _record: &ProgressRecord) {}
}

/// Writes one JSON object per line.
pub struct JsonLinesSink<W: Write> {
    out: W,
}

impl<W: Write> JsonLinesSink<W> {
    pub fn new(out: W) -> Self {
        JsonLinesSink { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> ProgressSink for JsonLinesSink<W> {
    fn record(&mut self, record: &ProgressRecord) {
        if let Ok(line) = serde_json::to_string(record) {
            // Progress output is best effort.
            let _ = writeln!(self.out, "{line}");
        }
    }
}

impl ProgressSink for Vec<ProgressRecord> {
    fn record(&mut self, record: &ProgressRecord) {
        self.push(record.clone());
    }
}

/// splitmix64 finalizer, used to derive independent sub-seeds.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(feature = "parallel")]
pub(crate) fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

fn validate_datasets(datasets: &[TaskDataset]) -> Result<usize> {
    let first = datasets
        .first()
        .ok_or_else(|| DsvmError::InvalidData("at least one task is required".into()))?;
    let m = first.n_features();
    for ds in datasets {
        if ds.n_features() != m {
            return Err(DsvmError::dims(
                format!("features of task {}", ds.task_id),
                m,
                ds.n_features(),
            ));
        }
        ds.require_both_classes()?;
        if ds.n_samples() < 2 {
            return Err(DsvmError::InvalidData(format!(
                "task {} needs at least two samples",
                ds.task_id
            )));
        }
    }
    Ok(m)
}

/// `λ1·hinge + λ2 Σ w²/δ`, the part of a task's objective the w-step changes.
fn w_block_value(ds: &TaskDataset, w: ArrayView1<f64>, b: f64, delta: ArrayView1<f64>, hp: &Hyperparameters) -> f64 {
    let quad: f64 = w.iter().zip(delta.iter()).map(|(w, d)| w * w / d).sum();
    hp.lambda1 * hinge_sum(ds.features.view(), ds.labels.view(), w, b) + hp.lambda2 * quad
}

fn lasso_value(problem: &LassoProblem, alpha: ArrayView1<f64>) -> f64 {
    problem.objective(alpha)
}

/// Builds the starting state for `config.init_strategy`.
pub fn initialize(datasets: &[TaskDataset], config: &TrainConfig) -> Result<(TrainState, Vec<Option<Array1<f64>>>)> {
    config.validate()?;
    let m = validate_datasets(datasets)?;
    let t = datasets.len();
    let k = config.hp.resolved_dict_size(t);
    let hp = &config.hp;
    match config.init_strategy {
        InitStrategy::Zeros => {
            let dictionary = DictionaryModel::uniform(m, k, 1.0 / (2.0 * m as f64))?;
            let tasks = (0..t).map(|_| TaskParameters::zeros(m, k)).collect();
            Ok((
                TrainState {
                    dictionary,
                    tasks,
                    objective_trace: Vec::new(),
                },
                vec![None; t],
            ))
        }
        InitStrategy::IndependentSvm => {
            let ones = Array1::from_elem(m, 1.0);
            let fits = map_tasks(t, |i| {
                let cfg = config.svm_config(mix_seed(hp.seed, i as u64, 0));
                train_reweighted_warm(&datasets[i], ones.view(), hp.lambda1, hp.lambda2, &cfg, None, 0.0)
                    .map_err(|e| e.in_task(&datasets[i].task_id))
            });
            let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;
            // δ minimizing λ2 w²/δ + γ δ for the baseline weights
            let scale = (hp.lambda2 / hp.gamma.max(f64::MIN_POSITIVE)).sqrt();
            let deltas: Vec<Array1<f64>> = fits
                .iter()
                .map(|f| f.w.mapv(|w| (scale * w.abs()).max(EPS_DELTA)))
                .collect();

            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(hp.seed, u64::MAX, 1));
            let mut atoms = Array2::<f64>::zeros((m, k));
            for (a, mut col) in atoms.axis_iter_mut(Axis(1)).enumerate() {
                // dominated by task a mod T so every δ_t starts close to the cone of B
                let weights: Vec<f64> = (0..t)
                    .map(|i| 0.05 * rng.random::<f64>() + if i == a % t { 1.0 } else { 0.0 })
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut mix = Array1::<f64>::zeros(m);
                for (d, wgt) in deltas.iter().zip(&weights) {
                    mix.scaled_add(wgt / total, d);
                }
                let mass = mix.sum();
                if mass > 1.0 {
                    mix /= mass;
                }
                col.assign(&project_capped_simplex(mix.view()));
            }
            let dictionary = DictionaryModel::new(atoms)?;
            let lasso_cfg = LassoConfig::default();
            let tasks = map_tasks(t, |i| -> Result<TaskParameters> {
                let problem = LassoProblem::new(dictionary.atoms().clone(), deltas[i].clone(), hp.gamma / hp.nu)?;
                let alpha = solve_lasso_from(&problem, None, &lasso_cfg)?.alpha;
                Ok(TaskParameters {
                    w: fits[i].w.clone(),
                    b: fits[i].b,
                    alpha,
                    delta: deltas[i].clone(),
                    xi_sum: fits[i].hinge_sum,
                })
            });
            let tasks = tasks.into_iter().collect::<Result<Vec<_>>>()?;
            let duals = fits.into_iter().map(|f| Some(f.dual_coeffs)).collect();
            Ok((
                TrainState {
                    dictionary,
                    tasks,
                    objective_trace: Vec::new(),
                },
                duals,
            ))
        }
    }
}

/// Fits all tasks jointly from the configured initialization.
pub fn fit(datasets: &[TaskDataset], config: &TrainConfig) -> Result<TrainState> {
    fit_with_progress(datasets, config, &mut NullSink)
}

pub fn fit_with_progress(
    datasets: &[TaskDataset],
    config: &TrainConfig,
    sink: &mut dyn ProgressSink,
) -> Result<TrainState> {
    let (state, duals) = initialize(datasets, config)?;
    run(datasets, config, state, duals, sink)
}

/// Continues alternating minimization from a caller-supplied state.
pub fn fit_from(
    datasets: &[TaskDataset],
    config: &TrainConfig,
    initial: TrainState,
    sink: &mut dyn ProgressSink,
) -> Result<TrainState> {
    config.validate()?;
    let m = validate_datasets(datasets)?;
    if initial.tasks.len() != datasets.len() {
        return Err(DsvmError::dims(
            "initial task count",
            datasets.len(),
            initial.tasks.len(),
        ));
    }
    if initial.dictionary.dim() != m {
        return Err(DsvmError::dims("initial dictionary rows", m, initial.dictionary.dim()));
    }
    let n = datasets.len();
    run(datasets, config, initial, vec![None; n], sink)
}

fn run(
    datasets: &[TaskDataset],
    config: &TrainConfig,
    mut state: TrainState,
    mut duals: Vec<Option<Array1<f64>>>,
    sink: &mut dyn ProgressSink,
) -> Result<TrainState> {
    let hp = &config.hp;
    let started = Instant::now();
    let mut trace = Vec::new();
    let mut log = |trace: &mut Vec<f64>, iteration: usize, block: Block, value: f64| {
        trace.push(value);
        sink.record(&ProgressRecord {
            iteration,
            block,
            objective: value,
            wall_time_secs: started.elapsed().as_secs_f64(),
        });
    };
    let mut current = evaluate_relaxed_objective(datasets, &state, hp, config.variant)?;
    log(&mut trace, 0, Block::Init, current);

    for iter in 1..=hp.max_outer_iters {
        let start_of_iter = current;

        // w-step
        let updates = map_tasks(datasets.len(), |i| {
            let ds = &datasets[i];
            let p = &state.tasks[i];
            let cfg = config.svm_config(mix_seed(hp.seed, i as u64, iter as u64));
            let fit = train_reweighted_warm(
                ds,
                p.delta.view(),
                hp.lambda1,
                hp.lambda2,
                &cfg,
                duals[i].as_ref().map(|d| d.view()),
                p.b,
            )
            .map_err(|e| e.in_task(&ds.task_id))?;
            let old = w_block_value(ds, p.w.view(), p.b, p.delta.view(), hp);
            let new = w_block_value(ds, fit.w.view(), fit.b, p.delta.view(), hp);
            Ok::<_, DsvmError>((new <= old).then_some(fit))
        });
        for (i, upd) in updates.into_iter().enumerate() {
            if let Some(fit) = upd? {
                let p = &mut state.tasks[i];
                p.w = fit.w;
                p.b = fit.b;
                p.xi_sum = fit.hinge_sum;
                duals[i] = Some(fit.dual_coeffs);
            }
        }
        current = evaluate_relaxed_objective(datasets, &state, hp, config.variant)?;
        log(&mut trace, iter, Block::W, current);

        // (α, δ)-step
        if !config.freeze_coefficients {
            if config.mean_regularized(datasets.len()) {
                for (i, d) in datasets.iter().enumerate() {
                    let updated = alpha_delta_step(&state, i, config).map_err(|e| e.in_task(&d.task_id))?;
                    state.tasks[i].alpha = updated.0;
                    state.tasks[i].delta = updated.1;
                }
            } else {
                let updates = map_tasks(datasets.len(), |i| {
                    alpha_delta_step(&state, i, config).map_err(|e| e.in_task(&datasets[i].task_id))
                });
                for (i, upd) in updates.into_iter().enumerate() {
                    let (alpha, delta) = upd?;
                    state.tasks[i].alpha = alpha;
                    state.tasks[i].delta = delta;
                }
            }
            current = evaluate_relaxed_objective(datasets, &state, hp, config.variant)?;
            log(&mut trace, iter, Block::AlphaDelta, current);
        }

        // B-step
        if !config.freeze_dictionary {
            let deltas: Vec<ArrayView1<f64>> = state.tasks.iter().map(|p| p.delta.view()).collect();
            let alphas: Vec<ArrayView1<f64>> = state.tasks.iter().map(|p| p.alpha.view()).collect();
            let dictionary = update_dictionary(
                &state.dictionary,
                &deltas,
                &alphas,
                hp.step_size,
                config.dictionary_steps,
            )?;
            state.dictionary = dictionary;
            current = evaluate_relaxed_objective(datasets, &state, hp, config.variant)?;
            log(&mut trace, iter, Block::Dictionary, current);
        }

        if (start_of_iter - current).abs() < hp.tol_objective * current.abs() {
            break;
        }
    }

    for (ds, p) in datasets.iter().zip(state.tasks.iter_mut()) {
        p.xi_sum = hinge_sum(ds.features.view(), ds.labels.view(), p.w.view(), p.b);
    }
    state.objective_trace = trace;
    Ok(state)
}

/// `inner_ad_sweeps` alternations of the α lasso and the δ update for task `i`.
/// With mean regularization the other tasks' current coefficients enter the
/// lasso system, so callers run tasks one after another.
fn alpha_delta_step(state: &TrainState, i: usize, config: &TrainConfig) -> Result<(Array1<f64>, Array1<f64>)> {
    let hp = &config.hp;
    let dict = &state.dictionary;
    let task = &state.tasks[i];
    let w_sq = task.w.mapv(|w| w * w);
    let mut alpha = task.alpha.clone();
    let mut delta = task.delta.clone();
    let lasso_cfg = LassoConfig::default();
    for _ in 0..config.inner_ad_sweeps {
        let problem = if config.mean_regularized(state.tasks.len()) {
            let others: Vec<ArrayView1<f64>> = state
                .tasks
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.alpha.view())
                .collect();
            build_mean_reg_system(dict, delta.view(), hp.nu, hp.lambda3, &others, state.tasks.len())?
                .to_problem(hp.gamma)?
        } else {
            LassoProblem::new(dict.atoms().clone(), delta.clone(), hp.gamma / hp.nu)?
        };
        let sol = solve_lasso_from(&problem, Some(alpha.view()), &lasso_cfg)?;
        if lasso_value(&problem, sol.alpha.view()) <= lasso_value(&problem, alpha.view()) {
            alpha = sol.alpha;
        }

        let recon = dict.reconstruct(alpha.view())?;
        let inputs = CubicUpdateInputs::new(w_sq.clone(), recon.clone(), hp.lambda2, hp.nu)?;
        let proposal = update_delta(&inputs);
        let cost = |w2: f64, d: f64, c: f64| hp.lambda2 * w2 / d + hp.nu * (d - c) * (d - c);
        for j in 0..delta.len() {
            if cost(w_sq[j], proposal[j], recon[j]) <= cost(w_sq[j], delta[j], recon[j]) {
                delta[j] = proposal[j];
            }
        }
    }
    Ok((alpha, delta))
}

/// One-vs-rest tasks sharing a dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub class_labels: Vec<i64>,
    pub state: TrainState,
}

impl MulticlassModel {
    /// Per-class scores, one column per class.
    pub fn scores(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((features.nrows(), self.class_labels.len()));
        for (c, p) in self.state.tasks.iter().enumerate() {
            out.column_mut(c).assign(&predict(p.w.view(), p.b, features)?);
        }
        Ok(out)
    }

    /// Argmax of the class scores; ties go to the lowest class index.
    pub fn predict(&self, features: ArrayView2<f64>) -> Result<Vec<i64>> {
        let scores = self.scores(features)?;
        Ok(argmax_rows(scores.view())
            .into_iter()
            .map(|c| self.class_labels[c])
            .collect())
    }
}

/// Index of the largest entry of each row, lowest index on ties.
pub fn argmax_rows(scores: ArrayView2<f64>) -> Vec<usize> {
    scores
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Sorted distinct labels.
pub fn distinct_labels(labels: &[i64]) -> Vec<i64> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    classes
}

/// One binary task per class (that class +1, the rest −1).
pub fn one_vs_rest_tasks(features: ArrayView2<f64>, labels: &[i64], classes: &[i64]) -> Result<Vec<TaskDataset>> {
    if labels.len() != features.nrows() {
        return Err(DsvmError::dims("multiclass labels", features.nrows(), labels.len()));
    }
    classes
        .iter()
        .map(|&c| {
            if !labels.contains(&c) {
                return Err(DsvmError::InvalidLabels(format!("class {c} has no training samples")));
            }
            let y: Array1<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            TaskDataset::new(format!("class_{c}"), features.to_owned(), y)
        })
        .collect()
}

pub fn fit_one_vs_rest(features: ArrayView2<f64>, labels: &[i64], config: &TrainConfig) -> Result<MulticlassModel> {
    let classes = distinct_labels(labels);
    fit_one_vs_rest_with_classes(features, labels, &classes, config)
}

/// Like [`fit_one_vs_rest`] with an explicit class list; every listed class
/// must occur in `labels`.
pub fn fit_one_vs_rest_with_classes(
    features: ArrayView2<f64>,
    labels: &[i64],
    classes: &[i64],
    config: &TrainConfig,
) -> Result<MulticlassModel> {
    if classes.len() < 2 {
        return Err(DsvmError::InvalidLabels("at least two classes are required".into()));
    }
    let tasks = one_vs_rest_tasks(features, labels, classes)?;
    let state = fit(&tasks, config)?;
    Ok(MulticlassModel {
        class_labels: classes.to_vec(),
        state,
    })
}

/// One task per positive row, each against the full shared negative pool.
pub fn exemplar_tasks(positives: ArrayView2<f64>, negatives: ArrayView2<f64>) -> Result<Vec<TaskDataset>> {
    if negatives.nrows() == 0 {
        return Err(DsvmError::InvalidData("exemplar training needs negatives".into()));
    }
    if positives.nrows() == 0 {
        return Err(DsvmError::InvalidData(
            "exemplar training needs at least one positive".into(),
        ));
    }
    if positives.ncols() != negatives.ncols() {
        return Err(DsvmError::dims(
            "exemplar features",
            negatives.ncols(),
            positives.ncols(),
        ));
    }
    let n = negatives.nrows() + 1;
    let mut labels = Array1::from_elem(n, -1.0);
    labels[0] = 1.0;
    positives
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(e, pos)| {
            let mut x = Array2::zeros((n, negatives.ncols()));
            x.row_mut(0).assign(&pos);
            x.slice_mut(ndarray::s![1.., ..]).assign(&negatives);
            TaskDataset::new(format!("exemplar_{e}"), x, labels.clone())
        })
        .collect()
}

/// Exemplar SVMs trained jointly: each row of `positives` is one task.
pub fn fit_exemplar(
    positives: ArrayView2<f64>,
    negatives: ArrayView2<f64>,
    config: &TrainConfig,
) -> Result<TrainState> {
    let tasks = exemplar_tasks(positives, negatives)?;
    fit(&tasks, config)
}

/// Independent baseline SVMs (`δ = 1`, i.e. `λ2||w||² + λ1Σξ`) for each task.
pub fn fit_independent(
    datasets: &[TaskDataset],
    hp: &Hyperparameters,
    svm_max_epochs: usize,
) -> Result<Vec<(Array1<f64>, f64)>> {
    validate_datasets(datasets)?;
    let m = datasets[0].n_features();
    let ones = Array1::from_elem(m, 1.0);
    let fits = map_tasks(datasets.len(), |i| {
        let cfg = SvmConfig {
            tol_kkt: hp.tol_kkt,
            max_epochs: svm_max_epochs,
            seed: mix_seed(hp.seed, i as u64, 0),
            ..SvmConfig::default()
        };
        train_reweighted_warm(&datasets[i], ones.view(), hp.lambda1, hp.lambda2, &cfg, None, 0.0)
            .map(|f| (f.w, f.b))
            .map_err(|e| e.in_task(&datasets[i].task_id))
    });
    fits.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn argmax_ties_to_lowest_index() {
        let s = array![[1.0, 1.0, 0.0], [0.0, 2.0, 2.0], [-1.0, -1.0, -1.0]];
        assert_eq!(argmax_rows(s.view()), vec![0, 1, 0]);
    }

    #[test]
    fn exemplar_requires_negatives() {
        let pos = array![[1.0, 2.0]];
        let neg = Array2::<f64>::zeros((0, 2));
        assert!(exemplar_tasks(pos.view(), neg.view()).is_err());
    }

    #[test]
    fn exemplar_task_layout() {
        let pos = array![[1.0, 2.0], [3.0, 4.0]];
        let neg = array![[0.0, 0.0], [-1.0, -1.0]];
        let tasks = exemplar_tasks(pos.view(), neg.view()).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[1].features.row(0), array![3.0, 4.0]);
        assert_eq!(tasks[1].labels, array![1.0, -1.0, -1.0]);
    }

    #[test]
    fn one_vs_rest_missing_class() {
        let x = array![[1.0], [2.0]];
        assert!(one_vs_rest_tasks(x.view(), &[0, 1], &[0, 1, 2]).is_err());
    }

    #[test]
    fn progress_lines_are_json() {
        let mut sink = JsonLinesSink::new(Vec::new());
        sink.record(&ProgressRecord {
            iteration: 2,
            block: Block::AlphaDelta,
            objective: 1.5,
            wall_time_secs: 0.0,
        });
        let text = String::from_utf8(sink.into_inner()).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["block"], "alpha_delta");
        assert_eq!(v["iteration"], 2);
    }

    #[test]
    fn seeds_differ_across_tasks_and_iterations() {
        assert_ne!(mix_seed(1, 0, 1), mix_seed(1, 1, 0));
        assert_ne!(mix_seed(1, 0, 1), mix_seed(1, 0, 2));
        assert_eq!(mix_seed(7, 3, 4), mix_seed(7, 3, 4));
    }
}
