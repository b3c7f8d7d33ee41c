//! Domain types for the dictionary-regularized multi-task SVM and the
//! transforms shared by every solver.
//!
//! Each task `t` owns a linear classifier `(w_t, b_t)` whose weights follow a
//! zero-mean Gaussian prior with diagonal covariance `Diag(delta_t)`, where
//! `delta_t ≈ B·alpha_t` is assembled from a nonnegative dictionary `B` shared
//! by all tasks. The training objective is
//!
//! ```text
//! Σ_t [ λ1 Σ_i hinge_ti + λ2 Σ_j w_tj² / δ_tj + γ ||α_t||₁ ]  (+ λ3 Σ_t ||α_t − ᾱ||²)
//! ```
//!
//! Slack values are never stored as free variables; they are recomputed from
//! the current `(w, b)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{DsvmError, Result};

/// Positivity floor applied to every covariance diagonal entry.
pub const EPS_DELTA: f64 = 1e-8;

/// Tolerance on the dictionary column ℓ₁ cap.
pub const COLUMN_CAP_TOL: f64 = 1e-12;

/// One binary classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub task_id: String,
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
}

impl TaskDataset {
    pub fn new(task_id: impl Into<String>, features: Array2<f64>, labels: Array1<f64>) -> Result<Self> {
        let task_id = task_id.into();
        let (n, _) = features.dim();
        if n == 0 {
            return Err(DsvmError::InvalidData(format!("task {task_id} has no samples")));
        }
        if labels.len() != n {
            return Err(DsvmError::dims(format!("labels of task {task_id}"), n, labels.len()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DsvmError::InvalidData(format!(
                "task {task_id} contains non-finite feature values"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(DsvmError::InvalidLabels(format!(
                "task {task_id}: label {bad} is not ±1"
            )));
        }
        Ok(TaskDataset {
            task_id,
            features,
            labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Training needs at least one sample of each sign.
    pub fn require_both_classes(&self) -> Result<()> {
        let pos = self.labels.iter().any(|&y| y > 0.0);
        let neg = self.labels.iter().any(|&y| y < 0.0);
        if pos && neg {
            Ok(())
        } else {
            Err(DsvmError::InvalidLabels(format!(
                "task {} needs both +1 and -1 labels",
                self.task_id
            )))
        }
    }
}

/// Nonnegative `m × K` covariance dictionary with columns of ℓ₁ norm at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryModel {
    atoms: Array2<f64>,
}

impl DictionaryModel {
    pub fn new(atoms: Array2<f64>) -> Result<Self> {
        if atoms.ncols() == 0 || atoms.nrows() == 0 {
            return Err(DsvmError::InvalidParameter(
                "dictionary needs at least one row and one atom".into(),
            ));
        }
        if let Some(v) = atoms.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(DsvmError::InvalidParameter(format!(
                "dictionary entries must be finite and nonnegative, found {v}"
            )));
        }
        for (j, col) in atoms.axis_iter(Axis(1)).enumerate() {
            let l1: f64 = col.sum();
            if l1 > 1.0 + COLUMN_CAP_TOL {
                return Err(DsvmError::InvalidParameter(format!(
                    "dictionary column {j} has l1 norm {l1} > 1"
                )));
            }
        }
        Ok(DictionaryModel { atoms })
    }

    /// Every entry set to `value`; requires `m · value ≤ 1`.
    pub fn uniform(dim: usize, atoms: usize, value: f64) -> Result<Self> {
        Self::new(Array2::from_elem((dim, atoms), value))
    }

    pub(crate) fn from_projected(atoms: Array2<f64>) -> Self {
        debug_assert!(atoms.iter().all(|v| *v >= 0.0));
        DictionaryModel { atoms }
    }

    pub fn atoms(&self) -> &Array2<f64> {
        &self.atoms
    }

    pub fn into_atoms(self) -> Array2<f64> {
        self.atoms
    }

    /// Feature dimension `m`.
    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Atom count `K`.
    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    /// `B·alpha` without the positivity floor.
    pub fn reconstruct(&self, alpha: ArrayView1<f64>) -> Result<Array1<f64>> {
        if alpha.len() != self.n_atoms() {
            return Err(DsvmError::dims("dictionary coefficients", self.n_atoms(), alpha.len()));
        }
        Ok(self.atoms.dot(&alpha))
    }
}

/// Per-task parameters `(w, b, alpha, delta)` plus the cached slack total.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskParameters {
    pub w: Array1<f64>,
    pub b: f64,
    pub alpha: Array1<f64>,
    pub delta: Array1<f64>,
    pub xi_sum: f64,
}

impl TaskParameters {
    pub fn zeros(dim: usize, atoms: usize) -> Self {
        TaskParameters {
            w: Array1::zeros(dim),
            b: 0.0,
            alpha: Array1::zeros(atoms),
            delta: Array1::from_elem(dim, EPS_DELTA),
            xi_sum: 0.0,
        }
    }

    /// Largest deviation `||delta − B·alpha||∞` left by the soft coupling.
    pub fn coupling_gap(&self, dictionary: &DictionaryModel) -> Result<f64> {
        let recon = dictionary.reconstruct(self.alpha.view())?;
        Ok(self
            .delta
            .iter()
            .zip(recon.iter())
            .fold(0.0_f64, |acc, (d, r)| acc.max((d - r).abs())))
    }
}

/// Which objective is being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Shared dictionary only.
    Dsvm,
    /// Shared dictionary plus `λ3 Σ_t ||α_t − ᾱ||²`.
    Mdsvm,
}

impl std::str::FromStr for Variant {
    type Err = DsvmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dsvm" => Ok(Variant::Dsvm),
            "mdsvm" => Ok(Variant::Mdsvm),
            other => Err(DsvmError::InvalidParameter(format!("unknown variant {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Weight of the hinge slacks.
    pub lambda1: f64,
    /// Weight of `w^T Diag(δ)^{-1} w`.
    pub lambda2: f64,
    /// Mean-regularization weight; zero reduces MD-SVM to D-SVM.
    pub lambda3: f64,
    /// ℓ₁ weight on the dictionary coefficients.
    pub gamma: f64,
    /// Penalty coupling `delta` to `B·alpha`.
    pub nu: f64,
    /// Dictionary size `K`; `None` resolves to `min(2T, 400)` at fit time.
    pub dict_size: Option<usize>,
    /// Initial dictionary gradient step, refined by backtracking.
    pub step_size: f64,
    pub max_outer_iters: usize,
    pub tol_objective: f64,
    pub tol_kkt: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            lambda1: 1.0,
            lambda2: 10.0,
            lambda3: 0.0,
            gamma: 0.1,
            nu: 1e3,
            dict_size: None,
            step_size: 1.0,
            max_outer_iters: 50,
            tol_objective: 1e-5,
            tol_kkt: 1e-6,
            seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(DsvmError::InvalidParameter(format!("{name} must be > 0, got {v}")))
            }
        }
        fn nonneg(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(DsvmError::InvalidParameter(format!("{name} must be >= 0, got {v}")))
            }
        }
        positive("lambda1", self.lambda1)?;
        positive("lambda2", self.lambda2)?;
        nonneg("lambda3", self.lambda3)?;
        nonneg("gamma", self.gamma)?;
        positive("nu", self.nu)?;
        positive("step_size", self.step_size)?;
        nonneg("tol_objective", self.tol_objective)?;
        positive("tol_kkt", self.tol_kkt)?;
        if self.dict_size == Some(0) {
            return Err(DsvmError::InvalidParameter("dict_size must be >= 1".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(DsvmError::InvalidParameter("max_outer_iters must be >= 1".into()));
        }
        Ok(())
    }

    pub fn resolved_dict_size(&self, n_tasks: usize) -> usize {
        self.dict_size.unwrap_or_else(|| (2 * n_tasks).clamp(1, 400))
    }
}

/// Everything the alternating minimization carries between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub dictionary: DictionaryModel,
    pub tasks: Vec<TaskParameters>,
    pub objective_trace: Vec<f64>,
}

/// `delta_i = max((B·alpha)_i, EPS_DELTA)`.
pub fn assemble_covariance(dictionary: &DictionaryModel, alpha: ArrayView1<f64>) -> Result<Array1<f64>> {
    if let Some(a) = alpha.iter().find(|a| !(**a >= 0.0)) {
        return Err(DsvmError::InvalidParameter(format!(
            "dictionary coefficients must be nonnegative, found {a}"
        )));
    }
    Ok(dictionary.reconstruct(alpha)?.mapv(|d| d.max(EPS_DELTA)))
}

fn kernel_scales(delta: ArrayView1<f64>, lambda2: f64) -> Result<Array1<f64>> {
    if !(lambda2 > 0.0) || !lambda2.is_finite() {
        return Err(DsvmError::InvalidParameter(format!(
            "lambda2 must be > 0, got {lambda2}"
        )));
    }
    if let Some(d) = delta.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(DsvmError::InvalidParameter(format!(
            "covariance entries must be positive, found {d}"
        )));
    }
    Ok(delta.mapv(|d| (d / lambda2).sqrt()))
}

/// Scales column `j` by `sqrt(delta_j / lambda2)`, i.e. applies `K^{-1/2}`
/// with `K = lambda2 · Diag(delta)^{-1}`.
pub fn reweight_features(features: ArrayView2<f64>, delta: ArrayView1<f64>, lambda2: f64) -> Result<Array2<f64>> {
    if features.ncols() != delta.len() {
        return Err(DsvmError::dims("reweight features", delta.len(), features.ncols()));
    }
    let scales = kernel_scales(delta, lambda2)?;
    Ok(&features * &scales)
}

/// Maps weights learned on reweighted features back to the original space.
/// `recover_weights(w̃)·x == w̃·reweight_features(x)` for every `x`.
pub fn recover_weights(w_tilde: ArrayView1<f64>, delta: ArrayView1<f64>, lambda2: f64) -> Result<Array1<f64>> {
    if w_tilde.len() != delta.len() {
        return Err(DsvmError::dims("recover weights", delta.len(), w_tilde.len()));
    }
    let scales = kernel_scales(delta, lambda2)?;
    Ok(&w_tilde * &scales)
}

/// `Σ_i max(0, 1 − y_i (w·x_i + b))`.
pub fn hinge_sum(features: ArrayView2<f64>, labels: ArrayView1<f64>, w: ArrayView1<f64>, b: f64) -> f64 {
    let scores = features.dot(&w);
    Zip::from(&scores)
        .and(&labels)
        .fold(0.0, |acc, s, y| acc + (1.0 - y * (s + b)).max(0.0))
}

/// `λ1 · hinge + λ2 Σ w²/δ + γ ||α||₁` for one task.
pub fn task_objective(dataset: &TaskDataset, params: &TaskParameters, hp: &Hyperparameters) -> Result<f64> {
    let m = dataset.n_features();
    if params.w.len() != m {
        return Err(DsvmError::dims(
            format!("weights of task {}", dataset.task_id),
            m,
            params.w.len(),
        ));
    }
    if params.delta.len() != m {
        return Err(DsvmError::dims(
            format!("covariance of task {}", dataset.task_id),
            m,
            params.delta.len(),
        ));
    }
    let hinge = hinge_sum(
        dataset.features.view(),
        dataset.labels.view(),
        params.w.view(),
        params.b,
    );
    let quad: f64 = Zip::from(&params.w)
        .and(&params.delta)
        .fold(0.0, |acc, w, d| acc + w * w / d);
    let l1: f64 = params.alpha.iter().map(|a| a.abs()).sum();
    Ok(hp.lambda1 * hinge + hp.lambda2 * quad + hp.gamma * l1)
}

/// `Σ_t ||α_t − ᾱ||²`.
pub fn mean_deviation<'a>(alphas: impl IntoIterator<Item = &'a Array1<f64>>) -> f64 {
    let alphas: Vec<&Array1<f64>> = alphas.into_iter().collect();
    if alphas.is_empty() {
        return 0.0;
    }
    let mut mean = Array1::<f64>::zeros(alphas[0].len());
    for a in &alphas {
        mean += *a;
    }
    mean /= alphas.len() as f64;
    alphas
        .iter()
        .map(|a| a.iter().zip(mean.iter()).map(|(x, m)| (x - m).powi(2)).sum::<f64>())
        .sum()
}

fn check_state(datasets: &[TaskDataset], state: &TrainState) -> Result<()> {
    if datasets.len() != state.tasks.len() {
        return Err(DsvmError::dims("task count", datasets.len(), state.tasks.len()));
    }
    let k = state.dictionary.n_atoms();
    for (ds, p) in datasets.iter().zip(&state.tasks) {
        if p.alpha.len() != k {
            return Err(DsvmError::dims(
                format!("coefficients of task {}", ds.task_id),
                k,
                p.alpha.len(),
            ));
        }
        if ds.n_features() != state.dictionary.dim() {
            return Err(DsvmError::dims(
                format!("features of task {}", ds.task_id),
                state.dictionary.dim(),
                ds.n_features(),
            ));
        }
    }
    Ok(())
}

/// The D-SVM objective, or the MD-SVM objective when `variant` is `Mdsvm`.
/// Slacks are recomputed from the current `(w, b)`.
pub fn evaluate_objective(
    datasets: &[TaskDataset],
    state: &TrainState,
    hp: &Hyperparameters,
    variant: Variant,
) -> Result<f64> {
    check_state(datasets, state)?;
    let mut total = 0.0;
    for (ds, p) in datasets.iter().zip(&state.tasks) {
        total += task_objective(ds, p, hp)?;
    }
    if variant == Variant::Mdsvm && hp.lambda3 > 0.0 {
        total += hp.lambda3 * mean_deviation(state.tasks.iter().map(|p| &p.alpha));
    }
    Ok(total)
}

/// `Σ_t ||delta_t − B·alpha_t||²`, the dictionary fitting error.
pub fn coupling_residual(state: &TrainState) -> Result<f64> {
    let mut total = 0.0;
    for p in &state.tasks {
        let recon = state.dictionary.reconstruct(p.alpha.view())?;
        total += p
            .delta
            .iter()
            .zip(recon.iter())
            .map(|(d, r)| (d - r).powi(2))
            .sum::<f64>();
    }
    Ok(total)
}

/// The objective with the equality `delta = B·alpha` relaxed into the
/// penalty `ν Σ_t ||delta_t − B·alpha_t||²`. This is the quantity each block
/// update of the trainer is guaranteed not to increase.
pub fn evaluate_relaxed_objective(
    datasets: &[TaskDataset],
    state: &TrainState,
    hp: &Hyperparameters,
    variant: Variant,
) -> Result<f64> {
    Ok(evaluate_objective(datasets, state, hp, variant)? + hp.nu * coupling_residual(state)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds(x: Array2<f64>, y: Array1<f64>) -> TaskDataset {
        TaskDataset::new("t", x, y).unwrap()
    }

    #[test]
    fn covariance_identity_dictionary() {
        let b = DictionaryModel::new(Array2::eye(2)).unwrap();
        let d = assemble_covariance(&b, array![1.0, 1.0].view()).unwrap();
        assert_eq!(d, array![1.0, 1.0]);
    }

    #[test]
    fn covariance_matrix_vector_product() {
        let b = DictionaryModel::new(array![[0.5, 0.2], [0.1, 0.3]]).unwrap();
        let d = assemble_covariance(&b, array![1.0, 2.0].view()).unwrap();
        // 0.5 + 0.4, 0.1 + 0.6
        assert!((d[0] - 0.9).abs() < 1e-15);
        assert!((d[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn covariance_zero_coefficients_floored() {
        let b = DictionaryModel::new(array![[0.5, 0.2], [0.1, 0.3], [0.0, 0.5]]).unwrap();
        let d = assemble_covariance(&b, array![0.0, 0.0].view()).unwrap();
        assert!(d.iter().all(|&v| v == EPS_DELTA));
    }

    #[test]
    fn covariance_errors() {
        let b = DictionaryModel::new(Array2::eye(2)).unwrap();
        assert!(matches!(
            assemble_covariance(&b, array![1.0].view()),
            Err(DsvmError::DimensionMismatch { .. })
        ));
        assert!(assemble_covariance(&b, array![1.0, -0.5].view()).is_err());
    }

    #[test]
    fn dictionary_invariants_enforced() {
        assert!(DictionaryModel::new(array![[0.6], [0.5]]).is_err());
        assert!(DictionaryModel::new(array![[-0.1], [0.5]]).is_err());
        assert!(DictionaryModel::new(array![[0.5], [0.5]]).is_ok());
    }

    #[test]
    fn reweight_examples() {
        let x = array![[1.0, -2.0], [3.0, 4.0]];
        let same = reweight_features(x.view(), array![1.0, 1.0].view(), 1.0).unwrap();
        assert_eq!(same, x);
        let half = reweight_features(x.view(), array![1.0, 1.0].view(), 4.0).unwrap();
        assert_eq!(half, &x / 2.0);
        let xt = reweight_features(array![[2.0, 0.0]].view(), array![0.25, 9.0].view(), 1.0).unwrap();
        assert_eq!(xt, array![[1.0, 0.0]]);
        assert!(reweight_features(x.view(), array![1.0, 0.0].view(), 1.0).is_err());
        assert!(reweight_features(x.view(), array![1.0, 1.0].view(), 0.0).is_err());
    }

    #[test]
    fn recover_examples() {
        let w = recover_weights(array![1.5, -2.0].view(), array![1.0, 1.0].view(), 1.0).unwrap();
        assert_eq!(w, array![1.5, -2.0]);
        let w = recover_weights(array![2.0].view(), array![4.0].view(), 1.0).unwrap();
        assert_eq!(w, array![4.0]);
        assert!(recover_weights(array![2.0].view(), array![-4.0].view(), 1.0).is_err());
    }

    #[test]
    fn objective_at_zero_is_lambda1_times_samples() {
        let d1 = ds(array![[1.0, 2.0], [0.0, 1.0], [3.0, 1.0]], array![1.0, -1.0, 1.0]);
        let d2 = ds(array![[1.0, 0.0], [2.0, 2.0]], array![-1.0, 1.0]);
        let dict = DictionaryModel::uniform(2, 3, 0.25).unwrap();
        let state = TrainState {
            dictionary: dict,
            tasks: vec![TaskParameters::zeros(2, 3), TaskParameters::zeros(2, 3)],
            objective_trace: vec![],
        };
        let hp = Hyperparameters {
            lambda1: 0.7,
            ..Default::default()
        };
        let j = evaluate_objective(&[d1, d2], &state, &hp, Variant::Dsvm).unwrap();
        assert!((j - 0.7 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn objective_hand_evaluation() {
        let d = ds(array![[1.0]], array![1.0]);
        let state = TrainState {
            dictionary: DictionaryModel::new(array![[1.0]]).unwrap(),
            tasks: vec![TaskParameters {
                w: array![1.0],
                b: 0.0,
                alpha: array![1.0],
                delta: array![1.0],
                xi_sum: 0.0,
            }],
            objective_trace: vec![],
        };
        let hp = Hyperparameters {
            lambda1: 1.0,
            lambda2: 1.0,
            gamma: 1.0,
            ..Default::default()
        };
        let j = evaluate_objective(&[d], &state, &hp, Variant::Dsvm).unwrap();
        assert!((j - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mdsvm_with_identical_alphas_equals_dsvm() {
        let d1 = ds(array![[1.0, 2.0], [0.0, 1.0]], array![1.0, -1.0]);
        let d2 = ds(array![[1.0, 0.0], [2.0, 2.0]], array![-1.0, 1.0]);
        let p = TaskParameters {
            w: array![0.3, -0.2],
            b: 0.1,
            alpha: array![0.5, 1.5],
            delta: array![0.4, 0.9],
            xi_sum: 0.0,
        };
        let state = TrainState {
            dictionary: DictionaryModel::uniform(2, 2, 0.5).unwrap(),
            tasks: vec![p.clone(), p],
            objective_trace: vec![],
        };
        let hp = Hyperparameters {
            lambda3: 5.0,
            ..Default::default()
        };
        let datasets = [d1, d2];
        let a = evaluate_objective(&datasets, &state, &hp, Variant::Dsvm).unwrap();
        let b = evaluate_objective(&datasets, &state, &hp, Variant::Mdsvm).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_dimension_mismatch() {
        let d = ds(array![[1.0, 2.0]], array![1.0]);
        let state = TrainState {
            dictionary: DictionaryModel::uniform(3, 1, 0.1).unwrap(),
            tasks: vec![TaskParameters::zeros(3, 1)],
            objective_trace: vec![],
        };
        assert!(evaluate_objective(&[d], &state, &Hyperparameters::default(), Variant::Dsvm).is_err());
    }

    #[test]
    fn task_dataset_validation() {
        assert!(TaskDataset::new("a", Array2::zeros((0, 2)), Array1::zeros(0)).is_err());
        assert!(TaskDataset::new("a", array![[1.0]], array![0.5]).is_err());
        assert!(TaskDataset::new("a", array![[f64::NAN]], array![1.0]).is_err());
        assert!(TaskDataset::new("a", array![[1.0]], array![1.0, -1.0]).is_err());
        let single = TaskDataset::new("a", array![[1.0], [2.0]], array![1.0, 1.0]).unwrap();
        assert!(single.require_both_classes().is_err());
    }

    #[test]
    fn hyperparameter_validation() {
        assert!(Hyperparameters::default().validate().is_ok());
        for bad in [
            Hyperparameters {
                lambda1: 0.0,
                ..Default::default()
            },
            Hyperparameters {
                lambda2: -1.0,
                ..Default::default()
            },
            Hyperparameters {
                lambda3: -1.0,
                ..Default::default()
            },
            Hyperparameters {
                nu: 0.0,
                ..Default::default()
            },
            Hyperparameters {
                dict_size: Some(0),
                ..Default::default()
            },
            Hyperparameters {
                step_size: 0.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        assert_eq!(Hyperparameters::default().resolved_dict_size(3), 6);
        assert_eq!(Hyperparameters::default().resolved_dict_size(1000), 400);
    }
}
