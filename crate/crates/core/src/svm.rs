//! Soft-margin linear SVM solved in the dual by coordinate descent.
//!
//! The primal problem is
//!
//! ```text
//! min_{w,b}  ½ ||w||² + C Σ_i ξ_i   s.t.  y_i (w·x_i + b) ≥ 1 − ξ_i,  ξ_i ≥ 0
//! ```
//!
//! with an unregularized bias. The dual coordinate descent works on features
//! augmented by a constant column of value `bias_scale`, which turns the bias
//! into an ordinary (weakly regularized) weight and keeps every update a
//! scalar box projection. The regularization this puts on the bias is then
//! removed by proximal rounds: the bias found in one round becomes a fixed
//! offset for the next, so at the fixed point the augmented weight vanishes
//! and `Σ_i α_i y_i = 0` holds, which is the optimality condition of the
//! unregularized bias.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DsvmError, Result};
use crate::model::{hinge_sum, recover_weights, reweight_features, TaskDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    /// Stop once the largest projected-gradient magnitude in an epoch is below this.
    pub tol_kkt: f64,
    pub max_epochs: usize,
    /// Value of the constant feature that carries the bias.
    pub bias_scale: f64,
    /// Cap on proximal bias rounds.
    pub max_bias_rounds: usize,
    /// Seed of the per-epoch permutation stream.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            tol_kkt: 1e-6,
            max_epochs: 10_000,
            bias_scale: 1.0,
            max_bias_rounds: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub w: Array1<f64>,
    pub b: f64,
    /// Dual variables, each in `[0, C]`.
    pub dual_coeffs: Array1<f64>,
    /// `½||w||² + C Σ hinge` at the returned `(w, b)`.
    pub primal_objective: f64,
    /// Dual value of the final proximal subproblem.
    pub dual_objective: f64,
    /// Largest projected-gradient magnitude seen in the last epoch.
    pub max_violation: f64,
    /// Total epochs over all bias rounds.
    pub epochs: usize,
    /// False when the epoch cap was hit before the KKT tolerance.
    pub converged: bool,
}

impl SvmSolution {
    pub fn duality_gap(&self) -> f64 {
        self.primal_objective - self.dual_objective
    }
}

fn check_labels(labels: ArrayView1<f64>) -> Result<()> {
    let mut pos = false;
    let mut neg = false;
    for &y in labels {
        if y == 1.0 {
            pos = true;
        } else if y == -1.0 {
            neg = true;
        } else {
            return Err(DsvmError::InvalidLabels(format!("label {y} is not ±1")));
        }
    }
    if pos && neg {
        Ok(())
    } else {
        Err(DsvmError::InvalidLabels("both +1 and -1 labels are required".into()))
    }
}

/// Nonzeros of each row, stored contiguously.
struct SparseRows {
    start: Vec<usize>,
    index: Vec<u32>,
    value: Vec<f64>,
}

impl SparseRows {
    fn new(x: ArrayView2<f64>) -> Self {
        let mut start = Vec::with_capacity(x.nrows() + 1);
        let mut index = Vec::new();
        let mut value = Vec::new();
        start.push(0);
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    index.push(j as u32);
                    value.push(v);
                }
            }
            start.push(index.len());
        }
        SparseRows { start, index, value }
    }

    fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.start[i]..self.start[i + 1];
        (&self.index[r.clone()], &self.value[r])
    }
}

/// Trains from scratch. See [`train_linear_svm_warm`].
pub fn train_linear_svm(
    features: ArrayView2<f64>,
    labels: ArrayView1<f64>,
    cost: f64,
    config: &SvmConfig,
) -> Result<SvmSolution> {
    train_linear_svm_warm(features, labels, cost, config, None, 0.0)
}

/// Trains starting from the given dual point (clipped into `[0, C]`) and bias offset.
pub fn train_linear_svm_warm(
    features: ArrayView2<f64>,
    labels: ArrayView1<f64>,
    cost: f64,
    config: &SvmConfig,
    warm_dual: Option<ArrayView1<f64>>,
    warm_bias: f64,
) -> Result<SvmSolution> {
    let (n, m) = features.dim();
    if labels.len() != n {
        return Err(DsvmError::dims("svm labels", n, labels.len()));
    }
    if n < 2 {
        return Err(DsvmError::InvalidData("svm needs at least two samples".into()));
    }
    if !(cost > 0.0) || !cost.is_finite() {
        return Err(DsvmError::InvalidParameter(format!("cost must be > 0, got {cost}")));
    }
    if !(config.bias_scale > 0.0) {
        return Err(DsvmError::InvalidParameter("bias_scale must be > 0".into()));
    }
    check_labels(labels)?;

    let rows = SparseRows::new(features);
    let y: Vec<f64> = labels.to_vec();
    let s = config.bias_scale;
    let diag: Vec<f64> = (0..n)
        .map(|i| rows.row(i).1.iter().map(|v| v * v).sum::<f64>() + s * s)
        .collect();

    let mut alpha: Vec<f64> = match warm_dual {
        Some(a) if a.len() == n => a.iter().map(|v| v.clamp(0.0, cost)).collect(),
        Some(a) => return Err(DsvmError::dims("svm warm start", n, a.len())),
        None => vec![0.0; n],
    };
    let mut w = vec![0.0; m];
    let mut ysum = 0.0;
    for i in 0..n {
        if alpha[i] != 0.0 {
            let c = alpha[i] * y[i];
            let (idx, val) = rows.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                w[j as usize] += c * v;
            }
            ysum += c;
        }
    }
    // Augmented weight v = s Σ α_i y_i; total bias = offset + s·v.
    let mut offset = if warm_bias.is_finite() { warm_bias } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epochs = 0usize;
    let mut converged = false;
    let mut max_violation = f64::INFINITY;

    for _round in 0..config.max_bias_rounds.max(1) {
        converged = false;
        // Shrinking: variables at a bound whose gradient points outward by
        // more than last epoch's extreme projected gradient are skipped until
        // the active set converges, then everything is checked again.
        let mut active = n;
        let mut pg_max_old = f64::INFINITY;
        let mut pg_min_old = f64::NEG_INFINITY;
        while epochs < config.max_epochs {
            epochs += 1;
            order[..active].shuffle(&mut rng);
            let mut pg_max = f64::NEG_INFINITY;
            let mut pg_min = f64::INFINITY;
            let mut k = 0;
            while k < active {
                let i = order[k];
                let (idx, val) = rows.row(i);
                let margin: f64 =
                    idx.iter().zip(val).map(|(&j, v)| w[j as usize] * v).sum::<f64>() + s * s * ysum + offset;
                let g = y[i] * margin - 1.0;
                let a = alpha[i];
                let pg = if a <= 0.0 {
                    if g > pg_max_old {
                        active -= 1;
                        order.swap(k, active);
                        continue;
                    }
                    g.min(0.0)
                } else if a >= cost {
                    if g < pg_min_old {
                        active -= 1;
                        order.swap(k, active);
                        continue;
                    }
                    g.max(0.0)
                } else {
                    g
                };
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);
                if pg != 0.0 {
                    let new_a = (a - g / diag[i]).clamp(0.0, cost);
                    let step = (new_a - a) * y[i];
                    if step != 0.0 {
                        alpha[i] = new_a;
                        for (&j, &v) in idx.iter().zip(val) {
                            w[j as usize] += step * v;
                        }
                        ysum += step;
                    }
                }
                k += 1;
            }
            max_violation = pg_max.max(-pg_min).max(0.0);
            if max_violation <= config.tol_kkt {
                if active == n {
                    converged = true;
                    break;
                }
                active = n;
                pg_max_old = f64::INFINITY;
                pg_min_old = f64::NEG_INFINITY;
                continue;
            }
            pg_max_old = if pg_max <= 0.0 { f64::INFINITY } else { pg_max };
            pg_min_old = if pg_min >= 0.0 { f64::NEG_INFINITY } else { pg_min };
        }
        let shift = s * s * ysum;
        if !converged || shift.abs() <= config.tol_kkt * 1e-3 * (1.0 + offset.abs()) {
            break;
        }
        // The bias found by this round becomes the fixed offset of the next.
        // The dual point is kept, so its augmented weight is re-penalized
        // around the new offset.
        offset += shift;
    }

    let b = offset + s * s * ysum;
    let w = Array1::from(w);
    let alpha = Array1::from(alpha);
    let hinge = hinge_sum(features, labels, w.view(), b);
    let wsq = w.dot(&w);
    let primal = 0.5 * wsq + cost * hinge;
    let v = s * ysum;
    let dual = alpha.iter().zip(&y).map(|(a, yi)| a * (1.0 - yi * offset)).sum::<f64>() - 0.5 * wsq - 0.5 * v * v;
    Ok(SvmSolution {
        w,
        b,
        dual_coeffs: alpha,
        primal_objective: primal,
        dual_objective: dual,
        max_violation,
        epochs,
        converged,
    })
}

/// `scores_i = w·x_i + b`.
pub fn predict(w: ArrayView1<f64>, b: f64, features: ArrayView2<f64>) -> Result<Array1<f64>> {
    if features.ncols() != w.len() {
        return Err(DsvmError::dims("predict features", w.len(), features.ncols()));
    }
    Ok(features.dot(&w) + b)
}

/// Sign of the scores with `sign(0) = +1`.
pub fn scores_to_labels(scores: ArrayView1<f64>) -> Array1<f64> {
    scores.mapv(|s| if s >= 0.0 { 1.0 } else { -1.0 })
}

pub fn predict_labels(w: ArrayView1<f64>, b: f64, features: ArrayView2<f64>) -> Result<Array1<f64>> {
    Ok(scores_to_labels(predict(w, b, features)?.view()))
}

/// Result of one covariance-reweighted w-step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightedFit {
    pub w: Array1<f64>,
    pub b: f64,
    /// Hinge sum of the recovered `(w, b)` on the original features.
    pub hinge_sum: f64,
    pub dual_coeffs: Array1<f64>,
    pub converged: bool,
}

/// Minimizes `λ2 Σ_j w_j²/δ_j + λ1 Σ_i ξ_i` by solving a standard SVM on
/// features scaled by `sqrt(δ/λ2)` with `C = λ1/2`, then mapping the weights back.
pub fn train_reweighted(
    dataset: &TaskDataset,
    delta: ArrayView1<f64>,
    lambda1: f64,
    lambda2: f64,
    config: &SvmConfig,
) -> Result<ReweightedFit> {
    train_reweighted_warm(dataset, delta, lambda1, lambda2, config, None, 0.0)
}

pub fn train_reweighted_warm(
    dataset: &TaskDataset,
    delta: ArrayView1<f64>,
    lambda1: f64,
    lambda2: f64,
    config: &SvmConfig,
    warm_dual: Option<ArrayView1<f64>>,
    warm_bias: f64,
) -> Result<ReweightedFit> {
    if !(lambda1 > 0.0) {
        return Err(DsvmError::InvalidParameter(format!(
            "lambda1 must be > 0, got {lambda1}"
        )));
    }
    let xt = reweight_features(dataset.features.view(), delta, lambda2)?;
    let sol = train_linear_svm_warm(
        xt.view(),
        dataset.labels.view(),
        lambda1 / 2.0,
        config,
        warm_dual,
        warm_bias,
    )?;
    let w = recover_weights(sol.w.view(), delta, lambda2)?;
    let hinge = hinge_sum(dataset.features.view(), dataset.labels.view(), w.view(), sol.b);
    Ok(ReweightedFit {
        w,
        b: sol.b,
        hinge_sum: hinge,
        dual_coeffs: sol.dual_coeffs,
        converged: sol.converged,
    })
}

/// Convenience for tests and baselines: features as an owned matrix.
pub fn stack_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let m = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), m), flat).map_err(|e| DsvmError::InvalidData(format!("ragged rows: {e}")))
}
