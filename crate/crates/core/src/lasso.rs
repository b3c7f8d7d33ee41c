//! Nonnegative ℓ₁-penalized least squares for the dictionary coefficients.
//!
//! Solves `min_{α ≥ 0} ||target − design·α||² + l1_weight·||α||₁` by cyclic
//! coordinate descent. Each coordinate has the closed-form update
//! `α_k ← max(0, α_k + (design_kᵀ r − l1_weight/2) / ||design_k||²)` where `r`
//! is the current residual, so the nonnegativity constraint is handled by the
//! clip instead of a sign search. The solver tracks `design_kᵀ r` through the
//! Gram matrix, so a sweep costs `O(K²)` regardless of the target length.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{DsvmError, Result};
use crate::model::DictionaryModel;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoProblem {
    /// `m × K` design matrix.
    pub design: Array2<f64>,
    /// Length-`m` target.
    pub target: Array1<f64>,
    pub l1_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    pub max_sweeps: usize,
    /// A sweep whose largest coordinate move is below this triggers the KKT check.
    pub change_tol: f64,
    pub kkt_tol: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            max_sweeps: 50_000,
            change_tol: 1e-10,
            kkt_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub alpha: Array1<f64>,
    pub converged: bool,
    pub sweeps: usize,
    /// Largest violation of the nonnegative-lasso optimality conditions.
    pub kkt_residual: f64,
    /// Some design column is all zero while `l1_weight = 0`: the minimizer is not unique.
    pub degenerate: bool,
}

impl LassoProblem {
    pub fn new(design: Array2<f64>, target: Array1<f64>, l1_weight: f64) -> Result<Self> {
        if design.nrows() != target.len() {
            return Err(DsvmError::dims("lasso target", design.nrows(), target.len()));
        }
        if !(l1_weight >= 0.0) || !l1_weight.is_finite() {
            return Err(DsvmError::InvalidParameter(format!(
                "l1 weight must be >= 0, got {l1_weight}"
            )));
        }
        Ok(LassoProblem {
            design,
            target,
            l1_weight,
        })
    }

    pub fn n_coefs(&self) -> usize {
        self.design.ncols()
    }

    pub fn objective(&self, alpha: ArrayView1<f64>) -> f64 {
        let r = &self.target - &self.design.dot(&alpha);
        r.dot(&r) + self.l1_weight * alpha.iter().map(|a| a.abs()).sum::<f64>()
    }

    /// Largest violation of: `|g_k| = 0` where `α_k > 0`, `g_k ≥ 0` where `α_k = 0`,
    /// with `g_k = −2·design_kᵀ(target − design·α) + l1_weight`.
    pub fn kkt_residual(&self, alpha: ArrayView1<f64>) -> f64 {
        let r = &self.target - &self.design.dot(&alpha);
        let g = self.design.t().dot(&r) * -2.0 + self.l1_weight;
        g.iter()
            .zip(alpha.iter())
            .map(|(&gk, &ak)| if ak > 0.0 { gk.abs() } else { (-gk).max(0.0) })
            .fold(0.0, f64::max)
    }
}

pub fn solve_lasso(problem: &LassoProblem) -> Result<LassoSolution> {
    solve_lasso_from(problem, None, &LassoConfig::default())
}

/// Coordinate descent warm-started at `init` (clipped to be nonnegative).
/// Sweeps run in ascending coordinate order, so the objective never increases
/// from the starting point.
pub fn solve_lasso_from(
    problem: &LassoProblem,
    init: Option<ArrayView1<f64>>,
    config: &LassoConfig,
) -> Result<LassoSolution> {
    let (m, k) = problem.design.dim();
    if problem.target.len() != m {
        return Err(DsvmError::dims("lasso target", m, problem.target.len()));
    }
    let mut alpha = match init {
        Some(a) if a.len() == k => a.mapv(|v| if v > 0.0 { v } else { 0.0 }),
        Some(a) => return Err(DsvmError::dims("lasso warm start", k, a.len())),
        None => Array1::zeros(k),
    };
    // Work on the Gram form: with G = DᵀD and c = Dᵀt the half-gradient of
    // the smooth part is g = Gα − c, kept current after every coordinate move.
    let gram = problem.design.t().dot(&problem.design);
    let corr = problem.design.t().dot(&problem.target);
    let degenerate = problem.l1_weight == 0.0 && (0..k).any(|j| gram[[j, j]] == 0.0);
    let half_l1 = 0.5 * problem.l1_weight;
    let mut g = gram.dot(&alpha) - &corr;

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for j in 0..k {
            let old = alpha[j];
            let gjj = gram[[j, j]];
            let new = if gjj == 0.0 {
                // Zero column: only the penalty depends on α_j.
                0.0
            } else {
                (old - (g[j] + half_l1) / gjj).max(0.0)
            };
            if new != old {
                g.scaled_add(new - old, &gram.row(j));
                alpha[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        let approx_kkt = g
            .iter()
            .zip(alpha.iter())
            .map(|(&gj, &aj)| {
                let full = 2.0 * gj + problem.l1_weight;
                if aj > 0.0 {
                    full.abs()
                } else {
                    (-full).max(0.0)
                }
            })
            .fold(0.0, f64::max);
        if approx_kkt <= 0.5 * config.kkt_tol || max_change < config.change_tol {
            // Certify against the residual form and drop accumulated rounding.
            if problem.kkt_residual(alpha.view()) <= config.kkt_tol {
                converged = true;
                break;
            }
            g = gram.dot(&alpha) - &corr;
        }
    }
    let kkt_residual = problem.kkt_residual(alpha.view());
    Ok(LassoSolution {
        alpha,
        converged: converged || kkt_residual <= config.kkt_tol,
        sweeps,
        kkt_residual,
        degenerate,
    })
}

/// Lasso system equivalent to the mean-regularized coefficient subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRegSystem {
    /// `C` with `CᵀC = Q`.
    pub c: Array2<f64>,
    /// `d` with `Cᵀd = p`.
    pub d: Array1<f64>,
    pub q: Array2<f64>,
    pub p: Array1<f64>,
    /// `Q` had (numerically) zero eigenvalues; the matching rows of `C` are zero.
    pub rank_deficient: bool,
}

impl MeanRegSystem {
    pub fn to_problem(&self, gamma: f64) -> Result<LassoProblem> {
        LassoProblem::new(self.c.clone(), self.d.clone(), gamma)
    }
}

/// Builds `(C, d)` such that `||Cα − d||² + γ||α||₁` equals, up to a constant,
/// the part of the MD-SVM objective that depends on task `t`'s coefficients:
///
/// ```text
/// ν ||δ_t − Bα||² + γ||α||₁ + λ3 Σ_s ||α_s − ᾱ||²
/// ```
///
/// with every other task's coefficients held fixed. Expanding the mean term
/// gives `Q = ν BᵀB + λ3 (T−1)/T · I` and `p = ν Bᵀδ_t + (λ3/T) Σ_{j≠t} α_j`.
/// `Q` is factored through its eigendecomposition `Q = V Λ Vᵀ` as
/// `C = Λ^{1/2} Vᵀ`, and `d = Λ^{-1/2} Vᵀ p` solves `Cᵀd = p`.
pub fn build_mean_reg_system(
    dictionary: &DictionaryModel,
    delta: ArrayView1<f64>,
    nu: f64,
    lambda3: f64,
    other_alphas: &[ArrayView1<f64>],
    n_tasks: usize,
) -> Result<MeanRegSystem> {
    let b = dictionary.atoms();
    let (m, k) = b.dim();
    if delta.len() != m {
        return Err(DsvmError::dims("mean-regularized system delta", m, delta.len()));
    }
    if n_tasks < 2 {
        return Err(DsvmError::InvalidParameter(
            "mean regularization needs at least two tasks".into(),
        ));
    }
    if other_alphas.len() != n_tasks - 1 {
        return Err(DsvmError::dims(
            "other task coefficients",
            n_tasks - 1,
            other_alphas.len(),
        ));
    }
    if !(nu > 0.0) {
        return Err(DsvmError::InvalidParameter(format!("nu must be > 0, got {nu}")));
    }
    if !(lambda3 >= 0.0) {
        return Err(DsvmError::InvalidParameter(format!(
            "lambda3 must be >= 0, got {lambda3}"
        )));
    }
    let t = n_tasks as f64;
    let mut q = b.t().dot(b) * nu;
    let ridge = lambda3 * (t - 1.0) / t;
    for i in 0..k {
        q[[i, i]] += ridge;
    }
    let mut others = Array1::<f64>::zeros(k);
    for a in other_alphas {
        if a.len() != k {
            return Err(DsvmError::dims("other task coefficients", k, a.len()));
        }
        others += a;
    }
    let p = b.t().dot(&delta) * nu + others * (lambda3 / t);

    let sym = DMatrix::from_fn(k, k, |i, j| 0.5 * (q[[i, j]] + q[[j, i]]));
    let eig = SymmetricEigen::new(sym);
    let max_eig = eig.eigenvalues.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let cutoff = max_eig * (k as f64) * f64::EPSILON * 16.0;
    let mut c = Array2::<f64>::zeros((k, k));
    let mut d = Array1::<f64>::zeros(k);
    let mut rank_deficient = false;
    for i in 0..k {
        let lam = eig.eigenvalues[i];
        if lam <= cutoff {
            rank_deficient = true;
            continue;
        }
        let root = lam.sqrt();
        let mut vp = 0.0;
        for j in 0..k {
            let v = eig.eigenvectors[(j, i)];
            c[[i, j]] = root * v;
            vp += v * p[j];
        }
        d[i] = vp / root;
    }
    Ok(MeanRegSystem {
        c,
        d,
        q,
        p,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_stationarity() {
        // −2(2 − α) + 1 = 0  →  α = 1.5
        let p = LassoProblem::new(array![[1.0]], array![2.0], 1.0).unwrap();
        let s = solve_lasso(&p).unwrap();
        assert!((s.alpha[0] - 1.5).abs() < 1e-12);
        assert!(s.converged);
    }

    #[test]
    fn large_penalty_gives_zero() {
        for w in [4.0, 5.0, 100.0] {
            let p = LassoProblem::new(array![[1.0]], array![2.0], w).unwrap();
            assert_eq!(solve_lasso(&p).unwrap().alpha[0], 0.0);
        }
    }

    #[test]
    fn identity_design_clips_negatives() {
        let p = LassoProblem::new(Array2::eye(2), array![3.0, -1.0], 0.0).unwrap();
        let s = solve_lasso(&p).unwrap();
        assert!((s.alpha[0] - 3.0).abs() < 1e-12);
        assert_eq!(s.alpha[1], 0.0);
        assert!(!s.degenerate);
    }

    #[test]
    fn zero_column_flagged_when_unpenalized() {
        let p = LassoProblem::new(array![[1.0, 0.0], [0.0, 0.0]], array![1.0, 1.0], 0.0).unwrap();
        let s = solve_lasso(&p).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.alpha[1], 0.0);
    }

    #[test]
    fn dimension_errors() {
        assert!(LassoProblem::new(Array2::eye(2), array![1.0], 0.0).is_err());
        assert!(LassoProblem::new(Array2::eye(2), array![1.0, 1.0], -1.0).is_err());
        let p = LassoProblem::new(Array2::eye(2), array![1.0, 1.0], 0.0).unwrap();
        assert!(solve_lasso_from(&p, Some(array![1.0].view()), &LassoConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((10, 6), |_| rng.random::<f64>());
        let t = Array1::from_shape_fn(10, |_| rng.random::<f64>());
        let p = LassoProblem::new(x, t, 0.0).unwrap();
        let cfg = LassoConfig {
            max_sweeps: 1,
            ..Default::default()
        };
        let s = solve_lasso_from(&p, None, &cfg).unwrap();
        assert_eq!(s.sweeps, 1);
        assert!(!s.converged);
    }

    #[test]
    fn identity_dictionary_system() {
        let dict = DictionaryModel::new(Array2::eye(2)).unwrap();
        let others = [array![0.0, 0.0]];
        let views: Vec<_> = others.iter().map(|a| a.view()).collect();
        let sys = build_mean_reg_system(&dict, array![1.0, 2.0].view(), 1.0, 0.0, &views, 2).unwrap();
        // C is orthogonal; Cᵀd = p = δ.
        let ctc = sys.c.t().dot(&sys.c);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((ctc[[i, j]] - e).abs() < 1e-12);
            }
        }
        let ctd = sys.c.t().dot(&sys.d);
        assert!((ctd[0] - 1.0).abs() < 1e-12 && (ctd[1] - 2.0).abs() < 1e-12);
        // Soft-threshold: α = max(0, δ − γ/2).
        let s = solve_lasso(&sys.to_problem(1.0).unwrap()).unwrap();
        assert!((s.alpha[0] - 0.5).abs() < 1e-9);
        assert!((s.alpha[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn mean_reg_argument_errors() {
        let dict = DictionaryModel::new(Array2::eye(2)).unwrap();
        let a = array![0.0, 0.0];
        assert!(build_mean_reg_system(&dict, array![1.0, 2.0].view(), 1.0, 1.0, &[], 1).is_err());
        assert!(build_mean_reg_system(&dict, array![1.0, 2.0].view(), 1.0, 1.0, &[a.view()], 3).is_err());
        assert!(build_mean_reg_system(&dict, array![1.0].view(), 1.0, 1.0, &[a.view()], 2).is_err());
        assert!(build_mean_reg_system(&dict, array![1.0, 2.0].view(), 0.0, 1.0, &[a.view()], 2).is_err());
    }

    #[test]
    fn singular_gram_flagged() {
        let dict = DictionaryModel::new(array![[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let a = array![0.0, 0.0];
        let sys = build_mean_reg_system(&dict, array![1.0, 1.0].view(), 1.0, 0.0, &[a.view()], 2).unwrap();
        assert!(sys.rank_deficient);
        let with_ridge = build_mean_reg_system(&dict, array![1.0, 1.0].view(), 1.0, 0.1, &[a.view()], 2).unwrap();
        assert!(!with_ridge.rank_deficient);
    }
}
