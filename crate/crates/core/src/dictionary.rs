//! Covariance updates: the per-coordinate δ step, the capped-simplex
//! projection, and projected gradient descent on the dictionary.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{DsvmError, Result};
use crate::model::{DictionaryModel, EPS_DELTA};

/// Data for the δ step of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicUpdateInputs {
    /// `w_t` squared elementwise.
    pub w_sq: Array1<f64>,
    /// `B·α_t`.
    pub reconstruction: Array1<f64>,
    pub lambda2: f64,
    pub nu: f64,
}

impl CubicUpdateInputs {
    pub fn new(w_sq: Array1<f64>, reconstruction: Array1<f64>, lambda2: f64, nu: f64) -> Result<Self> {
        if w_sq.len() != reconstruction.len() {
            return Err(DsvmError::dims("cubic update", w_sq.len(), reconstruction.len()));
        }
        if let Some(v) = w_sq.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(DsvmError::InvalidParameter(format!(
                "squared weights must be >= 0, found {v}"
            )));
        }
        if !(lambda2 > 0.0) || !(nu > 0.0) {
            return Err(DsvmError::InvalidParameter(format!(
                "lambda2 and nu must be > 0, got {lambda2} and {nu}"
            )));
        }
        Ok(CubicUpdateInputs {
            w_sq,
            reconstruction,
            lambda2,
            nu,
        })
    }
}

/// Unique positive root of `δ³ − c·δ² − a³ = 0` for `a > 0`.
///
/// Any root satisfies `δ ≥ max(c, 0)` and `δ²(δ − c) = a³`, which bounds it
/// by `max(c, 0) + a`. Newton iterates are kept inside the shrinking bracket,
/// falling back to bisection whenever a step leaves it.
pub fn positive_cubic_root(c: f64, a: f64) -> f64 {
    let a3 = a * a * a;
    let f = |d: f64| d * d * (d - c) - a3;
    let mut lo = c.max(0.0);
    let mut hi = c.max(0.0) + a;
    if f(hi) <= 0.0 {
        return hi;
    }
    let mut x = c.max(a).clamp(lo, hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dfx = 3.0 * x * x - 2.0 * c * x;
        let newton = if dfx > 0.0 { x - fx / dfx } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Minimizes `λ2 w_i²/δ_i + ν (δ_i − c_i)²` over `δ_i ≥ EPS_DELTA` for every coordinate.
///
/// Stationarity gives the cubic `2νδ³ − 2νc·δ² − λ2 w² = 0`, which has exactly
/// one positive root when `w² > 0`. With `w² = 0` the minimizer is `c` itself.
pub fn update_delta(inputs: &CubicUpdateInputs) -> Array1<f64> {
    let scale = inputs.lambda2 / (2.0 * inputs.nu);
    inputs
        .w_sq
        .iter()
        .zip(inputs.reconstruction.iter())
        .map(|(&w2, &c)| {
            if w2 == 0.0 {
                c.max(EPS_DELTA)
            } else {
                positive_cubic_root(c, (scale * w2).cbrt()).max(EPS_DELTA)
            }
        })
        .collect()
}

/// Euclidean projection onto `{x ≥ 0, Σx ≤ 1}`.
///
/// Clipping at zero is the answer when it lands inside the cap; otherwise the
/// cap is active and the result is `max(v − θ, 0)` with `θ` found by sorting.
pub fn project_capped_simplex(v: ArrayView1<f64>) -> Array1<f64> {
    let clipped = v.mapv(|x| x.max(0.0));
    let total: f64 = clipped.sum();
    if total <= 1.0 + 1e-12 {
        return clipped;
    }
    let mut sorted: Vec<f64> = clipped.iter().copied().filter(|&x| x > 0.0).collect();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &mu) in sorted.iter().enumerate() {
        cumsum += mu;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if mu - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.mapv(|x| (x - theta).max(0.0))
}

fn stack_columns(vectors: &[ArrayView1<f64>], len: usize, what: &str) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((len, vectors.len()));
    for (t, v) in vectors.iter().enumerate() {
        if v.len() != len {
            return Err(DsvmError::dims(what, len, v.len()));
        }
        out.column_mut(t).assign(v);
    }
    Ok(out)
}

/// `J_B = Σ_t ||δ_t − B α_t||²`.
pub fn dictionary_objective(atoms: &Array2<f64>, deltas: &Array2<f64>, alphas: &Array2<f64>) -> f64 {
    let r = deltas - &atoms.dot(alphas);
    r.iter().map(|x| x * x).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryUpdate {
    pub dictionary: DictionaryModel,
    /// `J_B` before the first step and after each accepted step.
    pub objective_trace: Vec<f64>,
    pub accepted_steps: usize,
}

/// Projected gradient descent on `J_B`. See [`update_dictionary_traced`].
pub fn update_dictionary(
    dictionary: &DictionaryModel,
    deltas: &[ArrayView1<f64>],
    alphas: &[ArrayView1<f64>],
    step_size: f64,
    n_steps: usize,
) -> Result<DictionaryModel> {
    Ok(update_dictionary_traced(dictionary, deltas, alphas, step_size, n_steps)?.dictionary)
}

/// Runs up to `n_steps` projected gradient steps
/// `B ← P(B − η ∇J_B)` with `∇J_B = −2 Σ_t (δ_t − Bα_t) α_tᵀ`, each column
/// projected onto the capped simplex. The trial step is
/// `min(step_size, 1/L)` for the gradient Lipschitz bound `L = 2||AAᵀ||_F`
/// and is halved (at most 30 times) until `J_B` decreases. Stops early when
/// the gradient vanishes or no trial step decreases the objective.
pub fn update_dictionary_traced(
    dictionary: &DictionaryModel,
    deltas: &[ArrayView1<f64>],
    alphas: &[ArrayView1<f64>],
    step_size: f64,
    n_steps: usize,
) -> Result<DictionaryUpdate> {
    let (m, k) = dictionary.atoms().dim();
    if deltas.len() != alphas.len() {
        return Err(DsvmError::dims("dictionary update tasks", deltas.len(), alphas.len()));
    }
    if !(step_size > 0.0) {
        return Err(DsvmError::InvalidParameter(format!(
            "step size must be > 0, got {step_size}"
        )));
    }
    let delta_mat = stack_columns(deltas, m, "dictionary update delta")?;
    let alpha_mat = stack_columns(alphas, k, "dictionary update alpha")?;
    let gram = alpha_mat.dot(&alpha_mat.t());
    let cross = delta_mat.dot(&alpha_mat.t());
    let lipschitz = 2.0 * gram.iter().map(|x| x * x).sum::<f64>().sqrt();
    let first_trial = if lipschitz > 0.0 {
        step_size.min(1.0 / lipschitz)
    } else {
        step_size
    };

    let mut atoms = dictionary.atoms().clone();
    let mut current = dictionary_objective(&atoms, &delta_mat, &alpha_mat);
    let mut trace = vec![current];
    let mut accepted = 0;
    for _ in 0..n_steps {
        // ∇ = 2 (B AAᵀ − ΔAᵀ)
        let grad = (atoms.dot(&gram) - &cross) * 2.0;
        let gnorm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm < 1e-10 {
            break;
        }
        let mut eta = first_trial;
        let mut next = None;
        for _ in 0..=30 {
            let mut trial = &atoms - &(&grad * eta);
            for mut col in trial.axis_iter_mut(Axis(1)) {
                let projected = project_capped_simplex(col.view());
                col.assign(&projected);
            }
            let value = dictionary_objective(&trial, &delta_mat, &alpha_mat);
            if value < current {
                next = Some((trial, value));
                break;
            }
            eta *= 0.5;
        }
        match next {
            Some((trial, value)) => {
                atoms = trial;
                current = value;
                trace.push(value);
                accepted += 1;
            }
            None => break,
        }
    }
    Ok(DictionaryUpdate {
        dictionary: DictionaryModel::from_projected(atoms),
        objective_trace: trace,
        accepted_steps: accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cubic_without_weight_returns_reconstruction() {
        let inp = CubicUpdateInputs::new(array![0.0, 0.0], array![0.7, 0.0], 1.0, 1.0).unwrap();
        let d = update_delta(&inp);
        assert_eq!(d[0], 0.7);
        assert_eq!(d[1], EPS_DELTA);
    }

    #[test]
    fn cubic_hand_solved() {
        // 2δ³ = 2
        let inp = CubicUpdateInputs::new(array![1.0], array![0.0], 2.0, 1.0).unwrap();
        assert!((update_delta(&inp)[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_input_validation() {
        assert!(CubicUpdateInputs::new(array![-1.0], array![0.0], 1.0, 1.0).is_err());
        assert!(CubicUpdateInputs::new(array![1.0], array![0.0, 1.0], 1.0, 1.0).is_err());
        assert!(CubicUpdateInputs::new(array![1.0], array![0.0], 0.0, 1.0).is_err());
        assert!(CubicUpdateInputs::new(array![1.0], array![0.0], 1.0, -1.0).is_err());
    }

    #[test]
    fn cubic_residual_small() {
        for &(c, a) in &[
            (0.0, 1e-6),
            (1e3, 1e-3),
            (0.5, 2.0),
            (1e-9, 1e-9),
            (3.0, 1e4),
            (-2.0, 0.5),
        ] {
            let r = positive_cubic_root(c, a);
            let g = r * r * (r - c) - a * a * a;
            let scale = r.powi(3) + c.abs() * r * r + a.powi(3);
            assert!(g.abs() <= 1e-10 * scale, "c={c} a={a} r={r} g={g}");
            assert!(r > 0.0);
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_capped_simplex(array![0.2, 0.3].view()), array![0.2, 0.3]);
        let p = project_capped_simplex(array![0.5, 0.5, 0.5].view());
        for v in p.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(project_capped_simplex(array![-1.0, 2.0].view()), array![0.0, 1.0]);
    }

    #[test]
    fn stationary_dictionary_unchanged() {
        let b = DictionaryModel::new(array![[0.5, 0.1], [0.3, 0.6]]).unwrap();
        let alphas = [array![1.0, 2.0], array![0.5, 0.0]];
        let deltas: Vec<_> = alphas.iter().map(|a| b.atoms().dot(a)).collect();
        let dv: Vec<_> = deltas.iter().map(|d| d.view()).collect();
        let av: Vec<_> = alphas.iter().map(|a| a.view()).collect();
        let out = update_dictionary(&b, &dv, &av, 1.0, 25).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn one_dimensional_descent_reaches_target() {
        let b = DictionaryModel::new(array![[0.2]]).unwrap();
        let delta = array![0.9];
        let alpha = array![1.0];
        let out = update_dictionary(&b, &[delta.view()], &[alpha.view()], 10.0, 50).unwrap();
        assert!((out.atoms()[[0, 0]] - 0.9).abs() < 1e-9);
        // Target above the cap: projected to 1.
        let delta = array![3.0];
        let out = update_dictionary(&b, &[delta.view()], &[alpha.view()], 10.0, 50).unwrap();
        assert!((out.atoms()[[0, 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dictionary_dimension_errors() {
        let b = DictionaryModel::uniform(2, 2, 0.25).unwrap();
        let d = array![1.0, 1.0];
        let a = array![1.0];
        assert!(update_dictionary(&b, &[d.view()], &[a.view()], 1.0, 1).is_err());
        let a2 = array![1.0, 1.0];
        assert!(update_dictionary(&b, &[d.view()], &[], 1.0, 1).is_err());
        assert!(update_dictionary(&b, &[d.view()], &[a2.view()], 0.0, 1).is_err());
    }
}
