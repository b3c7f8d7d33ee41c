//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every exported function has a plain Rust counterpart so the logic can be
//! tested natively.

use dsvm::dictionary::{project_capped_simplex, update_delta, CubicUpdateInputs};
use dsvm::svm::predict_labels;
use dsvm::trainer::fit_independent;
use dsvm::{fit, Hyperparameters, TaskDataset, TrainConfig};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Euclidean projection of `v` onto `{x ≥ 0, Σx ≤ 1}`.
#[wasm_bindgen]
pub fn project(v: Vec<f64>) -> Vec<f64> {
    project_capped_simplex(Array1::from(v).view()).to_vec()
}

/// Minimizer of `λ2 w²/δ + ν(δ − c)²` over `δ > 0`.
pub fn delta_minimizer(w_sq: f64, c: f64, lambda2: f64, nu: f64) -> Result<f64, String> {
    let inputs = CubicUpdateInputs::new(Array1::from(vec![w_sq]), Array1::from(vec![c]), lambda2, nu)
        .map_err(|e| e.to_string())?;
    Ok(update_delta(&inputs)[0])
}

#[wasm_bindgen]
pub fn delta_step(w_sq: f64, c: f64, lambda2: f64, nu: f64) -> Result<f64, JsError> {
    delta_minimizer(w_sq, c, lambda2, nu).map_err(|e| JsError::new(&e))
}

#[derive(Debug, Serialize)]
pub struct Classifier {
    pub w: Vec<f64>,
    pub b: f64,
    /// Held-out accuracy in percent.
    pub accuracy: f64,
}

#[derive(Debug, Serialize)]
pub struct ToyTask {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<f64>,
    pub svm: Classifier,
    pub dsvm: Classifier,
    pub delta: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ToyResult {
    pub tasks: Vec<ToyTask>,
    pub svm_accuracy: f64,
    pub dsvm_accuracy: f64,
}

fn sample(rng: &mut ChaCha8Rng, w: [f64; 2], n: usize) -> (Array2<f64>, Array1<f64>) {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut x = Array2::zeros((n, 2));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        x[[i, 0]] = normal.sample(rng);
        x[[i, 1]] = normal.sample(rng);
        let s = w[0] * x[[i, 0]] + w[1] * x[[i, 1]] + 0.3 * normal.sample(rng);
        y[i] = if s >= 0.0 { 1.0 } else { -1.0 };
    }
    (x, y)
}

fn accuracy(w: &Array1<f64>, b: f64, x: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let pred = predict_labels(w.view(), b, x.view()).unwrap();
    100.0 * pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64
}

/// Tasks in the plane whose labels depend on the first coordinate only, each
/// with its own sign and scale. With few training points an independent SVM
/// leans on the noise coordinate; the shared covariance learns to ignore it.
pub fn toy_fit(seed: u32, n_tasks: usize, n_train: usize, gamma: f64) -> Result<ToyResult, String> {
    if !(1..=40).contains(&n_tasks) || !(2..=200).contains(&n_train) {
        return Err("need 1-40 tasks and 2-200 training points per task".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let mut datasets = Vec::new();
    let mut held = Vec::new();
    for t in 0..n_tasks {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let w = [sign * rng.random_range(0.5..2.0), 0.0];
        let (mut x, mut y) = sample(&mut rng, w, n_train);
        // both classes must be present
        y[0] = 1.0;
        y[1] = -1.0;
        x[[0, 0]] = sign;
        x[[1, 0]] = -sign;
        datasets.push(TaskDataset::new(format!("task{t}"), x, y).map_err(|e| e.to_string())?);
        held.push(sample(&mut rng, w, 500));
    }
    let hp = Hyperparameters {
        gamma,
        seed: seed as u64,
        max_outer_iters: 30,
        ..Hyperparameters::default()
    };
    let config = TrainConfig {
        hp: hp.clone(),
        ..TrainConfig::default()
    };
    let base = fit_independent(&datasets, &hp, 10_000).map_err(|e| e.to_string())?;
    let joint = fit(&datasets, &config).map_err(|e| e.to_string())?;
    let mut tasks = Vec::new();
    for (i, d) in datasets.iter().enumerate() {
        let (hx, hy) = &held[i];
        let (w, b) = &base[i];
        let p = &joint.tasks[i];
        tasks.push(ToyTask {
            x: d.features.rows().into_iter().map(|r| [r[0], r[1]]).collect(),
            y: d.labels.to_vec(),
            svm: Classifier {
                w: w.to_vec(),
                b: *b,
                accuracy: accuracy(w, *b, hx, hy),
            },
            dsvm: Classifier {
                w: p.w.to_vec(),
                b: p.b,
                accuracy: accuracy(&p.w, p.b, hx, hy),
            },
            delta: p.delta.to_vec(),
        });
    }
    let mean = |f: fn(&ToyTask) -> f64| tasks.iter().map(f).sum::<f64>() / tasks.len() as f64;
    Ok(ToyResult {
        svm_accuracy: mean(|t| t.svm.accuracy),
        dsvm_accuracy: mean(|t| t.dsvm.accuracy),
        tasks,
    })
}

/// JSON form of [`toy_fit`].
#[wasm_bindgen]
pub fn toy(seed: u32, n_tasks: usize, n_train: usize, gamma: f64) -> Result<String, JsError> {
    let result = toy_fit(seed, n_tasks, n_train, gamma).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&result).map_err(|e| JsError::new(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_in_the_capped_simplex() {
        assert_eq!(project(vec![0.2, 0.3]), vec![0.2, 0.3]);
        let p = project(vec![-1.0, 2.0]);
        assert_eq!(p, vec![0.0, 1.0]);
    }

    #[test]
    fn delta_hand_solved() {
        assert!((delta_minimizer(1.0, 0.0, 2.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(delta_minimizer(1.0, 0.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn shared_covariance_helps_on_the_toy() {
        let (mut svm, mut dsvm) = (0.0, 0.0);
        for seed in 0..5 {
            let r = toy_fit(seed, 8, 8, 0.01).unwrap();
            svm += r.svm_accuracy;
            dsvm += r.dsvm_accuracy;
        }
        assert!(dsvm > svm, "{dsvm} vs {svm}");
    }

    #[test]
    fn toy_result_is_complete_and_reproducible() {
        let a = toy_fit(1, 6, 8, 0.1).unwrap();
        assert_eq!(a.tasks.len(), 6);
        assert!(a
            .tasks
            .iter()
            .all(|t| t.x.len() == 8 && t.delta.iter().all(|d| *d > 0.0)));
        let b = toy_fit(1, 6, 8, 0.1).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(toy_fit(1, 0, 8, 0.1).is_err());
    }
}
