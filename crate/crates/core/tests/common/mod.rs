//! Independent reference solvers and data generators shared by the integration tests.
#![allow(dead_code)]

use dsvm::TaskDataset;
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Optimal value of `½||w||² + C Σ hinge` with a free bias, by enumerating
/// every assignment of the dual variables to {0, C, free}. Each assignment's
/// free block is solved from its equality-constrained KKT system; feasible
/// candidates are all dual-feasible, so the largest dual value is the optimum.
pub fn svm_qp_oracle(x: &Array2<f64>, y: &Array1<f64>, c: f64) -> f64 {
    let n = x.nrows();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * x.row(i).dot(&x.row(j)));
    let mut best = f64::NEG_INFINITY;
    let mut code = vec![0u8; n];
    let total = 3usize.pow(n as u32);
    for mut idx in 0..total {
        for s in code.iter_mut() {
            *s = (idx % 3) as u8;
            idx /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| code[i] == 2).collect();
        let mut alpha = vec![0.0; n];
        for i in 0..n {
            if code[i] == 1 {
                alpha[i] = c;
            }
        }
        let fixed_y: f64 = (0..n).filter(|&i| code[i] == 1).map(|i| y[i] * c).sum();
        if free.is_empty() {
            if fixed_y.abs() > 1e-12 * c.max(1.0) {
                continue;
            }
        } else {
            let f = free.len();
            let mut kkt = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    kkt[(a, b)] = q[(i, j)];
                }
                kkt[(a, f)] = y[i];
                kkt[(f, a)] = y[i];
                let fixed: f64 = (0..n).filter(|&j| code[j] == 1).map(|j| q[(i, j)] * c).sum();
                rhs[a] = 1.0 - fixed;
            }
            rhs[f] = -fixed_y;
            let Some(sol) = kkt.lu().solve(&rhs) else { continue };
            if sol.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let mut ok = true;
            for (a, &i) in free.iter().enumerate() {
                let v = sol[a];
                if v < -1e-10 || v > c + 1e-10 {
                    ok = false;
                    break;
                }
                alpha[i] = v.clamp(0.0, c);
            }
            if !ok {
                continue;
            }
            let eq: f64 = (0..n).map(|i| alpha[i] * y[i]).sum();
            if eq.abs() > 1e-9 {
                continue;
            }
        }
        let a = DVector::from_vec(alpha);
        let value = a.sum() - 0.5 * (a.transpose() * &q * &a)[(0, 0)];
        best = best.max(value);
    }
    best
}

pub fn svm_primal(x: &Array2<f64>, y: &Array1<f64>, w: &Array1<f64>, b: f64, c: f64) -> f64 {
    let hinge: f64 = x
        .rows()
        .into_iter()
        .zip(y.iter())
        .map(|(r, &yi)| (1.0 - yi * (r.dot(w) + b)).max(0.0))
        .sum();
    0.5 * w.dot(w) + c * hinge
}

/// Projection onto `{x ≥ 0, Σx ≤ 1}` by enumerating supports. For each support
/// the cap is either slack (x = v) or tight (shift by the mean excess); the
/// nearest feasible candidate is the projection.
pub fn projection_oracle(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best = vec![0.0; n];
    let mut best_dist = v.iter().map(|x| x * x).sum::<f64>();
    for mask in 1usize..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sum: f64 = support.iter().map(|&i| v[i]).sum();
        let shifts = [0.0, (sum - 1.0) / support.len() as f64];
        for shift in shifts {
            let mut x = vec![0.0; n];
            for &i in &support {
                x[i] = v[i] - shift;
            }
            let total: f64 = x.iter().sum();
            if x.iter().any(|&e| e < -1e-15) || total > 1.0 + 1e-12 {
                continue;
            }
            let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            if dist < best_dist {
                best_dist = dist;
                best = x.into_iter().map(|e| e.max(0.0)).collect();
            }
        }
    }
    best
}

/// Minimizer of `λ2 w²/δ + ν(δ − c)²` over `δ ∈ (0, 100]`: a log grid brackets
/// the sign change of the derivative, then bisection refines it.
pub fn cubic_oracle(w_sq: f64, c: f64, lambda2: f64, nu: f64) -> f64 {
    let deriv = |d: f64| -lambda2 * w_sq / (d * d) + 2.0 * nu * (d - c);
    let grid: Vec<f64> = (0..=4000)
        .map(|i| 10f64.powf(-10.0 + 12.0 * i as f64 / 4000.0))
        .collect();
    let mut lo = grid[0];
    let mut hi = *grid.last().unwrap();
    for pair in grid.windows(2) {
        if deriv(pair[0]) <= 0.0 && deriv(pair[1]) >= 0.0 {
            lo = pair[0];
            hi = pair[1];
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Worst violation of the nonnegative-lasso optimality conditions for
/// `||target − D α||² + λ Σ α`.
pub fn lasso_kkt(design: &Array2<f64>, target: &Array1<f64>, l1: f64, alpha: &Array1<f64>) -> f64 {
    let r = target - &design.dot(alpha);
    let g = design.t().dot(&r) * -2.0 + l1;
    g.iter()
        .zip(alpha)
        .map(|(&gk, &ak)| if ak > 0.0 { gk.abs() } else { (-gk).max(0.0) })
        .fold(0.0, f64::max)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    Array2::from_shape_fn((rows, cols), |_| normal.sample(rng))
}

/// Random ±1 labels with both classes present.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    let mut y: Array1<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[1] = -1.0;
    y
}

/// Tasks whose true weights share one sparse diagonal covariance: only the
/// first `relevant` features carry signal, with decaying variance.
pub fn shared_covariance_tasks(
    seed: u64,
    n_tasks: usize,
    m: usize,
    relevant: usize,
    n_per_task: usize,
    label_noise: f64,
) -> (Vec<TaskDataset>, Vec<Array1<f64>>) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let scales: Vec<f64> = (0..m)
        .map(|j| {
            if j < relevant {
                1.0 / (1.0 + j as f64 * 0.2)
            } else {
                0.0
            }
        })
        .collect();
    let mut tasks = Vec::new();
    let mut truths = Vec::new();
    for t in 0..n_tasks {
        let w: Array1<f64> = scales.iter().map(|s| s * normal.sample(&mut r)).collect();
        let x = random_matrix(&mut r, n_per_task, m);
        let mut y: Array1<f64> = x
            .rows()
            .into_iter()
            .map(|row| {
                let s = row.dot(&w) + label_noise * normal.sample(&mut r);
                if s >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        y[0] = 1.0;
        y[1] = -1.0;
        tasks.push(TaskDataset::new(format!("task{t}"), x, y).unwrap());
        truths.push(w);
    }
    (tasks, truths)
}

/// Held-out sample from the same generator for a given true weight vector.
pub fn sample_for(seed: u64, w: &Array1<f64>, n: usize) -> (Array2<f64>, Array1<f64>) {
    let mut r = rng(seed);
    let x = random_matrix(&mut r, n, w.len());
    let y = x.dot(w).mapv(|s| if s >= 0.0 { 1.0 } else { -1.0 });
    (x, y)
}
