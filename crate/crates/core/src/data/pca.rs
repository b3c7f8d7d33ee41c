use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{DsvmError, Result};

/// Principal subspace of a data matrix.
#[derive(Debug, Clone)]
pub struct Pca {
    /// `m × k`, orthonormal columns ordered by decreasing variance.
    pub basis: Array2<f64>,
    pub mean: Array1<f64>,
    /// Covariance eigenvalues of the kept directions.
    pub explained_variance: Array1<f64>,
}

impl Pca {
    /// Learns the top-`k` directions of the sample covariance (divisor `N - 1`).
    pub fn fit(features: ArrayView2<f64>, k: usize) -> Result<Self> {
        let (n, m) = features.dim();
        if k == 0 || k > n.min(m) {
            return Err(DsvmError::InvalidParameter(format!(
                "PCA dimension {k} outside 1..={}",
                n.min(m)
            )));
        }
        let mean = features.mean_axis(Axis(0)).expect("non-empty");
        let centered = &features - &mean;
        let denom = (n.max(2) - 1) as f64;
        let cov = centered.t().dot(&centered) / denom;
        let eig = SymmetricEigen::new(DMatrix::from_fn(m, m, |i, j| cov[[i, j]]));
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut basis = Array2::zeros((m, k));
        let mut explained = Array1::zeros(k);
        for (c, &src) in order.iter().take(k).enumerate() {
            let v = eig.eigenvectors.column(src);
            // sign convention: largest-magnitude component positive
            let pivot = (0..m).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..m {
                basis[[i, c]] = sign * v[i];
            }
            explained[c] = eig.eigenvalues[src];
        }
        Ok(Pca {
            basis,
            mean,
            explained_variance: explained,
        })
    }

    pub fn transform(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.mean.len() {
            return Err(DsvmError::dims("PCA input features", self.mean.len(), features.ncols()));
        }
        Ok((&features - &self.mean).dot(&self.basis))
    }

    pub fn reconstruct(&self, projected: ArrayView2<f64>) -> Array2<f64> {
        projected.dot(&self.basis.t()) + &self.mean
    }
}

/// Returns `(projected, basis, mean)`.
pub fn pca_project(features: ArrayView2<f64>, k: usize) -> Result<(Array2<f64>, Array2<f64>, Array1<f64>)> {
    let pca = Pca::fit(features, k)?;
    let projected = pca.transform(features)?;
    Ok((projected, pca.basis, pca.mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn exact_line_is_recovered() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| {
            (i as f64 - 3.0) * if j == 0 { 2.0 } else { -1.0 } + 1.0
        });
        let pca = Pca::fit(x.view(), 1).unwrap();
        let back = pca.reconstruct(pca.transform(x.view()).unwrap().view());
        assert!(max_abs(&(back - &x)) < 1e-10);
    }

    #[test]
    fn full_basis_reconstructs_and_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((30, 6), |_| rng.random_range(-1.0..1.0));
        let pca = Pca::fit(x.view(), 6).unwrap();
        let back = pca.reconstruct(pca.transform(x.view()).unwrap().view());
        assert!(max_abs(&(back - &x)) < 1e-8);
        let gram = pca.basis.t().dot(&pca.basis) - Array2::<f64>::eye(6);
        assert!(max_abs(&gram) < 1e-10);
        assert!(pca.explained_variance.windows(2).into_iter().all(|w| w[0] >= w[1]));
    }

    #[test]
    fn k_out_of_range() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        assert!(Pca::fit(x.view(), 0).is_err());
        assert!(Pca::fit(x.view(), 3).is_err());
    }
}
