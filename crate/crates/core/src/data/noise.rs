use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DsvmError, Result};

/// Adds i.i.d. `N(0, sigma²)` noise to every entry. `sigma == 0` copies the input.
pub fn add_gaussian_noise(features: ArrayView2<f64>, sigma: f64, seed: u64) -> Result<Array2<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(DsvmError::InvalidParameter(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(features.to_owned());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| DsvmError::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = features.to_owned();
    out.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    Ok(out)
}
