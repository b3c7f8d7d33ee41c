//! Dataset loading and the preprocessing used by the experiment protocols.

mod clean;
mod idx;
mod noise;
mod pca;
mod sparse_text;
mod split;
mod table;

use ndarray::Array2;

pub use clean::{clean_arrhythmia, CleanReport};
pub use idx::{read_idx_images, read_idx_labels, write_idx_images, write_idx_labels, MnistSet};
pub use noise::add_gaussian_noise;
pub use pca::{pca_project, Pca};
pub use sparse_text::{load_sparse_text, parse_sparse_text, write_sparse_text};
pub use split::{class_fraction_train_count, stratified_split, SplitSpec};
pub use table::{load_arrhythmia, load_dense_csv, parse_arrhythmia, parse_dense_csv};

/// Feature matrix with a missing-value mask and integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    /// `N × m`; entries under the mask are placeholders (zero).
    pub rows: Array2<f64>,
    /// `true` where the value is missing.
    pub missing: Array2<bool>,
    pub labels: Vec<i64>,
    pub feature_names: Option<Vec<String>>,
}

impl RawTable {
    /// A table with nothing missing.
    pub fn complete(rows: Array2<f64>, labels: Vec<i64>) -> Self {
        let missing = Array2::from_elem(rows.dim(), false);
        RawTable {
            rows,
            missing,
            labels,
            feature_names: None,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.rows.ncols()
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> RawTable {
        RawTable {
            rows: self.rows.select(ndarray::Axis(0), indices),
            missing: self.missing.select(ndarray::Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}
