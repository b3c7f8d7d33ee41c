//! JSON model documents.
//!
//! ```json
//! { "version": 1, "mode": "binary", "variant": "dsvm",
//!   "hyperparameters": { ... },
//!   "dictionary": [[...], ...],          // m rows of K entries
//!   "tasks": [{ "task_id": "...", "w": [...], "b": 0.0, "alpha": [...], "delta": [...] }],
//!   "class_labels": [...],               // multiclass models only
//!   "objective_trace": [...] }
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a document back
//! reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{DsvmError, Result};
use crate::model::{DictionaryModel, Hyperparameters, TaskParameters, TrainState, Variant};
use crate::svm::predict;
use crate::trainer::{argmax_rows, MulticlassModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelMode {
    Binary,
    Multi,
    Exemplar,
}

impl std::str::FromStr for ModelMode {
    type Err = DsvmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(ModelMode::Binary),
            "multi" => Ok(ModelMode::Multi),
            "exemplar" => Ok(ModelMode::Exemplar),
            other => Err(DsvmError::InvalidParameter(format!("unknown mode {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub w: Vec<f64>,
    pub b: f64,
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub mode: ModelMode,
    pub variant: Variant,
    pub hyperparameters: Hyperparameters,
    pub dictionary: Vec<Vec<f64>>,
    pub tasks: Vec<TaskRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_labels: Option<Vec<i64>>,
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}

impl ModelDocument {
    pub fn from_state(
        state: &TrainState,
        task_ids: &[String],
        hp: &Hyperparameters,
        variant: Variant,
        mode: ModelMode,
    ) -> Result<Self> {
        if task_ids.len() != state.tasks.len() {
            return Err(DsvmError::dims("task ids", state.tasks.len(), task_ids.len()));
        }
        let dictionary = state
            .dictionary
            .atoms()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect();
        let tasks = state
            .tasks
            .iter()
            .zip(task_ids)
            .map(|(p, id)| TaskRecord {
                task_id: id.clone(),
                w: p.w.to_vec(),
                b: p.b,
                alpha: p.alpha.to_vec(),
                delta: p.delta.to_vec(),
            })
            .collect();
        Ok(ModelDocument {
            version: FORMAT_VERSION,
            mode,
            variant,
            hyperparameters: hp.clone(),
            dictionary,
            tasks,
            class_labels: None,
            objective_trace: state.objective_trace.clone(),
        })
    }

    pub fn from_multiclass(model: &MulticlassModel, hp: &Hyperparameters, variant: Variant) -> Result<Self> {
        let ids: Vec<String> = model.class_labels.iter().map(|c| format!("class_{c}")).collect();
        let mut doc = Self::from_state(&model.state, &ids, hp, variant, ModelMode::Multi)?;
        doc.class_labels = Some(model.class_labels.clone());
        Ok(doc)
    }

    /// Rebuilds the training state, checking every dimension and invariant.
    pub fn to_state(&self) -> Result<TrainState> {
        if self.version != FORMAT_VERSION {
            return Err(DsvmError::InvalidData(format!(
                "unsupported model version {}",
                self.version
            )));
        }
        let m = self.dictionary.len();
        let k = self.dictionary.first().map_or(0, Vec::len);
        let flat: Vec<f64> = self.dictionary.iter().flatten().copied().collect();
        if flat.len() != m * k {
            return Err(DsvmError::InvalidData("dictionary rows have unequal lengths".into()));
        }
        let atoms = Array2::from_shape_vec((m, k), flat).map_err(|e| DsvmError::InvalidData(e.to_string()))?;
        let dictionary = DictionaryModel::new(atoms)?;
        let mut tasks = Vec::with_capacity(self.tasks.len());
        for t in &self.tasks {
            if t.w.len() != m {
                return Err(DsvmError::dims(format!("weights of {}", t.task_id), m, t.w.len()));
            }
            if t.delta.len() != m {
                return Err(DsvmError::dims(
                    format!("covariance of {}", t.task_id),
                    m,
                    t.delta.len(),
                ));
            }
            if t.alpha.len() != k {
                return Err(DsvmError::dims(
                    format!("coefficients of {}", t.task_id),
                    k,
                    t.alpha.len(),
                ));
            }
            if t.alpha.iter().any(|a| !(*a >= 0.0)) || t.delta.iter().any(|d| !(*d > 0.0)) {
                return Err(DsvmError::InvalidData(format!(
                    "task {} violates alpha >= 0 or delta > 0",
                    t.task_id
                )));
            }
            tasks.push(TaskParameters {
                w: Array1::from(t.w.clone()),
                b: t.b,
                alpha: Array1::from(t.alpha.clone()),
                delta: Array1::from(t.delta.clone()),
                xi_sum: 0.0,
            });
        }
        if let Some(labels) = &self.class_labels {
            if labels.len() != tasks.len() {
                return Err(DsvmError::dims("class labels", tasks.len(), labels.len()));
            }
        }
        Ok(TrainState {
            dictionary,
            tasks,
            objective_trace: self.objective_trace.clone(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.dictionary.len()
    }

    /// Per-task scores, one column per task.
    pub fn scores(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        let m = self.n_features();
        if features.ncols() != m {
            return Err(DsvmError::dims("data features vs model features", m, features.ncols()));
        }
        let mut out = Array2::zeros((features.nrows(), self.tasks.len()));
        for (j, t) in self.tasks.iter().enumerate() {
            let w = Array1::from(t.w.clone());
            out.column_mut(j).assign(&predict(w.view(), t.b, features)?);
        }
        Ok(out)
    }

    /// Multiclass labels by argmax (lowest class index on ties).
    pub fn predict_classes(&self, features: ArrayView2<f64>) -> Result<Vec<i64>> {
        let labels = self
            .class_labels
            .as_ref()
            .ok_or_else(|| DsvmError::InvalidData("model has no class labels".into()))?;
        let scores = self.scores(features)?;
        Ok(argmax_rows(scores.view()).into_iter().map(|c| labels[c]).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.to_state()?;
        Ok(doc)
    }

    /// Writes through a temporary file so a failed write never leaves a partial model.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        let tmp = path.with_extension("json.partial");
        fs::write(&tmp, text.as_bytes())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
