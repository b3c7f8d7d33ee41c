use thiserror::Error;

pub type Result<T> = std::result::Result<T, DsvmError>;

#[derive(Debug, Error)]
pub enum DsvmError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("task {task}: {source}")]
    Task {
        task: String,
        #[source]
        source: Box<DsvmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DsvmError {
    pub fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        DsvmError::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    pub(crate) fn in_task(self, task: &str) -> Self {
        DsvmError::Task {
            task: task.to_string(),
            source: Box::new(self),
        }
    }

    /// True for failures of the optimization itself rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            DsvmError::Numerical(_) => true,
            DsvmError::Task { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
