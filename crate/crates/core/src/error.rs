use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("point {point:?} lies outside the field box")]
    OutOfDomain { point: [f64; 3] },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("argument outside the admissible range: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("solver instability at step {step} (t = {time:.4}): non-finite values")]
    Instability { step: usize, time: f64 },

    #[error("probe {probe} needs data up to t = {needed:.4} but boundary reflections may arrive at t = {safe:.4}; {hint}")]
    ProbeOutsideSafeRegion {
        probe: String,
        needed: f64,
        safe: f64,
        hint: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("scenario schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<LabError>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        LabError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
