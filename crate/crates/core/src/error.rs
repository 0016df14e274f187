use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value produced in layer `{layer}`")]
    NonFiniteLoss { layer: String },

    #[error("ordering seeds must differ, both are {0}")]
    IdenticalOrderings(u64),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("pruning would remove every surviving weight of layer `{layer}`")]
    LayerWipeout { layer: String },

    #[error("distillation diverged at outer step {step}: matching loss is not finite")]
    Diverged { step: usize },

    #[error("{0}")]
    Degenerate(String),

    #[error("param count {count} exceeds the exact-Hessian guard of {limit}; use the stochastic estimator")]
    TooManyParams { count: usize, limit: usize },

    #[error("non-finite Hessian-vector product at probe {probe}")]
    NonFiniteProbe { probe: usize },

    #[error("idx: bad magic number {found:#010x} in {} (expected {expected:#010x})", .path.display())]
    IdxBadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("idx: {} is truncated: {detail}", .path.display())]
    IdxTruncated { path: PathBuf, detail: String },

    #[error("idx: {images} images but {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error(transparent)]
    Checkpoint(#[from] crate::harness::checkpoint::CheckpointError),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("missing artifacts for report: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }
}
