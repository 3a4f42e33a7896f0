use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Configuration has the wrong dimension or violates the robot's bounds.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// Rejection sampling exhausted its attempt budget.
    #[error("generation failed: {0}")]
    GenerationFailed(String),

    /// A (problem, planner) runtime record was required but not found.
    #[error("missing record for problem `{problem_id}`, planner `{planner}`")]
    MissingRecord { problem_id: String, planner: String },

    /// A required artifact (dataset, labels, checkpoint) is absent.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset format: {0}")]
    Dataset(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error("model: {0}")]
    Model(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("experiment: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
