//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by dataset validation, augmentation, and the evaluation
/// harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("trajectory {traj_id}: duplicate timestamp {timestamp}")]
    DuplicateTimestamp { traj_id: String, timestamp: String },

    #[error("trajectory {traj_id}: fewer than 2 points")]
    TooFewPoints { traj_id: String },

    #[error("trajectory {traj_id}: invalid coordinate at point {index}")]
    InvalidCoordinate { traj_id: String, index: usize },

    #[error("trajectory {traj_id}: label column is set but the label is missing")]
    MissingLabel { traj_id: String },

    #[error("trajectory {traj_id}: extra column {column:?} collides with a reserved column name")]
    ReservedColumn { traj_id: String, column: String },

    #[error("duplicate trajectory id {0:?}")]
    DuplicateId(String),

    #[error("dataset has no label column but the operation requires one")]
    MissingLabelColumn,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("bearing is undefined for coincident points")]
    DegenerateBearing,

    #[error("candidate id {0:?} does not exist in the dataset")]
    UnknownCandidate(String),

    #[error("synthetic id {0:?} already exists in the dataset")]
    IdCollision(String),

    #[error("balance multiplier must be >= 1")]
    MultiplierBelowOne,

    #[error("seed count must be between 1 and {max}, got {n}")]
    NOutOfRange { n: usize, max: usize },

    #[error("class {0:?} has fewer than 2 trajectories; cannot split")]
    ClassTooSmall(String),

    #[error("label sequences have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("label sequences are empty")]
    EmptyInput,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("feature rows have mismatched column sets")]
    ColumnMismatch,

    #[error("missing required column {0:?}")]
    MissingColumn(String),

    #[error("line {line}, column {column:?}: {message}")]
    ParseError {
        line: u64,
        column: String,
        message: String,
    },

    #[error("trajectory {traj_id}: label column has conflicting values")]
    InconsistentLabel { traj_id: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
