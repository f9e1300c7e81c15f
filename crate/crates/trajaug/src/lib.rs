//! Point-based trajectory data augmentation.
//!
//! The pipeline: load a point-based trajectory dataset (CSV), pick
//! augmentation candidates with one of four selection strategies, generate
//! synthetic trajectories with one of four point-modification strategies
//! (or balance the class distribution outright), and evaluate the effect
//! with a seeded, reproducible experiment harness.
//!
//! Everything downstream of a master seed is deterministic, including under
//! data-parallel execution: per-trajectory random streams are derived by
//! hashing (seed, trajectory id, copy index), never by sharing one stream.

pub mod balancing;
pub mod error;
pub mod evaluation;
pub mod geodesy;
pub mod io;
pub mod kinematics;
pub mod model;
pub mod modification;
pub mod selection;

pub use error::{Error, Result};
pub use geodesy::{Bearing, DistanceMeters, EARTH_RADIUS_M};
pub use model::{
    derive_stream, validate_dataset, GeoPoint, RandomnessSpec, RandomStream, Trajectory,
    TrajectoryDataset, TrajectoryPoint,
};
