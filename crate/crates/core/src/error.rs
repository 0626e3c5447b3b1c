use thiserror::Error;

use crate::mesh::{Crossing, Segment};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("crossing ({}, {}) is not part of the mesh", .0.column, .0.lower_mode)]
    UnknownCrossing(Crossing),

    #[error("segment (mode {}, slot {}) is not part of the mesh", .0.mode, .0.slot)]
    UnknownSegment(Segment),

    #[error("mode {mode} out of range for a {modes}-mode mesh")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("settings do not match the layout: {0}")]
    SettingsMismatch(String),

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid defect: {0}")]
    InvalidDefect(String),

    #[error("plan does not belong to this mesh: {0}")]
    PlanMismatch(String),

    #[error("independent plans conflict: {0}")]
    PlanConflict(String),

    #[error("nothing left to salvage: {0}")]
    Unsalvageable(String),

    #[error("surviving components do not form the effective template: {0}")]
    TemplateMismatch(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("defect-free yield is unbounded for a zero defect probability")]
    Unbounded,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
