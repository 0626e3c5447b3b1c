//! Defect-aware compilation and verification for programmable MZI meshes.

pub mod circumvent;
pub mod decompose;
pub mod document;
pub mod error;
pub mod haar;
pub mod matrix_io;
pub mod mesh;
pub mod simulate;
pub mod yield_analysis;

pub use circumvent::{
    classify_segment, effective_layout, embed_target, embed_unitary, merge_plans, plan_counts, plan_defects,
    plan_single, reduce_defects, DefectSpec, DiagonalClass, EffectiveMesh, Orientation, PhaseLocation, RoutingPlan,
    Side,
};
pub use decompose::{clements_decompose, crossing_matrix, decompose, reconstruct, TransferMatrix};
pub use document::MeshDocument;
pub use error::{Error, Result};
pub use mesh::{ColumnParity, Crossing, LayoutKind, Mesh, MeshLayout, MeshSettings, MziSetting, Segment};
pub use simulate::{
    amplitude_at, effective_matrix, transfer, verify_plan, verify_settings, Target, VerificationReport,
};
pub use yield_analysis::{CountModel, YieldQuery};
