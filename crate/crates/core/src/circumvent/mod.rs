//! Routing plans that isolate defective components, and embedding of a
//! smaller target onto what survives.

mod defect;
mod embed;
mod plan;
mod planner;
mod trace;

pub use defect::{reduce_defects, DefectSpec, PhaseLocation};
pub use embed::{effective_layout, embed_target, embed_unitary, plan_counts, EffectiveMesh, PlanCounts};
pub use plan::{compaction, merge_plans, CrossingRole, RoutingPlan};
pub use planner::{plan_defects, plan_segments};
pub use trace::{classify_segment, plan_single, DiagonalClass, Edge, Orientation, Side};
