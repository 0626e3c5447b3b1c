use std::collections::BTreeSet;

use super::defect::{reduce_defects, DefectSpec};
use super::embed::{effective_layout, EffectiveMesh};
use super::plan::{merge_plans, RoutingPlan};
use super::trace::plan_single;
use crate::error::{Error, Result};
use crate::mesh::{Crossing, Mesh, Segment};

/// Plans around every defect.
///
/// Independent per-segment plans are merged first. When their union does
/// not leave a valid smaller template, defects are planned one at a time
/// inside the effective mesh left by the previous ones.
pub fn plan_defects(mesh: &Mesh, defects: &[DefectSpec]) -> Result<RoutingPlan> {
    let segments = reduce_defects(mesh, defects)?;
    plan_segments(mesh, &segments)
}

pub fn plan_segments(mesh: &Mesh, segments: &BTreeSet<Segment>) -> Result<RoutingPlan> {
    for s in segments {
        if !mesh.contains_segment(*s) {
            return Err(Error::UnknownSegment(*s));
        }
    }
    if segments.is_empty() {
        return Ok(RoutingPlan::empty(mesh));
    }
    match independent(mesh, segments) {
        Ok(plan) => Ok(plan),
        Err(Error::Unsalvageable(msg)) => Err(Error::Unsalvageable(msg)),
        Err(first) => sequential(mesh, segments).map_err(|e| match e {
            Error::Unsalvageable(msg) => Error::Unsalvageable(msg),
            e => Error::Unsalvageable(format!("merged plan invalid ({first}); sequential plan invalid ({e})")),
        }),
    }
}

fn independent(mesh: &Mesh, segments: &BTreeSet<Segment>) -> Result<RoutingPlan> {
    let plans = segments
        .iter()
        .map(|&s| plan_single(mesh, s))
        .collect::<Result<Vec<_>>>()?;
    let merged = merge_plans(&plans)?;
    finalize(mesh, merged, segments.iter()).map(|(plan, _)| plan)
}

/// Validates a plan against the template and records the segments it isolates.
fn finalize<'a>(
    mesh: &Mesh,
    mut plan: RoutingPlan,
    defects: impl Iterator<Item = &'a Segment>,
) -> Result<(RoutingPlan, EffectiveMesh)> {
    let eff = effective_layout(mesh, &plan)?;
    plan.isolated_segments = eff.isolated_segments();
    for s in defects {
        if !plan.isolated_segments.contains(s) {
            return Err(Error::TemplateMismatch(format!("defect {s} still carries used light")));
        }
    }
    Ok((plan, eff))
}

fn sequential(mesh: &Mesh, segments: &BTreeSet<Segment>) -> Result<RoutingPlan> {
    let mut plan = RoutingPlan::empty(mesh);
    let mut eff = effective_layout(mesh, &plan)?;
    let mut done: Vec<Segment> = Vec::new();
    for &seg in segments {
        done.push(seg);
        let Some(local) = eff.effective_segment(seg) else {
            continue;
        };
        if eff.layout().modes <= 1 {
            return Err(Error::Unsalvageable(format!("no modes left to route around {seg}")));
        }
        let sub = plan_single(&eff.mesh, local)?;
        let lift = |x: &Crossing| eff.crossing_map[x];
        plan.fixed_cross.extend(sub.fixed_cross.iter().map(lift));
        plan.fixed_bar.extend(sub.fixed_bar.iter().map(lift));
        let port_of = |map: &std::collections::BTreeMap<usize, usize>, e: usize| {
            map.iter()
                .find(|(_, &v)| v == e)
                .map(|(&p, _)| p)
                .expect("effective port has a physical port")
        };
        plan.discarded_inputs
            .extend(sub.discarded_inputs.iter().map(|&e| port_of(&eff.input_relabel, e)));
        plan.discarded_outputs
            .extend(sub.discarded_outputs.iter().map(|&e| port_of(&eff.output_relabel, e)));
        plan.refresh_relabels(mesh.modes());
        let (next, next_eff) = finalize(mesh, plan, done.iter())?;
        plan = next;
        eff = next_eff;
    }
    Ok(plan)
}
