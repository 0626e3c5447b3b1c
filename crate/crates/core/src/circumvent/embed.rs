use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use super::plan::{CrossingRole, RoutingPlan};
use crate::decompose::{asap_layers, decompose, template_by_layer, AbstractCircuit, SweepOp, TransferMatrix};
use crate::error::{Error, Result};
use crate::mesh::{ColumnParity, Crossing, LayoutKind, Mesh, MeshLayout, MeshSettings, Segment};

/// The smaller interferometer left on the surviving crossings.
#[derive(Debug, Clone)]
pub struct EffectiveMesh {
    pub mesh: Mesh,
    /// Physical input port → effective input port.
    pub input_relabel: BTreeMap<usize, usize>,
    /// Physical output port → effective output port.
    pub output_relabel: BTreeMap<usize, usize>,
    /// Effective crossing → physical crossing realizing it.
    pub crossing_map: BTreeMap<Crossing, Crossing>,
    ops: Vec<SweepOp>,
    /// Virtual wire (0-based) on each physical segment, indexed `[slot][mode - 1]`.
    occupancy: Vec<Vec<Option<usize>>>,
    /// Per wire: `(physical column, effective column)` of every tunable op on it.
    wire_ops: Vec<Vec<(usize, usize)>>,
}

impl EffectiveMesh {
    pub fn layout(&self) -> MeshLayout {
        self.mesh.layout()
    }

    /// Virtual wire carried by a physical segment; `None` for isolated segments.
    pub fn wire_at(&self, segment: Segment) -> Option<usize> {
        self.occupancy
            .get(segment.slot)
            .and_then(|col| col.get(segment.mode.wrapping_sub(1)))
            .copied()
            .flatten()
    }

    /// Physical segments no used input reaches.
    pub fn isolated_segments(&self) -> BTreeSet<Segment> {
        self.occupancy
            .iter()
            .enumerate()
            .flat_map(|(slot, col)| {
                col.iter()
                    .enumerate()
                    .filter(|(_, w)| w.is_none())
                    .map(move |(i, _)| Segment::new(i + 1, slot))
            })
            .collect()
    }

    /// The effective segment a physical segment on a used wire corresponds to.
    pub fn effective_segment(&self, segment: Segment) -> Option<Segment> {
        let wire = self.wire_at(segment)?;
        let slot = self.wire_ops[wire]
            .iter()
            .take_while(|(physical, _)| *physical <= segment.slot)
            .last()
            .map_or(0, |&(_, effective)| effective);
        Some(Segment::new(wire + 1, slot))
    }

    pub(crate) fn ops(&self) -> &[SweepOp] {
        &self.ops
    }
}

enum VirtualOp {
    Tunable { physical: Crossing, lower_wire: usize },
    Phase { wire: usize, factor: Complex64 },
}

struct Propagation {
    ops: Vec<VirtualOp>,
    occupancy: Vec<Vec<Option<usize>>>,
}

/// Carries the used inputs' new labels through the fixed crossings and
/// records the virtual circuit the tunable crossings form.
fn propagate(mesh: &Mesh, plan: &RoutingPlan) -> Result<Propagation> {
    let n = mesh.modes();
    let mut labels: Vec<Option<usize>> = (1..=n).map(|p| plan.input_relabel.get(&p).map(|e| e - 1)).collect();
    let mut occupancy = vec![labels.clone()];
    let mut ops = Vec::new();
    for c in 1..=mesh.depth() {
        for x in mesh.column(c) {
            let (lo, hi) = (x.lower_mode - 1, x.lower_mode);
            match plan.role(x) {
                CrossingRole::Cross => {
                    if let Some(wire) = labels[hi] {
                        // The upper input leaves on the lower mode with a sign flip.
                        ops.push(VirtualOp::Phase {
                            wire,
                            factor: Complex64::new(-1.0, 0.0),
                        });
                    }
                    labels.swap(lo, hi);
                }
                CrossingRole::Bar => {}
                CrossingRole::DontCare => {
                    if labels[lo].is_some() || labels[hi].is_some() {
                        return Err(Error::TemplateMismatch(format!(
                            "don't-care crossing {x} carries used light"
                        )));
                    }
                }
                CrossingRole::Tunable => match (labels[lo], labels[hi]) {
                    (Some(a), Some(b)) if b == a + 1 => ops.push(VirtualOp::Tunable {
                        physical: x,
                        lower_wire: a,
                    }),
                    (Some(_), Some(_)) => {
                        return Err(Error::TemplateMismatch(format!(
                            "tunable crossing {x} couples non-adjacent virtual wires"
                        )))
                    }
                    _ => {
                        return Err(Error::TemplateMismatch(format!(
                            "tunable crossing {x} mixes used light with an isolated path"
                        )))
                    }
                },
            }
        }
        occupancy.push(labels.clone());
    }
    for (o, label) in labels.iter().enumerate() {
        let want = plan.output_relabel.get(&(o + 1)).map(|e| e - 1);
        if *label != want {
            return Err(Error::TemplateMismatch(format!(
                "output {} receives virtual wire {:?}, expected {:?}",
                o + 1,
                label.map(|w| w + 1),
                want.map(|w| w + 1)
            )));
        }
    }
    Ok(Propagation { ops, occupancy })
}

fn candidate_layouts(mesh: &Mesh, removed: usize) -> Result<Vec<MeshLayout>> {
    let layout = mesh.layout();
    let n = layout.modes;
    if removed >= n {
        return Err(Error::Unsalvageable(format!(
            "{removed} port pairs discarded from {n} modes"
        )));
    }
    let base = match layout.kind {
        LayoutKind::Rectangular => MeshLayout::rectangular(n - removed),
        LayoutKind::ShallowBrickWall => {
            if removed >= layout.depth {
                return Err(Error::Unsalvageable(format!(
                    "{removed} port pairs discarded from a depth-{} mesh",
                    layout.depth
                )));
            }
            MeshLayout::shallow(n - removed, layout.depth - removed)
        }
    };
    let first = if removed == 0 {
        layout.parity
    } else {
        ColumnParity::Aligned
    };
    Ok(vec![base.with_parity(first), base.with_parity(first.flipped())])
}

/// Matches the surviving crossings to a universal template on `n − k` modes.
///
/// Removing a port pair along a descending diagonal keeps the column parity
/// of the template; an ascending diagonal shifts it by one column.
pub fn effective_layout(mesh: &Mesh, plan: &RoutingPlan) -> Result<EffectiveMesh> {
    plan.check(mesh)?;
    let removed = plan.removed_modes();
    let candidates = candidate_layouts(mesh, removed)?;
    let prop = propagate(mesh, plan)?;
    let wires = mesh.modes() - removed;
    let tunable: Vec<(Crossing, usize)> = prop
        .ops
        .iter()
        .filter_map(|op| match *op {
            VirtualOp::Tunable { physical, lower_wire } => Some((physical, lower_wire)),
            VirtualOp::Phase { .. } => None,
        })
        .collect();
    let layers = asap_layers(wires, tunable.iter().map(|t| t.1));
    for layout in candidates {
        let eff = Mesh::new(layout)?;
        if eff.crossings().len() != tunable.len() {
            continue;
        }
        let template = template_by_layer(&eff);
        let keys: Option<Vec<Crossing>> = tunable
            .iter()
            .zip(&layers)
            .map(|(&(_, wire), &layer)| template.get(&(layer, wire + 1)).copied())
            .collect();
        let Some(keys) = keys else { continue };
        let mut key_iter = keys.iter();
        let mut wire_ops = vec![Vec::new(); wires];
        let ops = prop
            .ops
            .iter()
            .map(|op| match *op {
                VirtualOp::Tunable { physical, lower_wire } => {
                    let key = *key_iter.next().expect("one key per tunable op");
                    wire_ops[lower_wire].push((physical.column, key.column));
                    wire_ops[lower_wire + 1].push((physical.column, key.column));
                    SweepOp::Tunable {
                        key,
                        physical,
                        lower_wire,
                    }
                }
                VirtualOp::Phase { wire, factor } => SweepOp::Phase { wire, factor },
            })
            .collect();
        let crossing_map = keys.iter().copied().zip(tunable.iter().map(|t| t.0)).collect();
        return Ok(EffectiveMesh {
            mesh: eff,
            input_relabel: plan.input_relabel.clone(),
            output_relabel: plan.output_relabel.clone(),
            crossing_map,
            ops,
            occupancy: prop.occupancy,
            wire_ops,
        });
    }
    Err(Error::TemplateMismatch(format!(
        "{} surviving crossings do not form a {}-mode template",
        tunable.len(),
        wires
    )))
}

/// Programs the physical mesh so that its used ports realize `target`.
///
/// Fixed crossings and isolated phase shifters get their plan settings;
/// sign flips picked up on fixed cross paths are absorbed into the
/// following tunable phases and the output layer.
pub fn embed_target(mesh: &Mesh, plan: &RoutingPlan, target: &MeshSettings) -> Result<MeshSettings> {
    let eff = effective_layout(mesh, plan)?;
    if plan.is_empty() {
        target.validate(mesh)?;
        return Ok(target.clone());
    }
    let circuit = AbstractCircuit::from_settings(&eff.mesh, target)?;
    let realized = circuit.realize(eff.ops())?;
    let mut settings = MeshSettings::bar(mesh);
    for &x in mesh.crossings() {
        let s = match plan.fixed_setting(x) {
            Some(s) => s,
            None => *realized
                .crossings
                .get(&x)
                .ok_or_else(|| Error::TemplateMismatch(format!("tunable crossing {x} left unprogrammed")))?,
        };
        settings.set(x, s);
    }
    for (port, effective) in &plan.output_relabel {
        settings.output_phases[port - 1] = realized.output_phases[effective - 1];
    }
    Ok(settings)
}

/// Decomposes `target` onto the effective layout and embeds it.
pub fn embed_unitary(mesh: &Mesh, plan: &RoutingPlan, target: &TransferMatrix) -> Result<MeshSettings> {
    let eff = effective_layout(mesh, plan)?;
    let settings = decompose(target, eff.layout())?;
    embed_target(mesh, plan, &settings)
}

/// Component budget left after a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PlanCounts {
    pub effective_modes: usize,
    pub tunable_crossings: usize,
    pub free_phase_shifters: usize,
}

pub fn plan_counts(mesh: &Mesh, plan: &RoutingPlan) -> PlanCounts {
    let tunable_crossings = plan.tunable(mesh).count();
    let effective_modes = mesh.modes().saturating_sub(plan.removed_modes());
    PlanCounts {
        effective_modes,
        tunable_crossings,
        free_phase_shifters: (tunable_crossings + effective_modes).saturating_sub(1),
    }
}
