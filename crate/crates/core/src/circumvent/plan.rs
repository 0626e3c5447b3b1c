use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Crossing, Mesh, MeshLayout, MziSetting, Segment};

/// What a crossing is used for under a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingRole {
    Tunable,
    Cross,
    Bar,
    DontCare,
}

/// Fixed crossings, discarded ports and relabelings isolating a set of defects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingPlan {
    /// Layout of the mesh the plan was computed for.
    pub layout: MeshLayout,
    pub fixed_cross: BTreeSet<Crossing>,
    pub fixed_bar: BTreeSet<Crossing>,
    pub dont_care: BTreeSet<Crossing>,
    pub discarded_inputs: Vec<usize>,
    pub discarded_outputs: Vec<usize>,
    pub isolated_segments: BTreeSet<Segment>,
    pub input_relabel: BTreeMap<usize, usize>,
    pub output_relabel: BTreeMap<usize, usize>,
}

impl RoutingPlan {
    /// Nothing fixed, nothing discarded.
    pub fn empty(mesh: &Mesh) -> Self {
        let n = mesh.modes();
        RoutingPlan {
            layout: mesh.layout(),
            fixed_cross: BTreeSet::new(),
            fixed_bar: BTreeSet::new(),
            dont_care: BTreeSet::new(),
            discarded_inputs: Vec::new(),
            discarded_outputs: Vec::new(),
            isolated_segments: BTreeSet::new(),
            input_relabel: compaction(n, &[]),
            output_relabel: compaction(n, &[]),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.discarded_inputs.is_empty()
            && self.fixed_cross.is_empty()
            && self.fixed_bar.is_empty()
            && self.dont_care.is_empty()
    }

    /// Number of port pairs given up.
    pub fn removed_modes(&self) -> usize {
        self.discarded_inputs.len()
    }

    pub fn role(&self, crossing: Crossing) -> CrossingRole {
        if self.fixed_cross.contains(&crossing) {
            CrossingRole::Cross
        } else if self.fixed_bar.contains(&crossing) {
            CrossingRole::Bar
        } else if self.dont_care.contains(&crossing) {
            CrossingRole::DontCare
        } else {
            CrossingRole::Tunable
        }
    }

    /// Setting of a non-tunable crossing; don't-care defaults to bar.
    pub fn fixed_setting(&self, crossing: Crossing) -> Option<MziSetting> {
        match self.role(crossing) {
            CrossingRole::Cross => Some(MziSetting::CROSS),
            CrossingRole::Bar | CrossingRole::DontCare => Some(MziSetting::BAR),
            CrossingRole::Tunable => None,
        }
    }

    pub fn fixed_count(&self) -> usize {
        self.fixed_cross.len() + self.fixed_bar.len() + self.dont_care.len()
    }

    pub fn tunable(&self, mesh: &Mesh) -> impl Iterator<Item = Crossing> + '_ {
        mesh.crossings()
            .iter()
            .copied()
            .filter(move |&x| self.role(x) == CrossingRole::Tunable)
            .collect::<Vec<_>>()
            .into_iter()
    }

    /// Checks that the plan refers to `mesh` and its own invariants hold.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.layout != mesh.layout() {
            return Err(Error::PlanMismatch(format!(
                "plan is for {}, mesh is {}",
                self.layout,
                mesh.layout()
            )));
        }
        let all = self.fixed_cross.iter().chain(&self.fixed_bar).chain(&self.dont_care);
        if let Some(x) = all.clone().find(|x| !mesh.contains(**x)) {
            return Err(Error::UnknownCrossing(*x));
        }
        if all.count() != self.fixed_count_distinct() {
            return Err(Error::PlanMismatch("fixed crossing sets overlap".into()));
        }
        if self.discarded_inputs.len() != self.discarded_outputs.len() {
            return Err(Error::PlanMismatch(format!(
                "{} discarded inputs but {} discarded outputs",
                self.discarded_inputs.len(),
                self.discarded_outputs.len()
            )));
        }
        let n = mesh.modes();
        for &p in self.discarded_inputs.iter().chain(&self.discarded_outputs) {
            if !(1..=n).contains(&p) {
                return Err(Error::ModeOutOfRange { mode: p, modes: n });
            }
        }
        if let Some(s) = self.isolated_segments.iter().find(|s| !mesh.contains_segment(**s)) {
            return Err(Error::UnknownSegment(*s));
        }
        if self.input_relabel != compaction(n, &self.discarded_inputs)
            || self.output_relabel != compaction(n, &self.discarded_outputs)
        {
            return Err(Error::PlanMismatch("relabel maps are not compactions".into()));
        }
        Ok(())
    }

    fn fixed_count_distinct(&self) -> usize {
        let mut all: BTreeSet<Crossing> = self.fixed_cross.clone();
        all.extend(&self.fixed_bar);
        all.extend(&self.dont_care);
        all.len()
    }

    pub(crate) fn refresh_relabels(&mut self, modes: usize) {
        self.discarded_inputs.sort_unstable();
        self.discarded_inputs.dedup();
        self.discarded_outputs.sort_unstable();
        self.discarded_outputs.dedup();
        self.input_relabel = compaction(modes, &self.discarded_inputs);
        self.output_relabel = compaction(modes, &self.discarded_outputs);
    }
}

/// Order-preserving map from kept ports to `1..=n-k`.
pub fn compaction(modes: usize, discarded: &[usize]) -> BTreeMap<usize, usize> {
    (1..=modes)
        .filter(|p| !discarded.contains(p))
        .enumerate()
        .map(|(i, p)| (p, i + 1))
        .collect()
}

/// Unions independent plans.
///
/// Crossings claimed as both cross and bar become don't-care. Identical
/// plans (two defects on one diagonal path) collapse into one.
pub fn merge_plans(plans: &[RoutingPlan]) -> Result<RoutingPlan> {
    let first = plans
        .first()
        .ok_or_else(|| Error::InvalidArgument("no plans to merge".into()))?;
    let layout = first.layout;
    if let Some(p) = plans.iter().find(|p| p.layout != layout) {
        return Err(Error::PlanMismatch(format!(
            "cannot merge plans for {} and {}",
            layout, p.layout
        )));
    }
    let mut distinct: Vec<&RoutingPlan> = Vec::new();
    for p in plans {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    let mut merged = RoutingPlan {
        layout,
        fixed_cross: BTreeSet::new(),
        fixed_bar: BTreeSet::new(),
        dont_care: BTreeSet::new(),
        discarded_inputs: Vec::new(),
        discarded_outputs: Vec::new(),
        isolated_segments: BTreeSet::new(),
        input_relabel: BTreeMap::new(),
        output_relabel: BTreeMap::new(),
    };
    let mut removed = 0;
    for p in &distinct {
        merged.fixed_cross.extend(&p.fixed_cross);
        merged.fixed_bar.extend(&p.fixed_bar);
        merged.dont_care.extend(&p.dont_care);
        merged.discarded_inputs.extend(&p.discarded_inputs);
        merged.discarded_outputs.extend(&p.discarded_outputs);
        merged.isolated_segments.extend(&p.isolated_segments);
        removed += p.discarded_inputs.len();
    }
    let conflicts: Vec<Crossing> = merged.fixed_cross.intersection(&merged.fixed_bar).copied().collect();
    merged.dont_care.extend(conflicts);
    for x in &merged.dont_care {
        merged.fixed_cross.remove(x);
        merged.fixed_bar.remove(x);
    }
    merged.refresh_relabels(layout.modes);
    if merged.discarded_inputs.len() != removed || merged.discarded_outputs.len() != removed {
        return Err(Error::PlanConflict(format!(
            "{removed} paths share ports: {} inputs and {} outputs remain distinct",
            merged.discarded_inputs.len(),
            merged.discarded_outputs.len()
        )));
    }
    Ok(merged)
}
