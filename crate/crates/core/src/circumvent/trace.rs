use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::plan::RoutingPlan;
use crate::error::{Error, Result};
use crate::mesh::{Crossing, Mesh, Segment};

/// Direction of the diagonal path through a segment, read left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Descends from the top-left towards the bottom-right.
    #[serde(rename = "nwse")]
    NorthWestSouthEast,
    /// Ascends from the bottom-left towards the top-right.
    #[serde(rename = "nesw")]
    NorthEastSouthWest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    AboveMainDiagonal,
    BelowMainDiagonal,
}

/// Mesh boundary a segment lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Top,
    Bottom,
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalClass {
    pub orientation: Orientation,
    pub side: Side,
    pub edge: Option<Edge>,
}

/// Orientation forced by a segment's own neighbours, if it has any.
fn local_orientation(mesh: &Mesh, segment: Segment) -> Result<Option<Orientation>> {
    use Orientation::*;
    let m = segment.mode;
    let nb = mesh.neighbors(segment)?;
    Ok(match (nb.left, nb.right) {
        (Some(l), _) => Some(if l.lower_mode == m {
            NorthWestSouthEast
        } else {
            NorthEastSouthWest
        }),
        (None, Some(r)) => Some(if r.lower_mode + 1 == m {
            NorthWestSouthEast
        } else {
            NorthEastSouthWest
        }),
        (None, None) => None,
    })
}

/// The segment the diagonal is traced from: the segment itself, or the
/// nearest segment on the same mode that touches a crossing.
fn anchor(mesh: &Mesh, segment: Segment) -> Result<Option<(Segment, Orientation)>> {
    if let Some(o) = local_orientation(mesh, segment)? {
        return Ok(Some((segment, o)));
    }
    let earlier = (0..segment.slot).rev();
    let later = segment.slot + 1..=mesh.depth();
    for slot in earlier.chain(later) {
        let s = Segment::new(segment.mode, slot);
        if let Some(o) = local_orientation(mesh, s)? {
            return Ok(Some((s, o)));
        }
    }
    Ok(None)
}

fn edge_of(mesh: &Mesh, segment: Segment) -> Option<Edge> {
    if segment.slot == 0 {
        Some(Edge::Input)
    } else if segment.slot == mesh.depth() {
        Some(Edge::Output)
    } else if segment.mode == mesh.modes() {
        Some(Edge::Top)
    } else if segment.mode == 1 {
        Some(Edge::Bottom)
    } else {
        None
    }
}

fn side_of(mesh: &Mesh, segment: Segment, orientation: Orientation) -> Side {
    let (n, d) = (mesh.modes() as i64, mesh.depth() as i64);
    let (m, s) = (segment.mode as i64, segment.slot as i64);
    let above = match orientation {
        Orientation::NorthWestSouthEast => 2 * (m + s) >= n + 1 + d,
        Orientation::NorthEastSouthWest => 2 * (s - m) < d - n,
    };
    if above {
        Side::AboveMainDiagonal
    } else {
        Side::BelowMainDiagonal
    }
}

/// Orientation, side and boundary of the diagonal through `segment`.
///
/// Segments without adjacent crossings take the orientation of the nearest
/// segment on the same mode that has one.
pub fn classify_segment(mesh: &Mesh, segment: Segment) -> Result<DiagonalClass> {
    let (anchored, orientation) = anchor(mesh, segment)?
        .ok_or_else(|| Error::InvalidArgument(format!("mode {} meets no crossing", segment.mode)))?;
    Ok(DiagonalClass {
        orientation,
        side: side_of(mesh, anchored, orientation),
        edge: edge_of(mesh, segment),
    })
}

#[derive(Default)]
struct Trace {
    cross: BTreeSet<Crossing>,
    bar: BTreeSet<Crossing>,
    path: BTreeSet<Segment>,
}

impl Trace {
    /// Walks from `start` to the input leads; returns the input port reached.
    fn backward(&mut self, mesh: &Mesh, start: Segment, orientation: Orientation) -> usize {
        let nwse = orientation == Orientation::NorthWestSouthEast;
        let (mut m, mut s) = (start.mode, start.slot);
        while s > 0 {
            match mesh.crossing_on(s, m) {
                Some(x) if (if nwse { x.lower_mode == m } else { x.lower_mode + 1 == m }) => {
                    self.cross.insert(x);
                    m = if nwse { m + 1 } else { m - 1 };
                    s -= 1;
                    self.path.insert(Segment::new(m, s));
                }
                _ => break,
            }
        }
        if s == 0 {
            // Crossings in the first column beyond the diagonal's end would
            // otherwise leak used light onto the discarded lead.
            for x in mesh.column(1) {
                let beyond = if nwse { x.lower_mode > m } else { x.lower_mode + 1 < m };
                if beyond {
                    self.bar.insert(x);
                }
            }
        }
        while s > 0 {
            if let Some(x) = mesh.crossing_on(s, m) {
                self.bar.insert(x);
            }
            s -= 1;
            self.path.insert(Segment::new(m, s));
        }
        m
    }

    /// Walks from `start` to the output leads; returns the output port reached.
    fn forward(&mut self, mesh: &Mesh, start: Segment, orientation: Orientation) -> usize {
        let nwse = orientation == Orientation::NorthWestSouthEast;
        let d = mesh.depth();
        let (mut m, mut s) = (start.mode, start.slot);
        while s < d {
            match mesh.crossing_on(s + 1, m) {
                Some(x) if (if nwse { x.lower_mode + 1 == m } else { x.lower_mode == m }) => {
                    self.cross.insert(x);
                    m = if nwse { m - 1 } else { m + 1 };
                    s += 1;
                    self.path.insert(Segment::new(m, s));
                }
                _ => break,
            }
        }
        if s == d {
            for x in mesh.column(d) {
                let beyond = if nwse { x.lower_mode + 1 < m } else { x.lower_mode > m };
                if beyond {
                    self.bar.insert(x);
                }
            }
        }
        while s < d {
            if let Some(x) = mesh.crossing_on(s + 1, m) {
                self.bar.insert(x);
            }
            s += 1;
            self.path.insert(Segment::new(m, s));
        }
        m
    }
}

/// Routing plan isolating a single defective segment.
///
/// The diagonal through the defect is fixed to cross, the stretches along
/// the mesh boundary are fixed to bar, and the ports at the two ends of the
/// path are discarded.
pub fn plan_single(mesh: &Mesh, defect: Segment) -> Result<RoutingPlan> {
    if !mesh.contains_segment(defect) {
        return Err(Error::UnknownSegment(defect));
    }
    let mut plan = RoutingPlan::empty(mesh);
    let mut trace = Trace::default();
    trace.path.insert(defect);
    let (input, output) = match anchor(mesh, defect)? {
        Some((start, orientation)) => {
            trace.path.insert(start);
            let input = trace.backward(mesh, start, orientation);
            let output = trace.forward(mesh, start, orientation);
            (input, output)
        }
        None => {
            // A mode no crossing touches is its own isolated path.
            trace
                .path
                .extend((0..=mesh.depth()).map(|s| Segment::new(defect.mode, s)));
            (defect.mode, defect.mode)
        }
    };
    plan.fixed_bar = trace.bar.difference(&trace.cross).copied().collect();
    plan.fixed_cross = trace.cross;
    plan.isolated_segments = trace.path;
    plan.discarded_inputs = vec![input];
    plan.discarded_outputs = vec![output];
    plan.refresh_relabels(mesh.modes());
    Ok(plan)
}
