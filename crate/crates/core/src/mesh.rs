//! Mesh geometry: layouts, crossings, segments and the programmable state.
//!
//! Modes and columns are 1-based. Mode `n` is drawn at the top of the
//! diagram, so "up" means increasing mode index and the top-left corner
//! device is the first crossing acting on mode `n`. A crossing is named by
//! its column and the lower of the two modes it couples; column `c` holds
//! crossings on `(m, m + 1)` for every `m` of the column's parity.
//!
//! A segment `(mode, slot)` is the stretch of one mode between column
//! `slot` and column `slot + 1`. Slot 0 is the input lead and slot `d` the
//! output lead.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    /// Universal rectangular mesh: depth equals the mode count.
    Rectangular,
    /// Brick wall with fewer columns than modes.
    ShallowBrickWall,
}

/// Which mode pairs the first column couples.
///
/// `Aligned` meshes couple `(1,2), (3,4), ...` in column 1, so a crossing
/// `(c, m)` exists iff `m ≡ c (mod 2)`. `Shifted` meshes start with
/// `(2,3), (4,5), ...`. Input meshes are normally aligned; shifted layouts
/// appear as the effective mesh left behind by some circumventions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnParity {
    #[default]
    Aligned,
    Shifted,
}

impl ColumnParity {
    fn offset(self) -> usize {
        match self {
            ColumnParity::Aligned => 0,
            ColumnParity::Shifted => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ColumnParity::Aligned => ColumnParity::Shifted,
            ColumnParity::Shifted => ColumnParity::Aligned,
        }
    }

    fn is_aligned(&self) -> bool {
        *self == ColumnParity::Aligned
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshLayout {
    pub kind: LayoutKind,
    #[serde(rename = "n")]
    pub modes: usize,
    #[serde(rename = "d")]
    pub depth: usize,
    #[serde(default, skip_serializing_if = "ColumnParity::is_aligned")]
    pub parity: ColumnParity,
}

impl MeshLayout {
    pub fn rectangular(modes: usize) -> Self {
        MeshLayout {
            kind: LayoutKind::Rectangular,
            modes,
            depth: modes,
            parity: ColumnParity::Aligned,
        }
    }

    pub fn shallow(modes: usize, depth: usize) -> Self {
        MeshLayout {
            kind: LayoutKind::ShallowBrickWall,
            modes,
            depth,
            parity: ColumnParity::Aligned,
        }
    }

    pub fn with_parity(mut self, parity: ColumnParity) -> Self {
        self.parity = parity;
        self
    }

    /// Checks the layout invariants.
    ///
    /// A one-mode rectangular layout is accepted: it is what remains of a
    /// two-mode mesh after one circumvention.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LayoutKind::Rectangular => {
                if self.modes == 0 {
                    return Err(Error::InvalidLayout("a mesh needs at least one mode".into()));
                }
                if self.depth != self.modes {
                    return Err(Error::InvalidLayout(format!(
                        "rectangular layout needs d = n, got n = {}, d = {}",
                        self.modes, self.depth
                    )));
                }
            }
            LayoutKind::ShallowBrickWall => {
                if self.modes < 2 {
                    return Err(Error::InvalidLayout("a mesh needs at least two modes".into()));
                }
                if self.depth == 0 || self.depth >= self.modes {
                    return Err(Error::InvalidLayout(format!(
                        "shallow brick wall needs 1 <= d < n, got n = {}, d = {}",
                        self.modes, self.depth
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parity rule plus range check.
    pub fn has_crossing(&self, column: usize, lower_mode: usize) -> bool {
        (1..=self.depth).contains(&column)
            && lower_mode >= 1
            && lower_mode < self.modes
            && (lower_mode + self.parity.offset()) % 2 == column % 2
    }
}

impl fmt::Display for MeshLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shifted = if self.parity == ColumnParity::Shifted {
            ", shifted"
        } else {
            ""
        };
        match self.kind {
            LayoutKind::Rectangular => write!(f, "Rectangular({}{shifted})", self.modes),
            LayoutKind::ShallowBrickWall => {
                write!(f, "ShallowBrickWall({}, {}{shifted})", self.modes, self.depth)
            }
        }
    }
}

/// One MZI cell with its input phase shifter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Crossing {
    #[serde(rename = "c")]
    pub column: usize,
    #[serde(rename = "m")]
    pub lower_mode: usize,
}

impl Crossing {
    pub const fn new(column: usize, lower_mode: usize) -> Self {
        Crossing { column, lower_mode }
    }

    pub fn upper_mode(&self) -> usize {
        self.lower_mode + 1
    }

    pub fn touches(&self, mode: usize) -> bool {
        mode == self.lower_mode || mode == self.lower_mode + 1
    }

    /// The two segments feeding this crossing, lower mode first.
    pub fn input_segments(&self) -> [Segment; 2] {
        [
            Segment::new(self.lower_mode, self.column - 1),
            Segment::new(self.lower_mode + 1, self.column - 1),
        ]
    }
}

impl fmt::Display for Crossing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.column, self.lower_mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub mode: usize,
    pub slot: usize,
}

impl Segment {
    pub const fn new(mode: usize, slot: usize) -> Self {
        Segment { mode, slot }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(mode {}, slot {})", self.mode, self.slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCounts {
    pub beamsplitters: usize,
    pub phase_shifters: usize,
    pub total: usize,
}

/// Crossings adjacent to a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbors {
    pub left: Option<Crossing>,
    pub right: Option<Crossing>,
}

/// Immutable mesh geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mesh {
    layout: MeshLayout,
    crossings: Vec<Crossing>,
    index: HashMap<Crossing, usize>,
}

impl Mesh {
    pub fn new(layout: MeshLayout) -> Result<Self> {
        layout.validate()?;
        let crossings: Vec<Crossing> = (1..=layout.depth)
            .flat_map(|c| (1..layout.modes).map(move |m| Crossing::new(c, m)))
            .filter(|x| layout.has_crossing(x.column, x.lower_mode))
            .collect();
        let index = crossings.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        Ok(Mesh {
            layout,
            crossings,
            index,
        })
    }

    pub fn rectangular(modes: usize) -> Result<Self> {
        Mesh::new(MeshLayout::rectangular(modes))
    }

    pub fn layout(&self) -> MeshLayout {
        self.layout
    }

    pub fn modes(&self) -> usize {
        self.layout.modes
    }

    pub fn depth(&self) -> usize {
        self.layout.depth
    }

    /// All crossings in column-major order.
    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    pub fn column(&self, column: usize) -> impl Iterator<Item = Crossing> + '_ {
        self.crossings.iter().copied().filter(move |x| x.column == column)
    }

    pub fn contains(&self, crossing: Crossing) -> bool {
        self.index.contains_key(&crossing)
    }

    pub fn index_of(&self, crossing: Crossing) -> Option<usize> {
        self.index.get(&crossing).copied()
    }

    pub fn contains_segment(&self, segment: Segment) -> bool {
        (1..=self.modes()).contains(&segment.mode) && segment.slot <= self.depth()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..=self.depth()).flat_map(move |s| (1..=self.modes()).map(move |m| Segment::new(m, s)))
    }

    pub fn segment_count(&self) -> usize {
        self.modes() * (self.depth() + 1)
    }

    /// The crossing in `column` acting on `mode`, if any.
    pub fn crossing_on(&self, column: usize, mode: usize) -> Option<Crossing> {
        [mode, mode.wrapping_sub(1)]
            .into_iter()
            .find(|&m| self.layout.has_crossing(column, m))
            .map(|m| Crossing::new(column, m))
    }

    pub fn neighbors(&self, segment: Segment) -> Result<Neighbors> {
        if !self.contains_segment(segment) {
            return Err(Error::UnknownSegment(segment));
        }
        let left = if segment.slot == 0 {
            None
        } else {
            self.crossing_on(segment.slot, segment.mode)
        };
        let right = self.crossing_on(segment.slot + 1, segment.mode);
        Ok(Neighbors { left, right })
    }

    pub fn component_counts(&self) -> ComponentCounts {
        let beamsplitters = self.crossings.len();
        // One phase shifter per crossing plus the output layer, less a global phase.
        let phase_shifters = beamsplitters + self.modes() - 1;
        ComponentCounts {
            beamsplitters,
            phase_shifters,
            total: beamsplitters + phase_shifters,
        }
    }
}

/// Parameters of one crossing, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MziSetting {
    pub theta: f64,
    pub phi: f64,
}

impl MziSetting {
    pub const BAR: MziSetting = MziSetting { theta: 0.0, phi: 0.0 };
    pub const CROSS: MziSetting = MziSetting {
        theta: std::f64::consts::FRAC_PI_2,
        phi: 0.0,
    };

    pub fn new(theta: f64, phi: f64) -> Self {
        MziSetting { theta, phi }
    }
}

/// The programmable state of a mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeshSettings {
    pub crossings: BTreeMap<Crossing, MziSetting>,
    pub output_phases: Vec<f64>,
}

impl MeshSettings {
    /// Every crossing in the bar state, all phases zero.
    pub fn bar(mesh: &Mesh) -> Self {
        MeshSettings {
            crossings: mesh.crossings().iter().map(|&x| (x, MziSetting::BAR)).collect(),
            output_phases: vec![0.0; mesh.modes()],
        }
    }

    pub fn get(&self, crossing: Crossing) -> Option<MziSetting> {
        self.crossings.get(&crossing).copied()
    }

    pub fn set(&mut self, crossing: Crossing, setting: MziSetting) {
        self.crossings.insert(crossing, setting);
    }

    /// Checks that there is exactly one setting per crossing of `mesh`.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.output_phases.len() != mesh.modes() {
            return Err(Error::SettingsMismatch(format!(
                "{} output phases for {} modes",
                self.output_phases.len(),
                mesh.modes()
            )));
        }
        if let Some(x) = self.crossings.keys().find(|x| !mesh.contains(**x)) {
            return Err(Error::UnknownCrossing(*x));
        }
        if let Some(x) = mesh.crossings().iter().find(|x| !self.crossings.contains_key(x)) {
            return Err(Error::SettingsMismatch(format!("no setting for crossing {x}")));
        }
        Ok(())
    }
}

/// Maps an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let wrapped = phase.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}
