use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Crossing, Mesh, Segment};

/// Where a phase shifter sits: on a crossing's lower input or in the output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLocation {
    Crossing(Crossing),
    Output(usize),
}

/// One defect realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefectSpec {
    /// Excess loss on a segment; `eta` is the amplitude transmissivity.
    SegmentLoss { segment: Segment, eta: f64 },
    /// Crossing frozen at fixed parameters.
    StuckCrossing { crossing: Crossing, theta: f64, phi: f64 },
    /// Crossing whose θ only reaches `[theta_min, theta_max]`.
    RangeLimitedCrossing {
        crossing: Crossing,
        theta_min: f64,
        theta_max: f64,
    },
    /// Phase shifter that ignores its setting and applies `value`.
    DeadPhaseShifter { location: PhaseLocation, value: f64 },
}

impl DefectSpec {
    /// Amplitude transmissivity for a loss given in dB of excess power loss.
    pub fn eta_from_db(db: f64) -> f64 {
        10f64.powf(-db / 20.0)
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let known = |x: Crossing| {
            if mesh.contains(x) {
                Ok(())
            } else {
                Err(Error::UnknownCrossing(x))
            }
        };
        match *self {
            DefectSpec::SegmentLoss { segment, eta } => {
                if !mesh.contains_segment(segment) {
                    return Err(Error::UnknownSegment(segment));
                }
                if !(0.0..=1.0).contains(&eta) {
                    return Err(Error::InvalidDefect(format!("eta = {eta} outside [0, 1]")));
                }
            }
            DefectSpec::StuckCrossing { crossing, .. } => known(crossing)?,
            DefectSpec::RangeLimitedCrossing {
                crossing,
                theta_min,
                theta_max,
            } => {
                known(crossing)?;
                if !(0.0 <= theta_min && theta_min <= theta_max && theta_max <= FRAC_PI_2) {
                    return Err(Error::InvalidDefect(format!(
                        "theta range [{theta_min}, {theta_max}] is empty or outside [0, pi/2]"
                    )));
                }
            }
            DefectSpec::DeadPhaseShifter { location, .. } => match location {
                PhaseLocation::Crossing(x) => known(x)?,
                PhaseLocation::Output(mode) => {
                    if !(1..=mesh.modes()).contains(&mode) {
                        return Err(Error::ModeOutOfRange {
                            mode,
                            modes: mesh.modes(),
                        });
                    }
                }
            },
        }
        Ok(())
    }

    /// The single-mode defects this defect is equivalent to.
    pub fn segments(&self, mesh: &Mesh) -> Result<Vec<Segment>> {
        self.validate(mesh)?;
        Ok(match *self {
            DefectSpec::SegmentLoss { segment, .. } => vec![segment],
            DefectSpec::StuckCrossing { crossing, .. } | DefectSpec::RangeLimitedCrossing { crossing, .. } => {
                crossing.input_segments().to_vec()
            }
            DefectSpec::DeadPhaseShifter { location, .. } => match location {
                // The crossing phase multiplies the lower input.
                PhaseLocation::Crossing(x) => vec![x.input_segments()[0]],
                PhaseLocation::Output(mode) => vec![Segment::new(mode, mesh.depth())],
            },
        })
    }
}

/// Reduces every defect to the set of single-mode defects that isolate it.
pub fn reduce_defects(mesh: &Mesh, defects: &[DefectSpec]) -> Result<BTreeSet<Segment>> {
    let mut out = BTreeSet::new();
    for d in defects {
        out.extend(d.segments(mesh)?);
    }
    Ok(out)
}
