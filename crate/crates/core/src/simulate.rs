//! Forward simulation, field probes and plan verification.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circumvent::{
    effective_layout, embed_target, embed_unitary, plan_counts, reduce_defects, DefectSpec, PhaseLocation, RoutingPlan,
};
use crate::decompose::{crossing_matrix, max_abs_diff, TransferMatrix};
use crate::error::{Error, Result};
use crate::mesh::{Crossing, Mesh, MeshLayout, MeshSettings, MziSetting, Segment};

pub const ZERO_LIGHT_TOLERANCE: f64 = 1e-12;
pub const MATRIX_TOLERANCE: f64 = 1e-10;

/// Settings and per-segment loss after applying defect realizations.
struct Realization {
    settings: MeshSettings,
    loss: BTreeMap<Segment, f64>,
}

fn realize(mesh: &Mesh, settings: &MeshSettings, defects: &[DefectSpec]) -> Result<Realization> {
    settings.validate(mesh)?;
    let mut settings = settings.clone();
    let mut loss: BTreeMap<Segment, f64> = BTreeMap::new();
    for d in defects {
        d.validate(mesh)?;
        match *d {
            DefectSpec::SegmentLoss { segment, eta } => *loss.entry(segment).or_insert(1.0) *= eta,
            DefectSpec::StuckCrossing { crossing, theta, phi } => settings.set(crossing, MziSetting::new(theta, phi)),
            DefectSpec::RangeLimitedCrossing {
                crossing,
                theta_min,
                theta_max,
            } => {
                let s = settings.get(crossing).unwrap_or_default();
                settings.set(crossing, MziSetting::new(s.theta.clamp(theta_min, theta_max), s.phi));
            }
            DefectSpec::DeadPhaseShifter { location, value } => match location {
                PhaseLocation::Crossing(x) => {
                    let s = settings.get(x).unwrap_or_default();
                    settings.set(x, MziSetting::new(s.theta, value));
                }
                PhaseLocation::Output(mode) => settings.output_phases[mode - 1] = value,
            },
        }
    }
    Ok(Realization { settings, loss })
}

/// Field on every slot: entry `(mode - 1, input - 1)` of element `s` is the
/// amplitude entering segment `(mode, s)` for a unit field at `input`.
///
/// The output phase layer is folded into the last slot; segment losses act
/// after the segment is entered.
pub fn field_history(mesh: &Mesh, settings: &MeshSettings, defects: &[DefectSpec]) -> Result<Vec<TransferMatrix>> {
    let Realization { settings, loss } = realize(mesh, settings, defects)?;
    let n = mesh.modes();
    let d = mesh.depth();
    let mut u = TransferMatrix::identity(n, n);
    let mut history = Vec::with_capacity(d + 1);
    let apply_loss = |u: &mut TransferMatrix, slot: usize| {
        for m in 1..=n {
            if let Some(eta) = loss.get(&Segment::new(m, slot)) {
                u.row_mut(m - 1).scale_mut(*eta);
            }
        }
    };
    for c in 0..=d {
        if c > 0 {
            for x in mesh.column(c) {
                let s = settings.crossings[&x];
                let t = crossing_matrix(s.theta, s.phi);
                let (lo, hi) = (x.lower_mode - 1, x.lower_mode);
                for j in 0..n {
                    let a = u[(lo, j)];
                    let b = u[(hi, j)];
                    u[(lo, j)] = t[(0, 0)] * a + t[(0, 1)] * b;
                    u[(hi, j)] = t[(1, 0)] * a + t[(1, 1)] * b;
                }
            }
        }
        if c == d {
            for (m, &w) in settings.output_phases.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, w);
                u.row_mut(m).iter_mut().for_each(|z| *z *= phase);
            }
        }
        history.push(u.clone());
        apply_loss(&mut u, c);
    }
    Ok(history)
}

/// Full transfer matrix with defects realized.
pub fn transfer(mesh: &Mesh, settings: &MeshSettings, defects: &[DefectSpec]) -> Result<TransferMatrix> {
    let mut u = field_history(mesh, settings, defects)?
        .pop()
        .expect("at least one slot");
    for d in defects {
        if let DefectSpec::SegmentLoss { segment, eta } = *d {
            if segment.slot == mesh.depth() {
                u.row_mut(segment.mode - 1).scale_mut(eta);
            }
        }
    }
    Ok(u)
}

/// Amplitude entering `segment` for a unit field at `input_port`.
pub fn amplitude_at(mesh: &Mesh, settings: &MeshSettings, input_port: usize, segment: Segment) -> Result<Complex64> {
    if !(1..=mesh.modes()).contains(&input_port) {
        return Err(Error::ModeOutOfRange {
            mode: input_port,
            modes: mesh.modes(),
        });
    }
    if !mesh.contains_segment(segment) {
        return Err(Error::UnknownSegment(segment));
    }
    let history = field_history(mesh, settings, &[])?;
    Ok(history[segment.slot][(segment.mode - 1, input_port - 1)])
}

/// Transfer matrix restricted to used ports, indexed by the relabeled ports.
pub fn effective_matrix(
    mesh: &Mesh,
    settings: &MeshSettings,
    plan: &RoutingPlan,
    defects: &[DefectSpec],
) -> Result<TransferMatrix> {
    plan.check(mesh)?;
    let full = transfer(mesh, settings, defects)?;
    Ok(restrict(&full, plan))
}

fn restrict(full: &TransferMatrix, plan: &RoutingPlan) -> TransferMatrix {
    let k = plan.input_relabel.len();
    let mut out = DMatrix::zeros(k, k);
    for (&o, &eo) in &plan.output_relabel {
        for (&i, &ei) in &plan.input_relabel {
            out[(eo - 1, ei - 1)] = full[(o - 1, i - 1)];
        }
    }
    out
}

/// What the effective interferometer should implement.
#[derive(Debug, Clone)]
pub enum Target {
    Matrix(TransferMatrix),
    /// Settings for the effective layout.
    Settings(MeshSettings),
}

impl Target {
    pub fn matrix(&self, layout: MeshLayout) -> Result<TransferMatrix> {
        match self {
            Target::Matrix(u) => Ok(u.clone()),
            Target::Settings(s) => transfer(&Mesh::new(layout)?, s, &[]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Largest amplitude from a used input on an isolated segment.
    pub zero_light: f64,
    /// Max-norm distance between the effective matrix and the target.
    pub target_error: Option<f64>,
    pub counts_ok: bool,
    pub structure_ok: bool,
    pub independence_ok: bool,
    /// Largest change of the effective matrix over the defect sweep.
    pub independence_error: f64,
    pub effective_layout: Option<MeshLayout>,
    pub pass: bool,
    pub messages: Vec<String>,
}

/// Embeds `target` and checks the result.
pub fn verify_plan(
    mesh: &Mesh,
    plan: &RoutingPlan,
    defects: &[DefectSpec],
    target: &Target,
) -> Result<VerificationReport> {
    let eff = effective_layout(mesh, plan)?;
    let u = target.matrix(eff.layout())?;
    let settings = match target {
        Target::Matrix(u) => embed_unitary(mesh, plan, u)?,
        Target::Settings(s) => embed_target(mesh, plan, s)?,
    };
    verify_settings(mesh, plan, defects, &settings, Some(&u))
}

/// Checks programmed settings against a plan, its defects and an optional target.
pub fn verify_settings(
    mesh: &Mesh,
    plan: &RoutingPlan,
    defects: &[DefectSpec],
    settings: &MeshSettings,
    target: Option<&TransferMatrix>,
) -> Result<VerificationReport> {
    plan.check(mesh)?;
    settings.validate(mesh)?;
    let mut messages = Vec::new();

    let history = field_history(mesh, settings, defects)?;
    let mut zero_light: f64 = 0.0;
    for seg in &plan.isolated_segments {
        for &i in plan.input_relabel.keys() {
            zero_light = zero_light.max(history[seg.slot][(seg.mode - 1, i - 1)].norm());
        }
    }
    if zero_light >= ZERO_LIGHT_TOLERANCE {
        messages.push(format!("used light reaches isolated segments (max {zero_light:.3e})"));
    }

    let effective = effective_layout(mesh, plan);
    let mut structure_ok = effective.is_ok();
    if let Err(e) = &effective {
        messages.push(e.to_string());
    }
    let defect_segments = reduce_defects(mesh, defects)?;
    if let Some(s) = defect_segments.iter().find(|s| !plan.isolated_segments.contains(s)) {
        structure_ok = false;
        messages.push(format!("defect {s} is not isolated"));
    }
    let effective_layout = effective.as_ref().ok().map(|e| e.layout());

    let counts = plan_counts(mesh, plan);
    let counts_ok = match &effective {
        Ok(eff) => {
            let expected = eff.mesh.component_counts();
            counts.tunable_crossings == expected.beamsplitters
                && counts.free_phase_shifters == expected.phase_shifters
                && counts.tunable_crossings + plan.fixed_count() == mesh.crossings().len()
        }
        Err(_) => false,
    };
    if !counts_ok {
        messages.push(format!(
            "{} tunable crossings and {} free phase shifters do not fit the effective layout",
            counts.tunable_crossings, counts.free_phase_shifters
        ));
    }

    let current = effective_matrix(mesh, settings, plan, defects)?;
    let target_error = match target {
        Some(t) if t.shape() == current.shape() => Some(max_abs_diff(&current, t)),
        Some(t) => {
            messages.push(format!(
                "target is {}×{}, effective matrix is {}×{}",
                t.nrows(),
                t.ncols(),
                current.nrows(),
                current.ncols()
            ));
            Some(f64::INFINITY)
        }
        None => None,
    };
    if let Some(e) = target_error.filter(|e| *e >= MATRIX_TOLERANCE) {
        messages.push(format!("effective matrix misses the target by {e:.3e}"));
    }

    let independence_error = defect_sweep(mesh, settings, plan, defects, &current)?;
    let independence_ok = independence_error < MATRIX_TOLERANCE;
    if !independence_ok {
        messages.push(format!(
            "effective matrix depends on defect parameters ({independence_error:.3e})"
        ));
    }

    let pass = zero_light < ZERO_LIGHT_TOLERANCE
        && target_error.is_none_or(|e| e < MATRIX_TOLERANCE)
        && counts_ok
        && structure_ok
        && independence_ok;
    Ok(VerificationReport {
        zero_light,
        target_error,
        counts_ok,
        structure_ok,
        independence_ok,
        independence_error,
        effective_layout,
        pass,
        messages,
    })
}

const SWEEP_ETAS: [f64; 4] = [1.0, 0.5, 0.316, 0.1];
const SWEEP_STUCK_SAMPLES: usize = 10;
const SWEEP_SEED: u64 = 0x5eed;
const MAX_EXHAUSTIVE_FLIPS: usize = 10;

/// Largest change of the effective matrix when defect parameters and
/// don't-care settings are varied.
fn defect_sweep(
    mesh: &Mesh,
    settings: &MeshSettings,
    plan: &RoutingPlan,
    defects: &[DefectSpec],
    reference: &TransferMatrix,
) -> Result<f64> {
    let segments = reduce_defects(mesh, defects)?;
    let mut worst: f64 = 0.0;
    let mut check = |settings: &MeshSettings, realizations: &[DefectSpec]| -> Result<()> {
        let m = effective_matrix(mesh, settings, plan, realizations)?;
        worst = worst.max(max_abs_diff(&m, reference));
        Ok(())
    };

    for eta in SWEEP_ETAS {
        let mut r: Vec<DefectSpec> = defects.to_vec();
        r.extend(segments.iter().map(|&segment| DefectSpec::SegmentLoss { segment, eta }));
        check(settings, &r)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let random_setting =
        |rng: &mut ChaCha8Rng| MziSetting::new(rng.random_range(0.0..=FRAC_PI_2), rng.random_range(0.0..TAU));
    for _ in 0..SWEEP_STUCK_SAMPLES {
        let r: Vec<DefectSpec> = defects
            .iter()
            .map(|d| match *d {
                DefectSpec::SegmentLoss { segment, .. } => DefectSpec::SegmentLoss {
                    segment,
                    eta: rng.random_range(0.0..=1.0),
                },
                DefectSpec::StuckCrossing { crossing, .. } => {
                    let s = random_setting(&mut rng);
                    DefectSpec::StuckCrossing {
                        crossing,
                        theta: s.theta,
                        phi: s.phi,
                    }
                }
                DefectSpec::RangeLimitedCrossing { crossing, .. } => {
                    let a: f64 = rng.random_range(0.0..=FRAC_PI_2);
                    let b: f64 = rng.random_range(0.0..=FRAC_PI_2);
                    DefectSpec::RangeLimitedCrossing {
                        crossing,
                        theta_min: a.min(b),
                        theta_max: a.max(b),
                    }
                }
                DefectSpec::DeadPhaseShifter { location, .. } => DefectSpec::DeadPhaseShifter {
                    location,
                    value: rng.random_range(0.0..TAU),
                },
            })
            .collect();
        check(settings, &r)?;
        // Stuck values on every crossing fed only by isolated segments.
        let stuck: Vec<DefectSpec> = isolated_crossings(mesh, plan)
            .map(|crossing| {
                let s = random_setting(&mut rng);
                DefectSpec::StuckCrossing {
                    crossing,
                    theta: s.theta,
                    phi: s.phi,
                }
            })
            .collect();
        check(settings, &stuck)?;
    }

    let dont_care: Vec<Crossing> = plan.dont_care.iter().copied().collect();
    let flips: Vec<u64> = if dont_care.len() <= MAX_EXHAUSTIVE_FLIPS {
        (1..1u64 << dont_care.len()).collect()
    } else {
        (0..dont_care.len()).map(|i| 1u64 << i).chain([u64::MAX]).collect()
    };
    for mask in flips {
        for alternative in [MziSetting::CROSS, random_setting(&mut rng)] {
            let mut s = settings.clone();
            for (i, &x) in dont_care.iter().enumerate() {
                if mask >> i.min(63) & 1 == 1 {
                    s.set(x, alternative);
                }
            }
            check(&s, defects)?;
        }
    }
    Ok(worst)
}

/// Crossings whose inputs both lie on isolated segments.
fn isolated_crossings<'a>(mesh: &'a Mesh, plan: &'a RoutingPlan) -> impl Iterator<Item = Crossing> + 'a {
    mesh.crossings()
        .iter()
        .copied()
        .filter(move |x| x.input_segments().iter().all(|s| plan.isolated_segments.contains(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circumvent::{plan_defects, plan_single};
    use crate::decompose::{decompose, unitarity_deviation};
    use crate::haar::haar_unitary;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn all_bar_mesh_is_diagonal() {
        let mesh = Mesh::rectangular(4).unwrap();
        let mut settings = MeshSettings::bar(&mesh);
        settings.output_phases = vec![0.1, 0.2, 0.3, 0.4];
        let u = transfer(&mesh, &settings, &[]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j {
                    Complex64::from_polar(1.0, 0.1 * (i + 1) as f64)
                } else {
                    c(0.0, 0.0)
                };
                assert!((u[(i, j)] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_cross_in_two_modes() {
        let mesh = Mesh::rectangular(2).unwrap();
        let mut settings = MeshSettings::bar(&mesh);
        settings.set(Crossing::new(1, 1), MziSetting::CROSS);
        let u = transfer(&mesh, &settings, &[]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(max_abs_diff(&u, &expected) < 1e-15);
    }

    #[test]
    fn loss_on_a_bar_path_scales_one_entry() {
        // Hand product for two modes: bar crossing, loss 0.5 on mode 2 after the crossing.
        let mesh = Mesh::rectangular(2).unwrap();
        let settings = MeshSettings::bar(&mesh);
        let d = DefectSpec::SegmentLoss {
            segment: Segment::new(2, 1),
            eta: 0.5,
        };
        let u = transfer(&mesh, &settings, &[d]).unwrap();
        assert!((u[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((u[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn probing_the_last_slot_gives_the_transfer_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mesh = Mesh::rectangular(6).unwrap();
        let settings = decompose(&haar_unitary(6, &mut rng), mesh.layout()).unwrap();
        let history = field_history(&mesh, &settings, &[]).unwrap();
        let u = transfer(&mesh, &settings, &[]).unwrap();
        assert!(max_abs_diff(history.last().unwrap(), &u) < 1e-15);
        for p in 1..=6 {
            for m in 1..=6 {
                let a = amplitude_at(&mesh, &settings, p, Segment::new(m, 6)).unwrap();
                assert!((a - u[(m - 1, p - 1)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn all_bar_probe_stays_on_the_mode() {
        let mesh = Mesh::rectangular(5).unwrap();
        let settings = MeshSettings::bar(&mesh);
        for s in 0..=5 {
            assert!((amplitude_at(&mesh, &settings, 3, Segment::new(3, s)).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn discarded_input_reaches_the_defect() {
        let mesh = Mesh::rectangular(8).unwrap();
        let defect = Segment::new(5, 4);
        let plan = plan_single(&mesh, defect).unwrap();
        let eff = effective_layout(&mesh, &plan).unwrap();
        let target = MeshSettings::bar(&eff.mesh);
        let settings = embed_target(&mesh, &plan, &target).unwrap();
        let a = amplitude_at(&mesh, &settings, plan.discarded_inputs[0], defect).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ten_mode_plan_with_identity_target_passes() {
        let mesh = Mesh::rectangular(10).unwrap();
        let d = DefectSpec::SegmentLoss {
            segment: Segment::new(8, 6),
            eta: DefectSpec::eta_from_db(10.0),
        };
        let plan = plan_defects(&mesh, &[d]).unwrap();
        let report = verify_plan(&mesh, &plan, &[d], &Target::Matrix(TransferMatrix::identity(9, 9))).unwrap();
        assert!(report.pass, "{report:?}");
    }

    fn touches_path(plan: &RoutingPlan, x: Crossing) -> bool {
        x.input_segments()
            .iter()
            .filter(|s| plan.isolated_segments.contains(s))
            .count()
            == 1
    }

    #[test]
    fn flipped_bar_crossing_leaks() {
        let mesh = Mesh::rectangular(8).unwrap();
        let (d, plan) = mesh
            .segments()
            .map(|segment| DefectSpec::SegmentLoss { segment, eta: 0.0 })
            .map(|d| (d, plan_defects(&mesh, &[d]).unwrap()))
            .find(|(_, p)| p.fixed_bar.iter().any(|x| touches_path(p, *x)))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = haar_unitary(7, &mut rng);
        let mut settings = embed_unitary(&mesh, &plan, &u).unwrap();
        let bar = *plan.fixed_bar.iter().find(|x| touches_path(&plan, **x)).unwrap();
        settings.set(bar, MziSetting::CROSS);
        let report = verify_settings(&mesh, &plan, &[d], &settings, Some(&u)).unwrap();
        assert!(report.zero_light > ZERO_LIGHT_TOLERANCE);
        assert!(!report.pass);
    }

    #[test]
    fn dont_care_flips_are_swept() {
        let mesh = Mesh::rectangular(8).unwrap();
        let defects: Vec<DefectSpec> = Crossing::new(4, 4)
            .input_segments()
            .iter()
            .map(|&segment| DefectSpec::SegmentLoss { segment, eta: 0.2 })
            .collect();
        let mut plan = plan_defects(&mesh, &defects).unwrap();
        let idle: Vec<Crossing> = isolated_crossings(&mesh, &plan).collect();
        assert!(!idle.is_empty());
        for x in &idle {
            plan.fixed_bar.remove(x);
            plan.fixed_cross.remove(x);
            plan.dont_care.insert(*x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = haar_unitary(plan.layout.modes - plan.removed_modes(), &mut rng);
        let settings = embed_unitary(&mesh, &plan, &u).unwrap();
        let report = verify_settings(&mesh, &plan, &defects, &settings, Some(&u)).unwrap();
        assert!(report.pass, "{:?}", report.messages);

        let leaky = *plan.fixed_cross.iter().find(|x| touches_path(&plan, **x)).unwrap();
        plan.fixed_cross.remove(&leaky);
        plan.dont_care.insert(leaky);
        let rejected = embed_unitary(&mesh, &plan, &u)
            .and_then(|s| verify_settings(&mesh, &plan, &defects, &s, Some(&u)))
            .map_or(true, |r| !r.pass);
        assert!(rejected);
    }

    #[test]
    fn lossy_defect_keeps_the_effective_matrix_unitary() {
        let mesh = Mesh::rectangular(12).unwrap();
        let d = DefectSpec::StuckCrossing {
            crossing: Crossing::new(5, 5),
            theta: 0.7,
            phi: 2.0,
        };
        let loss = DefectSpec::SegmentLoss {
            segment: Segment::new(5, 4),
            eta: 0.1,
        };
        let plan = plan_defects(&mesh, &[d]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let settings = embed_unitary(&mesh, &plan, &haar_unitary(10, &mut rng)).unwrap();
        let m = effective_matrix(&mesh, &settings, &plan, &[d, loss]).unwrap();
        assert!(unitarity_deviation(&m) < 1e-10);
    }
}
