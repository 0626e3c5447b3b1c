//! Acceptance criteria, one line per criterion.
//!
//! Run with `cargo test -p detour --test acceptance`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::process::ExitCode;
use std::time::Instant;

use detour::circumvent::{embed_unitary, plan_counts, plan_defects, plan_single};
use detour::decompose::{decompose, max_abs_diff, reconstruct};
use detour::haar::haar_unitary;
use detour::simulate::{effective_matrix, verify_plan, verify_settings, Target};
use detour::yield_analysis::{
    gain_crossing, max_modes_overhead, max_modes_plain, monte_carlo_yield, p_at_most, tolerance_curve, CountModel,
};
use detour::{Crossing, DefectSpec, Mesh, MeshLayout, MeshSettings, MziSetting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn roundtrip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in [2, 4, 8, 16, 32] {
        for _ in 0..50 {
            let u = haar_unitary(n, &mut rng);
            let mesh = Mesh::rectangular(n).map_err(|e| e.to_string())?;
            let settings = decompose(&u, mesh.layout()).map_err(|e| e.to_string())?;
            let back = reconstruct(&mesh, &settings, &[]).map_err(|e| e.to_string())?;
            worst = worst.max(max_abs_diff(&back, &u));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("250 unitaries, max error {worst:.2e}, {secs:.1} s");
    if worst < 1e-10 && secs < 60.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exhaustive_zero_light() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases = 0;
    let (mut light, mut error): (f64, f64) = (0.0, 0.0);
    for n in 4..=10 {
        let mesh = Mesh::rectangular(n).map_err(|e| e.to_string())?;
        for segment in mesh.segments() {
            let defect = DefectSpec::SegmentLoss { segment, eta: 0.5 };
            let plan = plan_defects(&mesh, &[defect]).map_err(|e| format!("{segment}: {e}"))?;
            let u = haar_unitary(n - 1, &mut rng);
            let report = verify_plan(&mesh, &plan, &[defect], &Target::Matrix(u)).map_err(|e| e.to_string())?;
            light = light.max(report.zero_light);
            error = error.max(report.target_error.unwrap_or(f64::INFINITY));
            if !report.pass {
                return Err(format!("n = {n}, defect {segment}: {:?}", report.messages));
            }
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} defect positions, max leak {light:.2e}, max target error {error:.2e}"
    ))
}

/// A defective crossing in the middle of the twelve-mode mesh.
const MIDDLE_CROSSING: Crossing = Crossing::new(6, 6);

fn defective_crossing() -> Outcome {
    let mesh = Mesh::rectangular(12).map_err(|e| e.to_string())?;
    let defect = DefectSpec::StuckCrossing {
        crossing: MIDDLE_CROSSING,
        theta: 0.4,
        phi: 1.3,
    };
    let plan = plan_defects(&mesh, &[defect]).map_err(|e| e.to_string())?;
    let eff = detour::effective_layout(&mesh, &plan).map_err(|e| e.to_string())?;
    if eff.layout().modes != 10 || eff.layout().depth != 10 {
        return Err(format!("effective layout {}", eff.layout()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = haar_unitary(10, &mut rng);
        let report = verify_plan(&mesh, &plan, &[defect], &Target::Matrix(u)).map_err(|e| e.to_string())?;
        worst = worst.max(report.target_error.unwrap_or(f64::INFINITY));
        if !report.pass {
            return Err(format!("{:?}", report.messages));
        }
    }
    Ok(format!("effective {}, 20 targets, max error {worst:.2e}", eff.layout()))
}

fn shallow() -> Outcome {
    let mesh = Mesh::new(MeshLayout::shallow(14, 4)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut light: f64 = 0.0;
    for segment in mesh.segments() {
        let defect = DefectSpec::SegmentLoss { segment, eta: 0.0 };
        let plan = plan_defects(&mesh, &[defect]).map_err(|e| format!("{segment}: {e}"))?;
        let eff = detour::effective_layout(&mesh, &plan).map_err(|e| format!("{segment}: {e}"))?;
        if (eff.layout().modes, eff.layout().depth) != (13, 3) {
            return Err(format!("{segment}: effective layout {}", eff.layout()));
        }
        let mut target = MeshSettings::bar(&eff.mesh);
        for &x in eff.mesh.crossings() {
            target.set(
                x,
                MziSetting::new(rng.random_range(0.0..FRAC_PI_2), rng.random_range(0.0..TAU)),
            );
        }
        let report = verify_plan(&mesh, &plan, &[defect], &Target::Settings(target)).map_err(|e| e.to_string())?;
        light = light.max(report.zero_light);
        if !report.pass {
            return Err(format!("{segment}: {:?}", report.messages));
        }
    }
    Ok(format!(
        "all {} segments -> (13, 3), max leak {light:.2e}",
        mesh.segment_count()
    ))
}

fn counting() -> Outcome {
    let mut plans = 0;
    for n in 2..=16usize {
        let mesh = Mesh::rectangular(n).map_err(|e| e.to_string())?;
        let tunable = (n - 1) * (n - 2) / 2;
        let free = tunable + (n - 2);
        for segment in mesh.segments() {
            let plan = plan_single(&mesh, segment).map_err(|e| e.to_string())?;
            let counts = plan_counts(&mesh, &plan);
            if counts.tunable_crossings != tunable || counts.free_phase_shifters != free {
                return Err(format!("n = {n}, {segment}: {counts:?}"));
            }
            plans += 1;
        }
    }
    Ok(format!("{plans} single-segment plans for n = 2..16"))
}

fn independence() -> Outcome {
    let mesh = Mesh::rectangular(12).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut flipped = 0;
    // The named instance plus every other crossing position.
    let mut crossings = vec![MIDDLE_CROSSING];
    crossings.extend(mesh.crossings().iter().copied().filter(|&x| x != MIDDLE_CROSSING));
    for crossing in crossings {
        let defect = DefectSpec::StuckCrossing {
            crossing,
            theta: 0.0,
            phi: 0.0,
        };
        let plan = plan_defects(&mesh, &[defect]).map_err(|e| format!("{crossing}: {e}"))?;
        let u = haar_unitary(10, &mut rng);
        let settings = embed_unitary(&mesh, &plan, &u).map_err(|e| e.to_string())?;
        let report = verify_settings(&mesh, &plan, &[defect], &settings, Some(&u)).map_err(|e| e.to_string())?;
        worst = worst.max(report.independence_error);
        flipped += plan.dont_care.len();
        if !report.independence_ok {
            return Err(format!("{crossing}: {:.2e}", report.independence_error));
        }
        for eta in [1.0, 0.5, 0.316, 0.1] {
            let lossy: Vec<DefectSpec> = crossing
                .input_segments()
                .into_iter()
                .map(|segment| DefectSpec::SegmentLoss { segment, eta })
                .chain([defect])
                .collect();
            let m = effective_matrix(&mesh, &settings, &plan, &lossy).map_err(|e| e.to_string())?;
            worst = worst.max(max_abs_diff(&m, &u));
        }
    }
    if worst < 1e-10 {
        Ok(format!(
            "66 crossing positions, {flipped} don't-care crossings, max change {worst:.2e}"
        ))
    } else {
        Err(format!("max change {worst:.2e}"))
    }
}

fn yield_analytics() -> Outcome {
    let model = CountModel::Approximate;
    let plain = max_modes_plain(1e-3, model).map_err(|e| e.to_string())?;
    if plain != 26 {
        return Err(format!("max_modes_plain(1e-3) = {plain}"));
    }
    // Every outcome of four fair components is equally likely.
    let brute = (0u32..16).filter(|m| m.count_ones() <= 1).count() as f64 / 16.0;
    let p = p_at_most(4, 1, 0.5).map_err(|e| e.to_string())?;
    if p != 0.3125 || brute != 0.3125 {
        return Err(format!("p_at_most(4, 1, 0.5) = {p}, enumeration {brute}"));
    }
    let grid: Vec<f64> = (0..=40).map(|k| 10f64.powf(-6.0 + 0.1 * k as f64)).collect();
    let curves = (0..=8)
        .map(|i| tolerance_curve(i as f64 / 10.0, &grid, model))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    for (i, pair) in curves.windows(2).enumerate() {
        if pair[0].iter().zip(&pair[1]).any(|(a, b)| b.max_n < a.max_n) {
            return Err(format!(
                "curve r = {} not above r = {}",
                (i + 1) as f64 / 10.0,
                i as f64 / 10.0
            ));
        }
    }
    let at_half = max_modes_overhead(1e-3, 0.5, model).map_err(|e| e.to_string())?;
    let Some((n, gain)) = gain_crossing(0.8, 10.0, 10..=200, model).map_err(|e| e.to_string())? else {
        return Err("no tenfold threshold gain for n in [10, 200]".into());
    };
    Ok(format!(
        "max_n(1e-3) = 26, r = 0.5 gives {at_half}, p_at_most(4,1,0.5) = 0.3125, tenfold gain first at n = {n} ({gain:.1}x)"
    ))
}

fn monte_carlo() -> Outcome {
    let grid: [(u64, u64, f64); 12] = [
        (4, 1, 0.5),
        (100, 1, 0.01),
        (625, 0, 0.001),
        (50, 5, 0.1),
        (200, 3, 0.02),
        (1000, 2, 0.002),
        (10, 3, 0.3),
        (20, 10, 0.5),
        (900, 12, 0.01),
        (2500, 30, 0.01),
        (30, 5, 0.2),
        (400, 8, 0.025),
    ];
    let mut worst: f64 = 0.0;
    for (i, &(n, m, eps)) in grid.iter().enumerate() {
        let exact = p_at_most(n, m, eps).map_err(|e| e.to_string())?;
        let est = monte_carlo_yield(n, m, eps, 100_000, 100 + i as u64).map_err(|e| e.to_string())?;
        let sigma = (exact * (1.0 - exact) / 1e5).sqrt();
        let z = (est.estimate - exact).abs() / sigma;
        worst = worst.max(z);
        if z > 3.0 {
            return Err(format!(
                "N={n} m={m} eps={eps}: {} vs {exact} ({z:.2} sigma)",
                est.estimate
            ));
        }
    }
    let a = monte_carlo_yield(900, 12, 0.01, 100_000, 9).map_err(|e| e.to_string())?;
    let b = monte_carlo_yield(900, 12, 0.01, 100_000, 9).map_err(|e| e.to_string())?;
    if a != b {
        return Err("same seed gave different estimates".into());
    }
    Ok(format!("12 grid points within {worst:.2} sigma, seeded runs identical"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 decomposition roundtrip", roundtrip),
        ("2 exhaustive zero-light sweep", exhaustive_zero_light),
        ("3 defective crossing, 12 -> 10 modes", defective_crossing),
        ("4 shallow (14,4) -> (13,3)", shallow),
        ("5 counting identities", counting),
        ("6 defect-parameter independence", independence),
        ("7 yield analytics", yield_analytics),
        ("8 Monte Carlo agreement", monte_carlo),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
