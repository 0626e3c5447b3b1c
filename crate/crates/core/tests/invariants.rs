use detour::decompose::{max_abs_diff, unitarity_deviation};
use detour::haar::haar_unitary;
use detour::yield_analysis::p_at_most;
use detour::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn layout() -> impl Strategy<Value = MeshLayout> {
    prop_oneof![
        (1usize..=12).prop_map(MeshLayout::rectangular),
        (2usize..=12).prop_flat_map(|n| (Just(n), 1usize..n).prop_map(|(n, d)| MeshLayout::shallow(n, d))),
    ]
    .prop_flat_map(|l| prop_oneof![Just(l), Just(l.with_parity(ColumnParity::Shifted))])
}

fn random_settings(mesh: &Mesh, seed: u64) -> MeshSettings {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut settings = MeshSettings::bar(mesh);
    for &x in mesh.crossings() {
        settings.set(
            x,
            MziSetting::new(rng.random_range(0.0..1.6), rng.random_range(0.0..6.3)),
        );
    }
    settings.output_phases = (0..mesh.modes()).map(|_| rng.random_range(0.0..6.3)).collect();
    settings
}

fn column_powers(u: &TransferMatrix) -> Vec<f64> {
    u.column_iter().map(|c| c.norm_squared()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_roundtrip(n in 2usize..=32, seed in any::<u64>()) {
        let u = haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let layout = MeshLayout::rectangular(n);
        let settings = decompose(&u, layout).unwrap();
        let back = reconstruct(&Mesh::new(layout).unwrap(), &settings, &[]).unwrap();
        prop_assert!(max_abs_diff(&u, &back) < 1e-9);
    }

    #[test]
    fn lossless_meshes_are_unitary(layout in layout(), seed in any::<u64>()) {
        let mesh = Mesh::new(layout).unwrap();
        let t = transfer(&mesh, &random_settings(&mesh, seed), &[]).unwrap();
        prop_assert!(unitarity_deviation(&t) < 1e-10);
        for p in column_powers(&t) {
            prop_assert!((p - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn more_loss_never_adds_power(
        n in 2usize..=10,
        seed in any::<u64>(),
        pick in any::<prop::sample::Index>(),
        eta in 0.0f64..=1.0,
        extra in 0.0f64..=1.0,
    ) {
        let mesh = Mesh::rectangular(n).unwrap();
        let segments: Vec<Segment> = mesh.segments().collect();
        let segment = segments[pick.index(segments.len())];
        let settings = random_settings(&mesh, seed);
        let lossy = |eta: f64| transfer(&mesh, &settings, &[DefectSpec::SegmentLoss { segment, eta }]).unwrap();
        let weaker = column_powers(&lossy(eta));
        let stronger = column_powers(&lossy(eta * extra));
        for (w, s) in weaker.iter().zip(&stronger) {
            prop_assert!(*s <= *w + 1e-12);
            prop_assert!(*w <= 1.0 + 1e-12);
        }
        let singular = lossy(eta * extra).singular_values();
        prop_assert!(singular.iter().all(|&s| s <= 1.0 + 1e-10));
    }

    #[test]
    fn tolerating_more_defects_never_hurts(
        components in 1u64..5000,
        m in 0u64..20,
        epsilon in 1e-6f64..0.5,
    ) {
        let p = p_at_most(components, m, epsilon).unwrap();
        let q = p_at_most(components, m + 1, epsilon).unwrap();
        let worse = p_at_most(components, m, (epsilon * 1.5).min(1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(q >= p - 1e-12);
        prop_assert!(worse <= p + 1e-12);
    }

    #[test]
    fn single_defects_leave_no_light_behind(n in 3usize..=10, pick in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let mesh = Mesh::rectangular(n).unwrap();
        let segments: Vec<Segment> = mesh.segments().collect();
        let d = DefectSpec::SegmentLoss { segment: segments[pick.index(segments.len())], eta: 0.0 };
        let plan = plan_defects(&mesh, &[d]).unwrap();
        let u = haar_unitary(n - 1, &mut ChaCha8Rng::seed_from_u64(seed));
        let report = verify_plan(&mesh, &plan, &[d], &Target::Matrix(u)).unwrap();
        prop_assert!(report.pass, "{:?}", report.messages);
    }

    #[test]
    fn documents_roundtrip(layout in layout(), seed in any::<u64>()) {
        let mesh = Mesh::new(layout).unwrap();
        let doc = MeshDocument::with_settings(layout, random_settings(&mesh, seed));
        prop_assert_eq!(MeshDocument::parse(&doc.to_json().unwrap()).unwrap(), doc);
    }
}
