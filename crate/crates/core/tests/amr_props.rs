use proptest::prelude::*;

use amrlab_core::amr::{build_amr, generate_field, read_container, write_container, AmrDataset, FieldKind};

fn kind() -> impl Strategy<Value = FieldKind> {
    prop_oneof![Just(FieldKind::Smooth), Just(FieldKind::Irregular)]
}

fn dataset(kind: FieldKind, n: usize, seed: u64, theta: f64) -> AmrDataset {
    build_amr(&generate_field(kind, [n; 3], seed).unwrap(), theta, 8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn container_roundtrip_is_bit_exact(k in kind(), seed in any::<u64>(), theta in -1.0f64..60.0) {
        let ds = dataset(k, 32, seed, theta);
        let dir = tempfile::tempdir().unwrap();
        write_container(&ds, dir.path()).unwrap();
        prop_assert!(read_container(dir.path()).unwrap().bit_eq(&ds));
    }

    #[test]
    fn full_refinement_reproduces_fine_field(k in kind(), seed in any::<u64>(), n in prop_oneof![Just(16usize), Just(32)]) {
        let f = generate_field(k, [n; 3], seed).unwrap();
        let ds = build_amr(&f, -1.0, 8).unwrap();
        prop_assert!(ds.uniformize().unwrap().bit_eq(&f));
        prop_assert_eq!(ds.coverage(1), 1.0);
    }

    #[test]
    fn redundant_cells_are_covered_by_the_next_level(k in kind(), seed in any::<u64>(), theta in 0.0f64..60.0) {
        let ds = dataset(k, 32, seed, theta);
        prop_assert!(ds.validate().is_empty());
        let mask = ds.redundant_mask(0).unwrap();
        let [nx, ny, nz] = ds.coarse_dims;
        for kz in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    // Independent check: some fine patch holds the first child cell.
                    let child = [2 * i as i64, 2 * j as i64, 2 * kz as i64];
                    let covered = ds.levels[1].patches.iter().any(|p| p.bounds.contains(child));
                    prop_assert_eq!(mask.get(i, j, kz), covered);
                }
            }
        }
    }
}

#[test]
fn threshold_extremes_give_empty_and_full_fine_levels() {
    for k in [FieldKind::Smooth, FieldKind::Irregular] {
        let none = dataset(k, 32, 3, f64::INFINITY);
        assert_eq!(none.coverage(1), 0.0);
        assert_eq!(none.level_densities(), vec![1.0, 0.0]);
        let all = dataset(k, 32, 3, -1.0);
        assert_eq!(all.level_densities(), vec![0.0, 1.0]);
        assert!(all.redundant_mask(0).unwrap().all());
    }
}

#[test]
fn default_thresholds_give_expected_coverage() {
    // Picked by sweep to approximate 40% and 60% fine coverage at 64³.
    let smooth = dataset(FieldKind::Smooth, 64, 42, 3.5);
    assert!((smooth.coverage(1) - 0.375).abs() < 1e-12);
    let irregular = dataset(FieldKind::Irregular, 64, 42, 38.0);
    assert!((irregular.coverage(1) - 0.578125).abs() < 1e-12);
}
