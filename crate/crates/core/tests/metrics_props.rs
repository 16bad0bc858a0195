use num_complex::Complex64;
use proptest::prelude::*;
use unbalance_core::metrics::{cigre_factor, line_voltages, vuf, IndexSet, Metric, NOISE_FLOOR_PERCENT};
use unbalance_core::PhasorTriple;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 10_000,
        ..ProptestConfig::default()
    }
}

/// Magnitudes 0.5–1.5 and angles within ±30° of nominal.
fn triple() -> impl Strategy<Value = PhasorTriple> {
    ([0.5f64..1.5, 0.5f64..1.5, 0.5f64..1.5], [-30.0f64..30.0, -30.0f64..30.0, -30.0f64..30.0]).prop_map(
        |(m, d)| PhasorTriple::from_polar(m, [d[0], -120.0 + d[1], 120.0 + d[2]]).unwrap(),
    )
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) + NOISE_FLOOR_PERCENT
}

fn assert_all_same(x: &IndexSet, y: &IndexSet) -> Result<(), TestCaseError> {
    for m in Metric::ALL {
        prop_assert!(same(x.value(m), y.value(m)), "{m}: {} vs {}", x.value(m), y.value(m));
    }
    Ok(())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn rotation_leaves_indices_unchanged(t in triple(), theta in -180.0f64..180.0) {
        let r = Complex64::from_polar(1.0, theta.to_radians());
        let rotated = t.map_complex(|z| z * r).unwrap();
        assert_all_same(&IndexSet::compute(&t).unwrap(), &IndexSet::compute(&rotated).unwrap())?;
    }

    #[test]
    fn scaling_leaves_indices_unchanged(t in triple(), k in 1e-3f64..1e3) {
        let scaled = t.map_complex(|z| z * k).unwrap();
        assert_all_same(&IndexSet::compute(&t).unwrap(), &IndexSet::compute(&scaled).unwrap())?;
    }

    #[test]
    fn common_offset_is_invisible_to_line_voltages(t in triple(), re in -0.3f64..0.3, im in -0.3f64..0.3) {
        let o = Complex64::new(re, im);
        let shifted = t.map_complex(|z| z + o).unwrap();
        let (a, b) = (line_voltages(&t).unwrap(), line_voltages(&shifted).unwrap());
        for (x, y) in a.as_array().into_iter().zip(b.as_array()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0), "{x} vs {y}");
        }
        let (sa, sb) = (IndexSet::compute(&t).unwrap(), IndexSet::compute(&shifted).unwrap());
        prop_assert!(same(sa.lvur.value, sb.lvur.value));
        prop_assert!(same(sa.cigre.value, sb.cigre.value));
        prop_assert!(same(sa.vuf.value, sb.vuf.value));
    }

    /// With dyadic coordinates the offset addition is exact, so the line
    /// magnitudes must match to the bit.
    #[test]
    fn exact_offset_gives_bit_identical_line_indices(
        parts in proptest::collection::vec(-4096i32..4096, 6),
        re in -512i32..512,
        im in -512i32..512,
    ) {
        let q = |n: i32| n as f64 / 4096.0;
        let v = [
            Complex64::new(q(parts[0]), q(parts[1])),
            Complex64::new(q(parts[2]), q(parts[3])),
            Complex64::new(q(parts[4]), q(parts[5])),
        ];
        let o = Complex64::new(q(re), q(im));
        let Ok(t) = PhasorTriple::from_complex(v) else { return Ok(()) };
        let Ok(a) = line_voltages(&t) else { return Ok(()) };
        let b = line_voltages(&t.map_complex(|z| z + o).unwrap()).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(cigre_factor(&a).map(|d| d.value), cigre_factor(&b).map(|d| d.value));
    }

    #[test]
    fn offset_can_move_phase_ratios(t in triple()) {
        // Phase-magnitude indices see the offset even though line indices do not.
        let shifted = t.map_complex(|z| z + Complex64::new(0.2, 0.0)).unwrap();
        let (a, b) = (IndexSet::compute(&t).unwrap(), IndexSet::compute(&shifted).unwrap());
        let moved = (a.pvur1.value - b.pvur1.value).abs() > 1e-9 || (a.pvur2.value - b.pvur2.value).abs() > 1e-9;
        prop_assert!(moved);
    }

    #[test]
    fn cigre_equals_vuf(t in triple()) {
        let v = vuf(&t).unwrap().value;
        let c = cigre_factor(&line_voltages(&t).unwrap()).unwrap().value;
        prop_assert!(same(v, c), "{v} vs {c}");
    }

    #[test]
    fn pvur2_dominates_pvur1(t in triple()) {
        let s = IndexSet::compute(&t).unwrap();
        prop_assert!(s.pvur2.value >= s.pvur1.value);
    }

    #[test]
    fn details_recompute(t in triple()) {
        let s = IndexSet::compute(&t).unwrap();
        for m in Metric::ALL {
            let d = s.get(m);
            prop_assert!((d.recompute().unwrap() - d.value).abs() <= 1e-12 * d.value.max(1.0), "{m}");
        }
    }

    #[test]
    fn balanced_triples_are_exactly_zero(m in 1e-3f64..1e3, theta in -180.0f64..180.0) {
        let t = PhasorTriple::from_polar([m; 3], [theta, theta - 120.0, theta + 120.0]).unwrap();
        let s = IndexSet::compute(&t).unwrap();
        for metric in Metric::ALL {
            prop_assert_eq!(s.value(metric), 0.0, "{}", metric);
        }
    }
}
