use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unbalance_core::bounds::{band_report, sweep_ratio_bounds, BoundsQuery, BoundsResult, EnvelopeBox, VufBand};
use unbalance_core::metrics::{vuf, IndexSet, Metric};
use unbalance_core::PhasorTriple;

fn query(index: Metric, lo: f64, hi: f64, resolution: usize) -> BoundsQuery {
    BoundsQuery {
        index,
        band: VufBand::new(lo, hi).unwrap(),
        envelope: EnvelopeBox::default(),
        resolution,
        refine: true,
    }
}

fn results(lo: f64, hi: f64, resolution: usize) -> Vec<BoundsResult> {
    band_report(&[VufBand::new(lo, hi).unwrap()], EnvelopeBox::default(), resolution, true)
        .unwrap()
        .into_iter()
        .map(|c| c.result.unwrap())
        .collect()
}

/// Uniform random triples inside the default box, phase a at 0°.
fn random_triple(rng: &mut ChaCha8Rng) -> PhasorTriple {
    let env = EnvelopeBox::default();
    let mut mag = || rng.gen_range(env.mag_lo..=env.mag_hi);
    let m = [mag(), mag(), mag()];
    let b = rng.gen_range(-env.angle_dev..=env.angle_dev);
    let c = rng.gen_range(-env.angle_dev..=env.angle_dev);
    PhasorTriple::from_polar(m, [0.0, -120.0 + b, 120.0 + c]).unwrap()
}

#[test]
fn random_samples_stay_inside_the_bounds() {
    let bands = [(1.0, 2.0), (2.0, 3.0)];
    let found: Vec<Vec<BoundsResult>> = bands.iter().map(|(lo, hi)| results(*lo, *hi, 13)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut extremes = vec![[(f64::INFINITY, f64::NEG_INFINITY); 4]; bands.len()];
    let mut hits = [0usize; 2];
    for _ in 0..1_000_000 {
        let t = random_triple(&mut rng);
        let v = vuf(&t).unwrap().value;
        let Some(k) = bands.iter().position(|(lo, hi)| *lo <= v && v <= *hi) else {
            continue;
        };
        hits[k] += 1;
        let set = IndexSet::compute(&t).unwrap();
        for (slot, m) in extremes[k].iter_mut().zip(Metric::RELATIVE) {
            let r = set.value(m) / v;
            slot.0 = slot.0.min(r);
            slot.1 = slot.1.max(r);
        }
    }
    for (k, band) in found.iter().enumerate() {
        assert!(hits[k] > 1000, "band {k}: {} samples", hits[k]);
        for (r, (lo, hi)) in band.iter().zip(extremes[k]) {
            assert!(r.lower <= lo + 1e-9, "{} band {k}: lower {} > sample {lo}", r.index, r.lower);
            assert!(r.upper >= hi - 1e-9, "{} band {k}: upper {} < sample {hi}", r.index, r.upper);
        }
    }
}

#[test]
fn refined_results_agree_across_resolutions() {
    let coarse = results(1.0, 2.0, 9);
    let fine = results(1.0, 2.0, 13);
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(f.lower >= c.lower - 1e-3, "{}: {} vs {}", c.index, f.lower, c.lower);
        assert!(f.upper <= c.upper + 1e-3, "{}: {} vs {}", c.index, f.upper, c.upper);
    }
}

#[test]
fn pvur1_upper_halves_from_first_to_second_band() {
    let a = sweep_ratio_bounds(&query(Metric::Pvur1, 1.0, 2.0, 13)).unwrap();
    let b = sweep_ratio_bounds(&query(Metric::Pvur1, 2.0, 3.0, 13)).unwrap();
    let ratio = a.upper / b.upper;
    assert!((1.9..=2.1).contains(&ratio), "{ratio}");
}

#[test]
fn phase_ratios_reach_zero() {
    for (lo, hi) in [(1.0, 2.0), (2.0, 3.0)] {
        for m in [Metric::Pvur1, Metric::Pvur2] {
            let r = sweep_ratio_bounds(&query(m, lo, hi, 9)).unwrap();
            assert!(r.lower <= 1e-6, "{m} [{lo}, {hi}]: {}", r.lower);
        }
    }
}

#[test]
fn cigre_ratio_is_one_in_both_bands() {
    for (lo, hi) in [(1.0, 2.0), (2.0, 3.0)] {
        let r = sweep_ratio_bounds(&query(Metric::Cigre, lo, hi, 9)).unwrap();
        assert!((r.lower - 1.0).abs() < 1e-9 && (r.upper - 1.0).abs() < 1e-9);
    }
}

#[test]
fn arguments_reproduce_reported_ratios() {
    for r in results(2.0, 3.0, 9) {
        for (t, want) in [(&r.arg_lower, r.lower), (&r.arg_upper, r.upper)] {
            let set = IndexSet::compute(t).unwrap();
            let v = set.vuf.value;
            assert!(r.band.contains(v));
            assert!((set.value(r.index) / v - want).abs() < 1e-12, "{}", r.index);
        }
    }
}

#[test]
fn sweeps_are_deterministic() {
    let a = results(1.0, 2.0, 7);
    let b = results(1.0, 2.0, 7);
    assert_eq!(a, b);
}

#[test]
fn overlapping_bands_are_rejected() {
    let bands = [VufBand::new(1.0, 2.0).unwrap(), VufBand::new(1.5, 3.0).unwrap()];
    assert!(band_report(&bands, EnvelopeBox::default(), 5, false).is_err());
}
