use std::collections::HashMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use unbalance_core::feeder::{FeederModel, FeederParts, LineCode, LineSegment, LoadPoint, Phase, SourceSpec};
use unbalance_core::metrics::absolute_error;
use unbalance_core::powerflow::{model_injections, solve_snapshot, Solution, SolveOptions};
use unbalance_core::scenario::{
    apply_pv, build_scenario, compare_before_after, evaluate, phase_totals, read_json, representative_buses,
    run_model, run_scenario, AllocationPolicy, BusSelection, PvPlacement, PvSpec, ScenarioSpec, SummaryStats,
};
use unbalance_core::{load_feeder, BusId, Leg, Metric, ScenarioError};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn ieee() -> FeederModel {
    load_feeder(&data("ieee_european_lv")).unwrap()
}

fn shipped(i: usize) -> (ScenarioSpec, PvSpec) {
    (
        read_json(&data(&format!("scenarios/scenario_{i}.json"))).unwrap(),
        read_json(&data(&format!("scenarios/pv_scenario_{i}.json"))).unwrap(),
    )
}

fn spec(total: f64, shares: [f64; 3]) -> ScenarioSpec {
    ScenarioSpec {
        name: "test".into(),
        total_kw: total,
        phase_shares: shares,
        power_factor: 0.95,
        allocation_policy: AllocationPolicy::LargestRemainder,
    }
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn near_uniform_shares_split_within_one_load() {
    let m = build_scenario(&ieee(), &spec(169.0, [33.3, 33.3, 33.4])).unwrap();
    let (kw, _) = phase_totals(&m);
    let one_load = 169.0 / 55.0;
    for k in kw {
        assert!((k - 169.0 / 3.0).abs() <= one_load + 1e-9, "{kw:?}");
    }
}

#[test]
fn scenario_one_shares_are_close_to_target() {
    let (s, _) = shipped(1);
    let m = build_scenario(&ieee(), &s).unwrap();
    let (kw, shares) = phase_totals(&m);
    for (got, want) in shares.iter().zip(s.phase_shares) {
        assert!((got - want).abs() <= 2.0, "{shares:?}");
    }
    let total: f64 = kw.iter().sum();
    assert!((total - 169.0).abs() <= 0.169);
    assert_eq!(m.load_buses(), ieee().load_buses());
}

#[test]
fn zero_total_is_infeasible() {
    let err = build_scenario(&ieee(), &spec(0.0, [33.3, 33.3, 33.4])).unwrap_err();
    assert!(matches!(err, ScenarioError::SharesInfeasible(_)));
}

#[test]
fn building_is_deterministic() {
    let (s, _) = shipped(3);
    let a = build_scenario(&ieee(), &s).unwrap();
    let b = build_scenario(&ieee(), &s).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json(), b.to_json());
}

/// Distances recomputed from the raw segment list, without the model's
/// topology.
fn distances(m: &FeederModel) -> HashMap<BusId, f64> {
    let mut out = HashMap::from([(m.source().bus.clone(), 0.0)]);
    let mut pending: Vec<&LineSegment> = m.segments().iter().collect();
    while !pending.is_empty() {
        pending.retain(|s| {
            match (out.get(&s.from_bus).copied(), out.get(&s.to_bus).copied()) {
                (Some(d), None) => {
                    out.insert(s.to_bus.clone(), d + s.length_m);
                    false
                }
                (None, Some(d)) => {
                    out.insert(s.from_bus.clone(), d + s.length_m);
                    false
                }
                _ => true,
            }
        });
    }
    out
}

#[test]
fn ieee_representative_buses_are_distinct_and_ordered() {
    let m = ieee();
    let r = representative_buses(&m);
    assert!(!r.degenerate);
    assert_eq!(r.buses.len(), 9);
    let d = distances(&m);
    let ds: Vec<f64> = r.buses.iter().map(|b| d[b]).collect();
    assert!(ds.windows(2).all(|w| w[0] < w[1]), "{ds:?}");
    let ids: Vec<&str> = r.buses.iter().map(|b| b.as_str()).collect();
    assert_eq!(ids, ["1", "42", "177", "186", "496", "691", "697", "770", "881"]);
}

#[test]
fn reports_are_consistent() {
    let (s, _) = shipped(3);
    let run = run_scenario(&ieee(), &s, None, BusSelection::Representative, &opts()).unwrap();
    assert_eq!(run.report.buses.len(), 9);
    for (_, set, err) in run.report.evaluated() {
        let vuf = set.vuf.value;
        assert!((set.cigre.value - vuf).abs() <= 1e-9 * vuf.max(1.0));
        for m in Metric::RELATIVE {
            let e = err.get(m).unwrap();
            assert!(e >= 0.0);
            assert_eq!(e, absolute_error(set.value(m), vuf));
        }
        for m in Metric::ALL {
            let d = set.get(m);
            assert!((d.recompute().unwrap() - d.value).abs() <= 1e-12 * d.value.max(1.0));
        }
    }
    for s in &run.summary.metrics {
        assert!(s.value.min <= s.value.mean && s.value.mean <= s.value.max);
    }
}

#[test]
fn balanced_solution_gives_zero_indices() {
    let m = ieee();
    let emf = m.source().emf();
    let sol = Solution {
        bus_ids: m.buses().iter().map(|b| b.id.clone()).collect(),
        voltages: vec![emf; m.buses().len()],
        base_phase_volts: m.source().base_phase_volts(),
        iterations: 1,
        converged: true,
        max_residual_kva: 0.0,
        trajectory: vec![0.0],
    };
    let report = evaluate(&m, &sol, &representative_buses(&m).buses).unwrap();
    for (_, set, _) in report.evaluated() {
        for metric in Metric::ALL {
            assert!(set.value(metric).abs() < 1e-12, "{metric}: {}", set.value(metric));
        }
    }
}

#[test]
fn metric_failure_is_a_per_bus_diagnostic() {
    let m = ieee();
    let base = m.source().base_phase_volts();
    let mut voltages = vec![m.source().emf(); m.buses().len()];
    let bad = m.bus_index(&"42".into()).unwrap();
    voltages[bad] = [Complex64::new(base, 0.0); 3];
    let sol = Solution {
        bus_ids: m.buses().iter().map(|b| b.id.clone()).collect(),
        voltages,
        base_phase_volts: base,
        iterations: 1,
        converged: true,
        max_residual_kva: 0.0,
        trajectory: vec![0.0],
    };
    let report = evaluate(&m, &sol, &representative_buses(&m).buses).unwrap();
    assert_eq!(report.evaluated().count(), 8);
    let row = report.buses.iter().find(|b| b.bus.as_str() == "42").unwrap();
    assert!(row.indices.is_none() && row.diagnostic.is_some());
    assert_eq!(SummaryStats::from_report(&report).unwrap().bus_count, 8);
}

#[test]
fn empty_pv_gives_zero_deltas() {
    let (s, _) = shipped(2);
    let c = compare_before_after(&ieee(), &s, &PvSpec::none(), BusSelection::Representative, &opts()).unwrap();
    for d in &c.deltas {
        assert_eq!(d.mean_value, 0.0);
        assert!(d.mean_error.is_none_or(|e| e == 0.0));
    }
}

#[test]
fn pv_on_heavy_phase_lowers_unbalance() {
    let (s, _) = shipped(3);
    let all_b = PvSpec {
        name: "all on b".into(),
        unit_kw: 2.5,
        placement: PvPlacement::Spread {
            unit_count: 40,
            phase_counts: [0, 40, 0],
        },
    };
    let c = compare_before_after(&ieee(), &s, &all_b, BusSelection::Representative, &opts()).unwrap();
    assert!(c.delta(Metric::Vuf).mean_value < 0.0);
}

#[test]
fn full_fleet_converges_and_unloads_the_head() {
    let (s, pv) = shipped(1);
    assert_eq!(pv.total_kw(), 100.0);
    let c = compare_before_after(&ieee(), &s, &pv, BusSelection::Representative, &opts()).unwrap();
    assert_eq!(c.after.pv_units, 40);
    assert!(c.after.solve.source_kw < c.before.solve.source_kw - 90.0);
}

#[test]
fn pv_buses_are_shared_across_scenarios() {
    let m = ieee();
    let buses = |i: usize| {
        let (s, pv) = shipped(i);
        let loaded = build_scenario(&m, &s).unwrap();
        pv.assignments(&loaded).unwrap().into_iter().map(|a| a.bus).collect::<Vec<_>>()
    };
    assert_eq!(buses(1), buses(2));
    assert_eq!(buses(2), buses(3));
}

#[test]
fn skew_toward_one_phase_never_lowers_mean_vuf() {
    let m = ieee();
    let mut last = f64::NEG_INFINITY;
    for b in [33.4, 40.0, 45.0, 50.0, 55.0, 60.0] {
        let s = spec(160.0, [(100.0 - b) / 2.0, b, (100.0 - b) / 2.0]);
        let r = run_scenario(&m, &s, None, BusSelection::Representative, &opts()).unwrap();
        let v = r.summary.mean(Metric::Vuf);
        assert!(v >= last, "share {b}: {v} < {last}");
        last = v;
    }
}

/// Ten-bus chain with mildly unbalanced loads on every phase of every bus.
fn uniform_feeder() -> FeederModel {
    let names: Vec<String> = (1..=10).map(|i| i.to_string()).collect();
    let mut source = SourceSpec::default_at("1".into());
    source.voltage_pu = [1.0; 3];
    let loads = names[1..]
        .iter()
        .flat_map(|b| {
            [(Phase::A, 2.0), (Phase::B, 2.2), (Phase::C, 1.9)].map(|(p, kw)| LoadPoint {
                name: format!("{b}{p}"),
                bus: b.as_str().into(),
                phase: p,
                kw,
                power_factor: 0.95,
            })
        })
        .collect();
    FeederModel::from_parts(FeederParts {
        name: "uniform".into(),
        source,
        line_codes: vec![LineCode {
            name: "c".into(),
            r1_ohm_per_km: 0.284,
            x1_ohm_per_km: 0.083,
            r0_ohm_per_km: 1.136,
            x0_ohm_per_km: 0.417,
            c1_nf_per_km: 0.0,
            c0_nf_per_km: 0.0,
        }],
        buses: Vec::new(),
        segments: names
            .windows(2)
            .map(|w| LineSegment {
                name: format!("{}-{}", w[0], w[1]),
                from_bus: w[0].as_str().into(),
                to_bus: w[1].as_str().into(),
                length_m: 25.0,
                line_code: "c".into(),
            })
            .collect(),
        loads,
        generators: Vec::new(),
    })
    .unwrap()
}

#[test]
fn pv_proportional_to_load_barely_moves_vuf() {
    let m = uniform_feeder();
    let mut parts = m.parts().clone();
    parts.generators = m
        .loads()
        .iter()
        .map(|l| unbalance_core::feeder::PvUnit {
            bus: l.bus.clone(),
            phase: l.phase,
            kw: 0.5 * l.kw,
        })
        .collect();
    let with_pv = FeederModel::from_parts(parts).unwrap();
    let (_, before, _) = run_model(&m, BusSelection::All, &opts(), Leg::WithoutPv).unwrap();
    let (_, after, _) = run_model(&with_pv, BusSelection::All, &opts(), Leg::WithPv).unwrap();
    for (b, a) in before.buses.iter().zip(&after.buses) {
        let (vb, va) = (b.indices.as_ref().unwrap().vuf.value, a.indices.as_ref().unwrap().vuf.value);
        assert!((vb - va).abs() < 0.05, "bus {}: {vb} -> {va}", b.bus);
    }
}

#[test]
fn apply_pv_leaves_loads_alone() {
    let (s, pv) = shipped(2);
    let loaded = build_scenario(&ieee(), &s).unwrap();
    let with_pv = apply_pv(&loaded, &pv).unwrap();
    assert_eq!(with_pv.loads(), loaded.loads());
    assert_eq!(with_pv.generators().len(), 40);
    let generated: f64 = model_injections(&with_pv).iter().filter(|i| i.kw < 0.0).map(|i| -i.kw).sum();
    assert!((generated - 100.0).abs() < 1e-9);
    assert!(solve_snapshot(&with_pv, &model_injections(&with_pv), &opts()).is_ok());
}
