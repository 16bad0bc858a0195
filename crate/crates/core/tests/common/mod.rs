//! Hand-built networks shared by the power-flow tests and the acceptance
//! suite, with reference voltages from tools/oracles/powerflow_oracle.py
//! (nodal Newton, independent of the sweep).

#![allow(dead_code)]

use num_complex::Complex64;
use unbalance_core::feeder::{FeederModel, FeederParts, LineCode, LineSegment, LoadPoint, Phase, SourceSpec};
use unbalance_core::powerflow::{model_injections, solve_snapshot, SolveOptions};
use unbalance_core::BusId;

pub fn code() -> LineCode {
    LineCode {
        name: "c".into(),
        r1_ohm_per_km: 0.25,
        x1_ohm_per_km: 0.08,
        r0_ohm_per_km: 1.0,
        x0_ohm_per_km: 0.3,
        c1_nf_per_km: 0.0,
        c0_nf_per_km: 0.0,
    }
}

pub fn load(bus: &str, phase: Phase, kw: f64, pf: f64) -> LoadPoint {
    LoadPoint {
        name: format!("{bus}{phase}"),
        bus: bus.into(),
        phase,
        kw,
        power_factor: pf,
    }
}

pub fn network(segs: &[(&str, &str, f64)], loads: Vec<LoadPoint>) -> FeederModel {
    let mut source = SourceSpec::default_at("1".into());
    source.voltage_pu = [1.0; 3];
    FeederModel::from_parts(FeederParts {
        name: "oracle".into(),
        source,
        line_codes: vec![code()],
        buses: Vec::new(),
        segments: segs
            .iter()
            .map(|(a, b, l)| LineSegment {
                name: format!("{a}-{b}"),
                from_bus: (*a).into(),
                to_bus: (*b).into(),
                length_m: *l,
                line_code: "c".into(),
            })
            .collect(),
        loads,
        generators: Vec::new(),
    })
    .unwrap()
}

pub type Expected = Vec<(&'static str, [(f64, f64); 3])>;

pub fn two_bus_balanced() -> (FeederModel, Expected) {
    let m = network(
        &[("1", "2", 200.0)],
        vec![load("2", Phase::A, 10.0, 1.0), load("2", Phase::B, 10.0, 1.0), load("2", Phase::C, 10.0, 1.0)],
    );
    let expected = vec![(
        "2",
        [
            (0.991247994667906, -0.002773668639053),
            (-0.498026064837054, -0.857059110513262),
            (-0.493221929830853, 0.859832779152316),
        ],
    )];
    (m, expected)
}

pub fn two_bus_single_phase() -> (FeederModel, Expected) {
    let m = network(&[("1", "2", 200.0)], vec![load("2", Phase::B, 8.0, 0.95)]);
    let expected = vec![(
        "2",
        [
            (1.004074831801184, 0.006564627405102),
            (-0.491982174916459, -0.852748814160681),
            (-0.495925168198816, 0.872590031189540),
        ],
    )];
    (m, expected)
}

pub fn four_bus() -> FeederModel {
    network(
        &[("1", "2", 150.0), ("2", "3", 100.0), ("2", "4", 120.0)],
        vec![
            load("3", Phase::A, 6.0, 0.95),
            load("3", Phase::B, 3.0, 1.0),
            load("4", Phase::C, 9.0, 0.9),
            load("4", Phase::A, 2.0, 1.0),
            load("2", Phase::B, 4.0, 0.95),
        ],
    )
}

pub fn four_bus_two_branch() -> (FeederModel, Expected) {
    let expected = vec![
        (
            "2",
            [
                (0.993136434071221, -0.002641920343700),
                (-0.499281395957385, -0.863810251468981),
                (-0.498552882614102, 0.857311968087926),
            ],
        ),
        (
            "3",
            [
                (0.987666251914267, -0.001198877146096),
                (-0.501545982460057, -0.861056018257612),
                (-0.501113396715437, 0.858728615994823),
            ],
        ),
        (
            "4",
            [
                (0.993002011827623, -0.008429422439919),
                (-0.498365592722462, -0.869271482884364),
                (-0.495530359872702, 0.846698928058305),
            ],
        ),
    ];
    (four_bus(), expected)
}

/// Largest voltage error (p.u.) against the oracle and the residual
/// relative to the total injected apparent power.
pub fn oracle_errors(model: &FeederModel, expected: &Expected) -> (f64, f64) {
    let inj = model_injections(model);
    let sol = solve_snapshot(model, &inj, &SolveOptions::default()).unwrap();
    assert!(sol.converged);
    let mut worst: f64 = 0.0;
    for (bus, phases) in expected {
        let i = sol.index_of(&BusId::from(*bus)).unwrap();
        for (p, (re, im)) in phases.iter().enumerate() {
            let got = sol.voltages[i][p] / sol.base_phase_volts;
            worst = worst.max((got - Complex64::new(*re, *im)).norm());
        }
    }
    let total_kva: f64 = inj.iter().map(|x| Complex64::new(x.kw, x.kvar).norm()).sum();
    (worst, sol.max_residual_kva / total_kva)
}
