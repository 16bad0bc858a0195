//! Backward–forward sweep power flow for radial three-phase feeders with
//! constant-power single-phase injections.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::PowerFlowError;
use crate::feeder::{BusId, FeederModel, Phase};
use crate::matrix::{sub3, Phase3, ZERO3};
use crate::phasor::PhasorTriple;

/// Below this magnitude (p.u.) the solve is abandoned as collapsed.
pub const COLLAPSE_PU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Convergence threshold on max per-phase |ΔV| between sweeps, p.u.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// When false and a start solution is supplied, iteration begins there.
    pub flat_start: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            flat_start: true,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(), PowerFlowError> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(PowerFlowError::InvalidInput(format!("tolerance {}", self.tolerance)));
        }
        if self.max_iterations < 1 {
            return Err(PowerFlowError::InvalidInput("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Complex power drawn at one bus phase. Generation is negative `kw`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub bus: BusId,
    pub phase: Phase,
    pub kw: f64,
    pub kvar: f64,
}

/// Loads of the model plus its PV units as negative unity-PF injections.
pub fn model_injections(model: &FeederModel) -> Vec<Injection> {
    let loads = model.loads().iter().map(|l| Injection {
        bus: l.bus.clone(),
        phase: l.phase,
        kw: l.kw,
        kvar: l.kvar(),
    });
    let pv = model.generators().iter().map(|g| Injection {
        bus: g.bus.clone(),
        phase: g.phase,
        kw: -g.kw,
        kvar: 0.0,
    });
    loads.chain(pv).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub bus_ids: Vec<BusId>,
    /// Phase-to-neutral voltages in volts, indexed like `bus_ids`.
    pub voltages: Vec<Phase3>,
    pub base_phase_volts: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_residual_kva: f64,
    /// Max per-phase |ΔV| (p.u.) after each sweep.
    pub trajectory: Vec<f64>,
}

impl Solution {
    pub fn index_of(&self, bus: &BusId) -> Option<usize> {
        self.bus_ids.iter().position(|b| b == bus)
    }

    /// Bus voltages in per unit.
    pub fn triple_pu(&self, bus: &BusId) -> Option<PhasorTriple> {
        let v = self.voltages[self.index_of(bus)?];
        PhasorTriple::from_complex(v.map(|x| x / self.base_phase_volts)).ok()
    }

    pub fn magnitudes_pu(&self, index: usize) -> [f64; 3] {
        self.voltages[index].map(|v| v.norm() / self.base_phase_volts)
    }

    /// Lowest and highest phase magnitude over all buses, p.u.
    pub fn magnitude_range_pu(&self) -> (f64, f64) {
        (0..self.voltages.len())
            .flat_map(|i| self.magnitudes_pu(i))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m), hi.max(m)))
    }
}

/// Per-bus specified power in VA.
fn specified_va(model: &FeederModel, injections: &[Injection]) -> Result<Vec<Phase3>, PowerFlowError> {
    let mut s = vec![ZERO3; model.buses().len()];
    for inj in injections {
        let i = model
            .bus_index(&inj.bus)
            .ok_or_else(|| PowerFlowError::InvalidInput(format!("injection at unknown bus '{}'", inj.bus)))?;
        if !(inj.kw.is_finite() && inj.kvar.is_finite()) {
            return Err(PowerFlowError::InvalidInput(format!("non-finite injection at bus '{}'", inj.bus)));
        }
        s[i][inj.phase.index()] += Complex64::new(inj.kw, inj.kvar) * 1000.0;
    }
    Ok(s)
}

pub fn solve_snapshot(
    model: &FeederModel,
    injections: &[Injection],
    opts: &SolveOptions,
) -> Result<Solution, PowerFlowError> {
    solve_from(model, injections, opts, None)
}

/// Like [`solve_snapshot`], optionally warm-started from `start` when
/// `opts.flat_start` is false.
pub fn solve_from(
    model: &FeederModel,
    injections: &[Injection],
    opts: &SolveOptions,
    start: Option<&Solution>,
) -> Result<Solution, PowerFlowError> {
    opts.validate()?;
    let s = specified_va(model, injections)?;
    let topo = model.topology();
    let n = model.buses().len();
    let source = model.source();
    let base = source.base_phase_volts();
    let emf = source.emf();
    let zs = source.impedance_ohm;

    let mut v: Vec<Phase3> = match start {
        Some(prev) if !opts.flat_start => {
            if prev.voltages.len() != n {
                return Err(PowerFlowError::InvalidInput("warm start from a different feeder".into()));
            }
            prev.voltages.clone()
        }
        _ => vec![emf; n],
    };

    let mut trajectory = Vec::new();
    let mut branch = vec![ZERO3; n];
    for iteration in 1..=opts.max_iterations {
        for &b in &topo.order {
            for p in 0..3 {
                branch[b][p] = if s[b][p] == Complex64::new(0.0, 0.0) {
                    Complex64::new(0.0, 0.0)
                } else {
                    (s[b][p] / v[b][p]).conj()
                };
            }
        }
        for &b in topo.order.iter().rev() {
            if let Some((parent, _)) = topo.parent[b] {
                let i = branch[b];
                for p in 0..3 {
                    branch[parent][p] += i[p];
                }
            }
        }

        let mut delta: f64 = 0.0;
        let mut update = |bus: usize, next: Phase3, v: &mut Vec<Phase3>| {
            for p in 0..3 {
                delta = delta.max((next[p] - v[bus][p]).norm() / base);
            }
            v[bus] = next;
        };
        let root = topo.root;
        update(root, sub3(&emf, &zs.mul_vec(&branch[root])), &mut v);
        for &b in &topo.order[1..] {
            let (parent, seg) = topo.parent[b].expect("non-root bus has a parent");
            let drop = model.segment_impedance(seg).mul_vec(&branch[b]);
            update(b, sub3(&v[parent], &drop), &mut v);
        }
        trajectory.push(delta);

        for &b in &topo.order {
            for z in &v[b] {
                let m = z.norm() / base;
                // NaN counts as collapsed.
                if m.is_nan() || m < COLLAPSE_PU {
                    return Err(PowerFlowError::CollapsedVoltage {
                        bus: model.bus_id(b).to_string(),
                        magnitude_pu: m,
                        iteration,
                    });
                }
            }
        }

        if delta < opts.tolerance {
            let mut sol = Solution {
                bus_ids: model.buses().iter().map(|b| b.id.clone()).collect(),
                voltages: v,
                base_phase_volts: base,
                iterations: iteration,
                converged: true,
                max_residual_kva: 0.0,
                trajectory,
            };
            sol.max_residual_kva = power_balance_residual(model, injections, &sol)?
                .iter()
                .flat_map(|r| r.iter())
                .map(|r| r.norm())
                .fold(0.0, f64::max);
            return Ok(sol);
        }
    }
    Err(PowerFlowError::NonConvergence {
        iterations: opts.max_iterations,
        last_delta: *trajectory.last().expect("at least one iteration"),
        trajectory,
    })
}

/// Segment currents (A) implied by the voltages alone, indexed by the
/// downstream bus; zero at the root.
pub fn branch_currents(model: &FeederModel, solution: &Solution) -> Result<Vec<Phase3>, PowerFlowError> {
    let topo = model.topology();
    let mut out = vec![ZERO3; solution.voltages.len()];
    for &b in &topo.order[1..] {
        let (parent, seg) = topo.parent[b].expect("non-root bus has a parent");
        let y = model.segment_impedance(seg).inverse().ok_or_else(|| {
            PowerFlowError::InvalidInput(format!("segment {} has a singular impedance matrix", model.segments()[seg].name))
        })?;
        out[b] = y.mul_vec(&sub3(&solution.voltages[parent], &solution.voltages[b]));
    }
    Ok(out)
}

/// Specified minus computed consumption per bus and phase, kVA. The slack
/// (source) bus row is zero.
pub fn power_balance_residual(
    model: &FeederModel,
    injections: &[Injection],
    solution: &Solution,
) -> Result<Vec<Phase3>, PowerFlowError> {
    let s = specified_va(model, injections)?;
    let topo = model.topology();
    let currents = branch_currents(model, solution)?;
    let mut out = vec![ZERO3; s.len()];
    for &b in &topo.order[1..] {
        let mut net = currents[b];
        for &c in &topo.children[b] {
            net = sub3(&net, &currents[c]);
        }
        for p in 0..3 {
            let computed = solution.voltages[b][p] * net[p].conj();
            out[b][p] = (s[b][p] - computed) / 1000.0;
        }
    }
    Ok(out)
}

/// Complex power leaving the source bus into the network, per phase, kVA.
/// Includes any load placed on the source bus itself.
pub fn slack_power(model: &FeederModel, injections: &[Injection], solution: &Solution) -> Result<Phase3, PowerFlowError> {
    let topo = model.topology();
    let currents = branch_currents(model, solution)?;
    let s = specified_va(model, injections)?;
    let root = topo.root;
    let mut out = ZERO3;
    for p in 0..3 {
        let feed: Complex64 = topo.children[root].iter().map(|&c| currents[c][p]).sum();
        out[p] = (solution.voltages[root][p] * feed.conj() + s[root][p]) / 1000.0;
    }
    Ok(out)
}

/// Total series losses `Σ (Z I) · conj(I)` over all segments, kVA.
pub fn series_losses(model: &FeederModel, solution: &Solution) -> Result<Complex64, PowerFlowError> {
    let topo = model.topology();
    let currents = branch_currents(model, solution)?;
    let mut total = Complex64::new(0.0, 0.0);
    for &b in &topo.order[1..] {
        let (_, seg) = topo.parent[b].expect("non-root bus has a parent");
        let drop = model.segment_impedance(seg).mul_vec(&currents[b]);
        total += (0..3).map(|p| drop[p] * currents[b][p].conj()).sum::<Complex64>();
    }
    Ok(total / 1000.0)
}
