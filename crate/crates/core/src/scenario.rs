//! Load-skew scenarios, PV fleets, representative buses and the index
//! statistics computed over them.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{FeederError, Leg, MetricError, ScenarioError};
use crate::feeder::{main_line, BusId, FeederModel, LoadPoint, Phase, PvUnit};
use crate::metrics::{absolute_error, IndexSet, Metric};
use crate::powerflow::{model_injections, slack_power, solve_snapshot, SolveOptions};

pub const SHARE_SUM_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationPolicy {
    /// Per-phase load counts by largest remainder, then phases dealt to the
    /// id-sorted load points so each phase stays closest to its pro-rata
    /// share of the points dealt so far.
    #[default]
    LargestRemainder,
}

fn default_power_factor() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub total_kw: f64,
    /// Percent of total load on phases a, b, c.
    pub phase_shares: [f64; 3],
    #[serde(default = "default_power_factor")]
    pub power_factor: f64,
    #[serde(default)]
    pub allocation_policy: AllocationPolicy,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.total_kw.is_finite() && self.total_kw > 0.0) {
            return Err(ScenarioError::SharesInfeasible(format!(
                "total load must be positive, got {} kW",
                self.total_kw
            )));
        }
        if self.phase_shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(ScenarioError::SharesInfeasible(format!(
                "shares {:?} include a negative or non-finite value",
                self.phase_shares
            )));
        }
        let sum: f64 = self.phase_shares.iter().sum();
        if (sum - 100.0).abs() > SHARE_SUM_TOLERANCE {
            return Err(ScenarioError::SharesInfeasible(format!("shares sum to {sum}, not 100")));
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(ScenarioError::Invalid(format!("power factor {}", self.power_factor)));
        }
        Ok(())
    }

    /// Skew as max share minus min share, percentage points.
    pub fn skew(&self) -> f64 {
        let max = self.phase_shares.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.phase_shares.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Splits `n` items over three phases in proportion to `weights` by the
/// largest-remainder method; remainder ties go to the lower phase.
pub fn phase_counts(n: usize, weights: [f64; 3]) -> [usize; 3] {
    let total: f64 = weights.iter().sum();
    if n == 0 || total <= 0.0 {
        return [0; 3];
    }
    let quotas = weights.map(|w| n as f64 * w / total);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = n - counts.iter().sum::<usize>();
    for &p in order.iter().take(missing) {
        counts[p] += 1;
    }
    counts
}

/// Orders phase slots so that after each step every phase is as close as
/// possible to its pro-rata count; ties go to the lower phase.
pub fn deal_phases(counts: [usize; 3]) -> Vec<Phase> {
    let n: usize = counts.iter().sum();
    let mut assigned = [0usize; 3];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for p in 0..3 {
            if assigned[p] >= counts[p] {
                continue;
            }
            let deficit = counts[p] as f64 * (i + 1) as f64 / n as f64 - assigned[p] as f64;
            if best.is_none_or(|(_, d)| deficit > d) {
                best = Some((p, deficit));
            }
        }
        let (p, _) = best.expect("a phase has remaining slots");
        assigned[p] += 1;
        out.push(Phase::from_index(p).expect("phase index"));
    }
    out
}

/// Reassigns every load point's phase and sets a uniform kW so the totals
/// follow `spec`. PV units are kept.
pub fn build_scenario(model: &FeederModel, spec: &ScenarioSpec) -> Result<FeederModel, ScenarioError> {
    spec.validate()?;
    let mut loads: Vec<LoadPoint> = model.loads().to_vec();
    if loads.is_empty() {
        return Err(ScenarioError::SharesInfeasible("feeder has no load points".into()));
    }
    loads.sort_by(|a, b| a.bus.cmp(&b.bus).then_with(|| a.name.cmp(&b.name)));
    let phases = match spec.allocation_policy {
        AllocationPolicy::LargestRemainder => deal_phases(phase_counts(loads.len(), spec.phase_shares)),
    };
    let kw = spec.total_kw / loads.len() as f64;
    for (load, phase) in loads.iter_mut().zip(phases) {
        load.phase = phase;
        load.kw = kw;
        load.power_factor = spec.power_factor;
    }
    let mut parts = model.parts().clone();
    parts.loads = loads;
    Ok(FeederModel::from_parts(parts)?)
}

/// Per-phase load in kW and as percent of the total.
pub fn phase_totals(model: &FeederModel) -> ([f64; 3], [f64; 3]) {
    let mut kw = [0.0; 3];
    for l in model.loads() {
        kw[l.phase.index()] += l.kw;
    }
    let total: f64 = kw.iter().sum();
    let shares = if total > 0.0 { kw.map(|k| 100.0 * k / total) } else { [0.0; 3] };
    (kw, shares)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PvAssignment {
    pub bus: BusId,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PvPlacement {
    /// One entry per unit.
    Explicit(Vec<PvAssignment>),
    /// Units spread uniformly by index over the id-sorted load buses
    /// (unit `i` on load bus `floor(i * n_buses / unit_count)`), with phases
    /// dealt from the given per-phase counts.
    Spread { unit_count: usize, phase_counts: [usize; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvSpec {
    pub name: String,
    pub unit_kw: f64,
    pub placement: PvPlacement,
}

impl PvSpec {
    pub fn none() -> Self {
        Self {
            name: "no PV".into(),
            unit_kw: 2.5,
            placement: PvPlacement::Explicit(Vec::new()),
        }
    }

    pub fn unit_count(&self) -> usize {
        match &self.placement {
            PvPlacement::Explicit(units) => units.len(),
            PvPlacement::Spread { unit_count, .. } => *unit_count,
        }
    }

    pub fn total_kw(&self) -> f64 {
        self.unit_count() as f64 * self.unit_kw
    }

    /// Resolves the placement against a feeder's load buses.
    pub fn assignments(&self, model: &FeederModel) -> Result<Vec<PvAssignment>, ScenarioError> {
        if !(self.unit_kw.is_finite() && self.unit_kw > 0.0) {
            return Err(ScenarioError::Invalid(format!("PV unit size {} kW", self.unit_kw)));
        }
        match &self.placement {
            PvPlacement::Explicit(units) => Ok(units.clone()),
            PvPlacement::Spread { unit_count, phase_counts } => {
                if phase_counts.iter().sum::<usize>() != *unit_count {
                    return Err(ScenarioError::Invalid(format!(
                        "PV phase counts {phase_counts:?} do not sum to {unit_count}"
                    )));
                }
                let buses = model.load_buses();
                if buses.is_empty() && *unit_count > 0 {
                    return Err(ScenarioError::Invalid("feeder has no load buses for PV".into()));
                }
                Ok(deal_phases(*phase_counts)
                    .into_iter()
                    .enumerate()
                    .map(|(i, phase)| PvAssignment {
                        bus: buses[i * buses.len() / unit_count].clone(),
                        phase,
                    })
                    .collect())
            }
        }
    }
}

/// Adds the PV fleet as generators; loads are untouched.
pub fn apply_pv(model: &FeederModel, pv: &PvSpec) -> Result<FeederModel, ScenarioError> {
    let units = pv.assignments(model)?;
    if units.is_empty() {
        return Ok(model.clone());
    }
    let mut parts = model.parts().clone();
    parts.generators.extend(units.into_iter().map(|u| PvUnit {
        bus: u.bus,
        phase: u.phase,
        kw: pv.unit_kw,
    }));
    Ok(FeederModel::from_parts(parts)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeBuses {
    pub buses: Vec<BusId>,
    /// Set when the main line is too short to give nine distinct buses.
    pub degenerate: bool,
}

/// Start, middle and end bus of each of three equal-length zones of the
/// main line. Zone `k` covers `[kL/3, (k+1)L/3)`, the last zone is closed.
/// Within a zone the first and last buses are taken along with the bus
/// nearest the zone midpoint (ties to the lowest id).
pub fn representative_buses(model: &FeederModel) -> RepresentativeBuses {
    let path: Vec<(BusId, f64)> = main_line(model)
        .into_iter()
        .map(|b| {
            let d = model.distance_m(&b).expect("main-line bus exists");
            (b, d)
        })
        .collect();
    let length = path.last().map(|(_, d)| *d).unwrap_or(0.0);
    let nearest = |target: f64, pool: &[&(BusId, f64)]| -> BusId {
        pool.iter()
            .min_by(|a, b| {
                (a.1 - target)
                    .abs()
                    .total_cmp(&(b.1 - target).abs())
                    .then_with(|| a.0.cmp(&b.0))
            })
            .map(|(b, _)| b.clone())
            .expect("non-empty pool")
    };
    let all: Vec<&(BusId, f64)> = path.iter().collect();
    let mut picked = Vec::with_capacity(9);
    for k in 0..3 {
        let lo = length * k as f64 / 3.0;
        let hi = length * (k + 1) as f64 / 3.0;
        let zone: Vec<&(BusId, f64)> = path
            .iter()
            .filter(|(_, d)| *d >= lo && (*d < hi || (k == 2 && *d <= hi)))
            .collect();
        let pool = if zone.is_empty() { &all } else { &zone };
        picked.push(nearest(lo, pool));
        picked.push(nearest((lo + hi) / 2.0, pool));
        picked.push(nearest(hi, pool));
    }
    let mut buses: Vec<BusId> = Vec::with_capacity(9);
    for b in picked {
        if !buses.contains(&b) {
            buses.push(b);
        }
    }
    let degenerate = buses.len() < 9;
    RepresentativeBuses { buses, degenerate }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusSelection {
    #[default]
    Representative,
    All,
}

impl std::str::FromStr for BusSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "representative" => Ok(BusSelection::Representative),
            "all" => Ok(BusSelection::All),
            other => Err(format!("unknown bus selection '{other}'")),
        }
    }
}

/// Buses to report on, ordered by distance from the source.
pub fn select_buses(model: &FeederModel, selection: BusSelection) -> (Vec<BusId>, bool) {
    match selection {
        BusSelection::Representative => {
            let r = representative_buses(model);
            (r.buses, r.degenerate)
        }
        BusSelection::All => {
            let mut ids: Vec<BusId> = model.buses().iter().map(|b| b.id.clone()).collect();
            ids.sort_by(|a, b| {
                let da = model.distance_m(a).unwrap_or(0.0);
                let db = model.distance_m(b).unwrap_or(0.0);
                da.total_cmp(&db).then_with(|| a.cmp(b))
            });
            (ids, false)
        }
    }
}

/// Absolute error of each relative index against VUF, percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexErrors {
    pub lvur: f64,
    pub cigre: f64,
    pub pvur1: f64,
    pub pvur2: f64,
}

impl IndexErrors {
    pub fn from_indices(set: &IndexSet) -> Self {
        let e = |m: Metric| absolute_error(set.value(m), set.vuf.value);
        Self {
            lvur: e(Metric::Lvur),
            cigre: e(Metric::Cigre),
            pvur1: e(Metric::Pvur1),
            pvur2: e(Metric::Pvur2),
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Vuf => None,
            Metric::Lvur => Some(self.lvur),
            Metric::Cigre => Some(self.cigre),
            Metric::Pvur1 => Some(self.pvur1),
            Metric::Pvur2 => Some(self.pvur2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusMetrics {
    pub bus: BusId,
    pub distance_m: f64,
    pub magnitudes_pu: [f64; 3],
    pub indices: Option<IndexSet>,
    pub errors: Option<IndexErrors>,
    /// Why the indices are missing, when they are.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub buses: Vec<BusMetrics>,
    pub degenerate_selection: bool,
}

impl MetricsReport {
    pub fn evaluated(&self) -> impl Iterator<Item = (&BusMetrics, &IndexSet, &IndexErrors)> {
        self.buses.iter().filter_map(|b| match (&b.indices, &b.errors) {
            (Some(i), Some(e)) => Some((b, i, e)),
            _ => None,
        })
    }
}

/// Computes all indices at `buses`. Metric failures at a bus become a
/// per-bus diagnostic.
pub fn evaluate(
    model: &FeederModel,
    solution: &crate::powerflow::Solution,
    buses: &[BusId],
) -> Result<MetricsReport, ScenarioError> {
    let mut rows = Vec::with_capacity(buses.len());
    for bus in buses {
        let idx = solution
            .index_of(bus)
            .ok_or_else(|| ScenarioError::Invalid(format!("bus '{bus}' not in solution")))?;
        let distance_m = model
            .distance_m(bus)
            .ok_or_else(|| ScenarioError::Feeder(FeederError::DanglingReference(format!("bus '{bus}'"))))?;
        let computed: Result<IndexSet, MetricError> = solution
            .triple_pu(bus)
            .ok_or(MetricError::AllZero)
            .and_then(|t| IndexSet::compute(&t));
        let (indices, errors, diagnostic) = match computed {
            Ok(set) => {
                let errors = IndexErrors::from_indices(&set);
                (Some(set), Some(errors), None)
            }
            Err(e) => (None, None, Some(e.to_string())),
        };
        rows.push(BusMetrics {
            bus: bus.clone(),
            distance_m,
            magnitudes_pu: solution.magnitudes_pu(idx),
            indices,
            errors,
            diagnostic,
        });
    }
    Ok(MetricsReport {
        buses: rows,
        degenerate_selection: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        // Summation rounding can push the mean a hair outside [min, max].
        Self {
            max,
            min,
            mean: mean.clamp(min, max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub metric: Metric,
    pub value: Stat,
    /// Absent for VUF itself.
    pub error: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub bus_count: usize,
    pub metrics: Vec<MetricStats>,
}

impl SummaryStats {
    pub fn from_report(report: &MetricsReport) -> Result<Self, ScenarioError> {
        let rows: Vec<_> = report.evaluated().collect();
        if rows.is_empty() {
            return Err(ScenarioError::Invalid("no bus has valid index values".into()));
        }
        let metrics = Metric::ALL
            .iter()
            .map(|&m| {
                let values: Vec<f64> = rows.iter().map(|(_, i, _)| i.value(m)).collect();
                let errors: Option<Vec<f64>> = rows.iter().map(|(_, _, e)| e.get(m)).collect();
                MetricStats {
                    metric: m,
                    value: Stat::of(&values),
                    error: errors.map(|e| Stat::of(&e)),
                }
            })
            .collect();
        Ok(Self {
            bus_count: rows.len(),
            metrics,
        })
    }

    pub fn get(&self, metric: Metric) -> &MetricStats {
        self.metrics
            .iter()
            .find(|s| s.metric == metric)
            .expect("every metric is summarised")
    }

    pub fn mean(&self, metric: Metric) -> f64 {
        self.get(metric).value.mean
    }

    pub fn mean_error(&self, metric: Metric) -> Option<f64> {
        self.get(metric).error.map(|e| e.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub min_magnitude_pu: f64,
    pub max_magnitude_pu: f64,
    pub max_residual_kva: f64,
    /// Complex power drawn from the source, kW and kvar summed over phases.
    pub source_kw: f64,
    pub source_kvar: f64,
    pub trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub scenario: String,
    pub pv: Option<String>,
    pub phase_kw: [f64; 3],
    pub phase_shares: [f64; 3],
    pub pv_units: usize,
    pub solve: SolveSummary,
    pub report: MetricsReport,
    pub summary: SummaryStats,
}

/// Solves a prepared feeder and evaluates the selected buses.
pub fn run_model(
    model: &FeederModel,
    selection: BusSelection,
    opts: &SolveOptions,
    leg: Leg,
) -> Result<(SolveSummary, MetricsReport, SummaryStats), ScenarioError> {
    let injections = model_injections(model);
    let fail = |source| ScenarioError::Solve { leg, source };
    let solution = solve_snapshot(model, &injections, opts).map_err(fail)?;
    let (lo, hi) = solution.magnitude_range_pu();
    let slack = slack_power(model, &injections, &solution).map_err(fail)?;
    let source: num_complex::Complex64 = slack.iter().sum();
    let (buses, degenerate) = select_buses(model, selection);
    let mut report = evaluate(model, &solution, &buses)?;
    report.degenerate_selection = degenerate;
    let summary = SummaryStats::from_report(&report)?;
    Ok((
        SolveSummary {
            iterations: solution.iterations,
            min_magnitude_pu: lo,
            max_magnitude_pu: hi,
            max_residual_kva: solution.max_residual_kva,
            source_kw: source.re,
            source_kvar: source.im,
            trajectory: solution.trajectory,
        },
        report,
        summary,
    ))
}

/// Builds the scenario, optionally adds PV, solves and evaluates.
pub fn run_scenario(
    base: &FeederModel,
    spec: &ScenarioSpec,
    pv: Option<&PvSpec>,
    selection: BusSelection,
    opts: &SolveOptions,
) -> Result<ScenarioRun, ScenarioError> {
    let loaded = build_scenario(base, spec)?;
    let (model, leg) = match pv {
        Some(pv) => (apply_pv(&loaded, pv)?, Leg::WithPv),
        None => (loaded, Leg::WithoutPv),
    };
    let (phase_kw, phase_shares) = phase_totals(&model);
    let (solve, report, summary) = run_model(&model, selection, opts, leg)?;
    Ok(ScenarioRun {
        scenario: spec.name.clone(),
        pv: pv.map(|p| p.name.clone()),
        phase_kw,
        phase_shares,
        pv_units: model.generators().len(),
        solve,
        report,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: Metric,
    /// After minus before; negative means the mean index fell.
    pub mean_value: f64,
    /// After minus before for the mean absolute error against VUF.
    pub mean_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub pv: String,
    pub before: ScenarioRun,
    pub after: ScenarioRun,
    pub deltas: Vec<MetricDelta>,
}

impl Comparison {
    pub fn delta(&self, metric: Metric) -> &MetricDelta {
        self.deltas
            .iter()
            .find(|d| d.metric == metric)
            .expect("every metric has a delta")
    }
}

/// Paired solves without and with the PV fleet on the same scenario.
pub fn compare_before_after(
    base: &FeederModel,
    spec: &ScenarioSpec,
    pv: &PvSpec,
    selection: BusSelection,
    opts: &SolveOptions,
) -> Result<Comparison, ScenarioError> {
    let (before, after) = rayon::join(
        || run_scenario(base, spec, None, selection, opts),
        || run_scenario(base, spec, Some(pv), selection, opts),
    );
    let (before, after) = (before?, after?);
    let deltas = Metric::ALL
        .iter()
        .map(|&m| {
            let mean_error = match (before.summary.mean_error(m), after.summary.mean_error(m)) {
                (Some(b), Some(a)) => Some(a - b),
                _ => None,
            };
            MetricDelta {
                metric: m,
                mean_value: after.summary.mean(m) - before.summary.mean(m),
                mean_error,
            }
        })
        .collect();
    Ok(Comparison {
        scenario: spec.name.clone(),
        pv: pv.name.clone(),
        before,
        after,
        deltas,
    })
}

/// One scenario of a study with its PV fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub scenario: ScenarioSpec,
    pub pv: PvSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub feeder: String,
    pub selection: BusSelection,
    pub comparisons: Vec<Comparison>,
}

/// Runs every entry's before/after pair. Entries run concurrently; results
/// keep the input order.
pub fn run_study(
    base: &FeederModel,
    entries: &[StudyEntry],
    selection: BusSelection,
    opts: &SolveOptions,
) -> Result<StudyResult, ScenarioError> {
    use rayon::prelude::*;
    let comparisons = entries
        .par_iter()
        .map(|e| compare_before_after(base, &e.scenario, &e.pv, selection, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StudyResult {
        feeder: base.name().to_string(),
        selection,
        comparisons,
    })
}

/// Study file: scenario and PV file paths, relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub feeder: String,
    pub entries: Vec<StudyManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifestEntry {
    pub scenario: String,
    pub pv: String,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        ScenarioError::Feeder(FeederError::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    serde_json::from_str(&text).map_err(|e| {
        ScenarioError::Feeder(FeederError::Parse {
            file: path.display().to_string(),
            line: e.line() as u64,
            column: e.column().to_string(),
            message: e.to_string(),
        })
    })
}

impl StudyManifest {
    /// Loads the manifest plus the files it names. Returns the feeder
    /// directory resolved against the manifest location.
    pub fn load(path: &Path) -> Result<(std::path::PathBuf, Vec<StudyEntry>), ScenarioError> {
        let manifest: StudyManifest = read_json(path)?;
        let root = path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::with_capacity(manifest.entries.len());
        for e in &manifest.entries {
            entries.push(StudyEntry {
                scenario: read_json(&root.join(&e.scenario))?,
                pv: read_json(&root.join(&e.pv))?,
            });
        }
        Ok((root.join(&manifest.feeder), entries))
    }
}
