//! Radial LV feeder model: buses, line segments with 3×3 phase impedances,
//! single-phase loads, PV units and a Thevenin source at the head bus.
//!
//! Internal units are ohms, metres, kW and volts. Per-unit values appear only
//! in [`SourceSpec`] and at reporting boundaries.

mod ieee;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::FeederError;
use crate::matrix::PhaseMatrix;

pub use ieee::{load_feeder, FeederFiles, IEEE_FILES};

pub const FORMAT_VERSION: u32 = 1;

/// Bus identifier. Orders numerically when both ids are integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub String);

impl BusId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Ord for BusId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0.parse::<u64>(), other.0.parse::<u64>()) {
            (Ok(a), Ok(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Ok(_), Err(_)) => Ordering::Less,
            (Err(_), Ok(_)) => Ordering::Greater,
            (Err(_), Err(_)) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for BusId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BusId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Phase> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::A => "a",
            Phase::B => "b",
            Phase::C => "c",
        })
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" | "1" => Ok(Phase::A),
            "b" | "2" => Ok(Phase::B),
            "c" | "3" => Ok(Phase::C),
            other => Err(format!("unknown phase '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCode {
    pub name: String,
    pub r1_ohm_per_km: f64,
    pub x1_ohm_per_km: f64,
    pub r0_ohm_per_km: f64,
    pub x0_ohm_per_km: f64,
    /// Shunt capacitances are carried for completeness; the solver ignores them.
    pub c1_nf_per_km: f64,
    pub c0_nf_per_km: f64,
}

impl LineCode {
    fn validate(&self) -> Result<(), FeederError> {
        let vals = [
            self.r1_ohm_per_km,
            self.x1_ohm_per_km,
            self.r0_ohm_per_km,
            self.x0_ohm_per_km,
            self.c1_nf_per_km,
            self.c0_nf_per_km,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(FeederError::Invalid(format!("line code {} has non-finite values", self.name)));
        }
        if self.r1_ohm_per_km < 0.0 || self.x1_ohm_per_km < 0.0 {
            return Err(FeederError::Invalid(format!("line code {} has negative r1/x1", self.name)));
        }
        if self.r1_ohm_per_km == 0.0 && self.x1_ohm_per_km == 0.0 {
            return Err(FeederError::Invalid(format!("line code {} has zero positive-sequence impedance", self.name)));
        }
        Ok(())
    }

    pub fn z1(&self) -> Complex64 {
        Complex64::new(self.r1_ohm_per_km, self.x1_ohm_per_km)
    }

    pub fn z0(&self) -> Complex64 {
        Complex64::new(self.r0_ohm_per_km, self.x0_ohm_per_km)
    }
}

/// Phase impedance per km: diagonal `(Z0 + 2 Z1) / 3`, off-diagonal
/// `(Z0 - Z1) / 3`.
pub fn phase_impedance(code: &LineCode) -> PhaseMatrix {
    PhaseMatrix::from_sequence(code.z1(), code.z0())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub name: String,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub length_m: f64,
    pub line_code: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint {
    pub name: String,
    pub bus: BusId,
    pub phase: Phase,
    pub kw: f64,
    pub power_factor: f64,
}

impl LoadPoint {
    /// Lagging reactive power implied by the power factor.
    pub fn kvar(&self) -> f64 {
        let pf = self.power_factor;
        self.kw * (1.0 - pf * pf).max(0.0).sqrt() / pf
    }
}

/// A single-phase grid-following PV unit: constant active power output at
/// unity power factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvUnit {
    pub bus: BusId,
    pub phase: Phase,
    pub kw: f64,
}

/// Thevenin source at the feeder head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub bus: BusId,
    /// Line-to-line base voltage.
    pub base_kv_ll: f64,
    pub voltage_pu: [f64; 3],
    pub angle_deg: [f64; 3],
    #[serde(default)]
    pub impedance_ohm: PhaseMatrix,
}

impl SourceSpec {
    /// Balanced 1.05 p.u. on a 0.416 kV base, zero internal impedance.
    pub fn default_at(bus: BusId) -> Self {
        Self {
            bus,
            base_kv_ll: 0.416,
            voltage_pu: [1.05; 3],
            angle_deg: [0.0, -120.0, 120.0],
            impedance_ohm: PhaseMatrix::zero(),
        }
    }

    /// Phase-to-neutral base voltage in volts.
    pub fn base_phase_volts(&self) -> f64 {
        self.base_kv_ll * 1000.0 / 3f64.sqrt()
    }

    /// Open-circuit EMF in volts.
    pub fn emf(&self) -> [Complex64; 3] {
        let base = self.base_phase_volts();
        [0, 1, 2].map(|p| Complex64::from_polar(self.voltage_pu[p] * base, self.angle_deg[p].to_radians()))
    }

    fn validate(&self) -> Result<(), FeederError> {
        if !(self.base_kv_ll.is_finite() && self.base_kv_ll > 0.0) {
            return Err(FeederError::Invalid(format!("source base voltage {} kV", self.base_kv_ll)));
        }
        for v in self.voltage_pu {
            if !(0.9..=1.1).contains(&v) {
                return Err(FeederError::Invalid(format!(
                    "source voltage {v} p.u. outside [0.9, 1.1]"
                )));
            }
        }
        if self.angle_deg.iter().any(|a| !a.is_finite()) {
            return Err(FeederError::Invalid("non-finite source angle".into()));
        }
        Ok(())
    }
}

/// Plain data behind a [`FeederModel`]; edit this and rebuild to derive a
/// modified feeder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederParts {
    pub name: String,
    pub source: SourceSpec,
    pub line_codes: Vec<LineCode>,
    pub buses: Vec<Bus>,
    pub segments: Vec<LineSegment>,
    pub loads: Vec<LoadPoint>,
    #[serde(default)]
    pub generators: Vec<PvUnit>,
}

/// Versioned canonical JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeederDocument {
    format_version: u32,
    #[serde(flatten)]
    parts: FeederParts,
}

/// Parent-pointer view of the radial network, rooted at the source bus.
#[derive(Debug, Clone)]
pub(crate) struct Topology {
    pub index: HashMap<BusId, usize>,
    /// `(parent bus, segment)` for every bus except the root.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Root first; every bus appears after its parent.
    pub order: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    pub distance_m: Vec<f64>,
    pub root: usize,
}

/// Validated radial feeder. Immutable once built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FeederDocument", into = "FeederDocument")]
pub struct FeederModel {
    parts: FeederParts,
    topology: Topology,
    segment_impedance: Vec<PhaseMatrix>,
}

impl PartialEq for FeederModel {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl TryFrom<FeederDocument> for FeederModel {
    type Error = FeederError;

    fn try_from(doc: FeederDocument) -> Result<Self, Self::Error> {
        if doc.format_version != FORMAT_VERSION {
            return Err(FeederError::Invalid(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        FeederModel::from_parts(doc.parts)
    }
}

impl From<FeederModel> for FeederDocument {
    fn from(m: FeederModel) -> Self {
        FeederDocument {
            format_version: FORMAT_VERSION,
            parts: m.parts,
        }
    }
}

impl FeederModel {
    pub fn from_parts(mut parts: FeederParts) -> Result<Self, FeederError> {
        parts.source.validate()?;

        let mut codes: BTreeMap<&str, &LineCode> = BTreeMap::new();
        for code in &parts.line_codes {
            code.validate()?;
            if codes.insert(code.name.as_str(), code).is_some() {
                return Err(FeederError::Invalid(format!("duplicate line code {}", code.name)));
            }
        }

        // Buses named only by segments are added after the listed ones.
        let mut index: HashMap<BusId, usize> = HashMap::new();
        for (i, bus) in parts.buses.iter().enumerate() {
            if index.insert(bus.id.clone(), i).is_some() {
                return Err(FeederError::Invalid(format!("duplicate bus {}", bus.id)));
            }
        }
        let mut extra = Vec::new();
        for seg in &parts.segments {
            for id in [&seg.from_bus, &seg.to_bus] {
                if !index.contains_key(id) {
                    index.insert(id.clone(), parts.buses.len() + extra.len());
                    extra.push(Bus {
                        id: id.clone(),
                        x_m: None,
                        y_m: None,
                    });
                }
            }
        }
        parts.buses.extend(extra);

        let mut segment_impedance = Vec::with_capacity(parts.segments.len());
        for seg in &parts.segments {
            if !(seg.length_m.is_finite() && seg.length_m > 0.0) {
                return Err(FeederError::Invalid(format!("segment {} has length {}", seg.name, seg.length_m)));
            }
            if seg.from_bus == seg.to_bus {
                return Err(FeederError::Invalid(format!("segment {} is a self-loop", seg.name)));
            }
            let code = codes.get(seg.line_code.as_str()).ok_or_else(|| {
                FeederError::DanglingReference(format!(
                    "segment {} uses unknown line code '{}'",
                    seg.name, seg.line_code
                ))
            })?;
            segment_impedance.push(phase_impedance(code).scale(seg.length_m / 1000.0));
        }

        let known = |bus: &BusId, what: &str| {
            if index.contains_key(bus) {
                Ok(())
            } else {
                Err(FeederError::DanglingReference(format!("{what} references unknown bus '{bus}'")))
            }
        };
        known(&parts.source.bus, "source")?;
        for load in &parts.loads {
            known(&load.bus, &format!("load {}", load.name))?;
            if !(load.kw.is_finite() && load.kw >= 0.0) {
                return Err(FeederError::Invalid(format!("load {} has kw {}", load.name, load.kw)));
            }
            if !(load.power_factor > 0.0 && load.power_factor <= 1.0) {
                return Err(FeederError::Invalid(format!(
                    "load {} has power factor {}",
                    load.name, load.power_factor
                )));
            }
        }
        for pv in &parts.generators {
            known(&pv.bus, "PV unit")?;
            if !(pv.kw.is_finite() && pv.kw >= 0.0) {
                return Err(FeederError::Invalid(format!("PV unit at {} has kw {}", pv.bus, pv.kw)));
            }
        }

        let topology = build_topology(&parts, index)?;
        Ok(Self {
            parts,
            topology,
            segment_impedance,
        })
    }

    pub fn parts(&self) -> &FeederParts {
        &self.parts
    }

    pub fn into_parts(self) -> FeederParts {
        self.parts
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    pub fn source(&self) -> &SourceSpec {
        &self.parts.source
    }

    pub fn buses(&self) -> &[Bus] {
        &self.parts.buses
    }

    pub fn segments(&self) -> &[LineSegment] {
        &self.parts.segments
    }

    pub fn loads(&self) -> &[LoadPoint] {
        &self.parts.loads
    }

    pub fn generators(&self) -> &[PvUnit] {
        &self.parts.generators
    }

    pub fn line_code(&self, name: &str) -> Option<&LineCode> {
        self.parts.line_codes.iter().find(|c| c.name == name)
    }

    pub fn bus_index(&self, id: &BusId) -> Option<usize> {
        self.topology.index.get(id).copied()
    }

    pub fn bus_id(&self, index: usize) -> &BusId {
        &self.parts.buses[index].id
    }

    pub fn source_index(&self) -> usize {
        self.topology.root
    }

    /// Cumulative conductor length from the source bus.
    pub fn distance_m(&self, id: &BusId) -> Option<f64> {
        self.bus_index(id).map(|i| self.topology.distance_m[i])
    }

    /// Distinct buses that carry at least one load, in id order.
    pub fn load_buses(&self) -> Vec<BusId> {
        let mut ids: Vec<BusId> = self.parts.loads.iter().map(|l| l.bus.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn total_load_kw(&self) -> f64 {
        self.parts.loads.iter().map(|l| l.kw).sum()
    }

    /// Phase impedance of a segment in ohms.
    pub fn segment_impedance(&self, segment: usize) -> &PhaseMatrix {
        &self.segment_impedance[segment]
    }

    pub(crate) fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn from_json(text: &str) -> Result<Self, FeederError> {
        serde_json::from_str(text).map_err(|e| FeederError::Parse {
            file: "<json>".into(),
            line: e.line() as u64,
            column: e.column().to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("feeder serializes")
    }

    pub fn load_json(path: &Path) -> Result<Self, FeederError> {
        let text = std::fs::read_to_string(path).map_err(|source| FeederError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            FeederError::Parse {
                line,
                column,
                message,
                ..
            } => FeederError::Parse {
                file: path.display().to_string(),
                line,
                column,
                message,
            },
            other => other,
        })
    }
}

fn build_topology(parts: &FeederParts, index: HashMap<BusId, usize>) -> Result<Topology, FeederError> {
    let n = parts.buses.len();
    if parts.segments.len() + 1 != n {
        return Err(FeederError::NotRadial(format!(
            "{} segments for {} buses (a tree needs {})",
            parts.segments.len(),
            n,
            n.saturating_sub(1)
        )));
    }
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (s, seg) in parts.segments.iter().enumerate() {
        let (a, b) = (index[&seg.from_bus], index[&seg.to_bus]);
        adjacency[a].push((b, s));
        adjacency[b].push((a, s));
    }
    for list in &mut adjacency {
        list.sort_by(|x, y| parts.buses[x.0].id.cmp(&parts.buses[y.0].id).then(x.1.cmp(&y.1)));
    }

    let root = index[&parts.source.bus];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut children = vec![Vec::new(); n];
    let mut distance_m = vec![0.0; n];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(bus) = queue.pop_front() {
        order.push(bus);
        for &(next, seg) in &adjacency[bus] {
            if parent[bus].map(|(_, s)| s) == Some(seg) {
                continue;
            }
            if seen[next] {
                return Err(FeederError::NotRadial(format!(
                    "cycle closed by segment {}",
                    parts.segments[seg].name
                )));
            }
            seen[next] = true;
            parent[next] = Some((bus, seg));
            children[bus].push(next);
            distance_m[next] = distance_m[bus] + parts.segments[seg].length_m;
            queue.push_back(next);
        }
    }
    if order.len() != n {
        let orphan = (0..n).find(|&i| !seen[i]).expect("some bus unvisited");
        return Err(FeederError::NotRadial(format!(
            "bus {} is not connected to the source",
            parts.buses[orphan].id
        )));
    }
    Ok(Topology {
        index,
        parent,
        order,
        children,
        distance_m,
        root,
    })
}

/// Path from the source to the electrically farthest bus (largest
/// cumulative length; ties go to the lowest bus id).
pub fn main_line(model: &FeederModel) -> Vec<BusId> {
    let topo = model.topology();
    let far = (0..model.buses().len())
        .max_by(|&a, &b| {
            topo.distance_m[a]
                .total_cmp(&topo.distance_m[b])
                .then_with(|| model.bus_id(b).cmp(model.bus_id(a)))
        })
        .expect("feeder has at least one bus");
    let mut path = vec![far];
    while let Some((p, _)) = topo.parent[*path.last().unwrap()] {
        path.push(p);
    }
    path.reverse();
    path.into_iter().map(|i| model.bus_id(i).clone()).collect()
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn code(name: &str, r1: f64, x1: f64, r0: f64, x0: f64) -> LineCode {
        LineCode {
            name: name.into(),
            r1_ohm_per_km: r1,
            x1_ohm_per_km: x1,
            r0_ohm_per_km: r0,
            x0_ohm_per_km: x0,
            c1_nf_per_km: 0.0,
            c0_nf_per_km: 0.0,
        }
    }

    pub fn seg(from: &str, to: &str, len: f64) -> LineSegment {
        LineSegment {
            name: format!("L{from}-{to}"),
            from_bus: from.into(),
            to_bus: to.into(),
            length_m: len,
            line_code: "c".into(),
        }
    }

    pub fn parts(segments: Vec<LineSegment>) -> FeederParts {
        FeederParts {
            name: "toy".into(),
            source: SourceSpec::default_at("1".into()),
            line_codes: vec![code("c", 0.3, 0.1, 0.9, 0.3)],
            buses: Vec::new(),
            segments,
            loads: Vec::new(),
            generators: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn bus_ids_order_numerically() {
        let mut ids: Vec<BusId> = ["10", "9", "x", "100", "2"].into_iter().map(BusId::from).collect();
        ids.sort();
        let got: Vec<&str> = ids.iter().map(|b| b.as_str()).collect();
        assert_eq!(got, ["2", "9", "10", "100", "x"]);
    }

    #[test]
    fn phase_impedance_examples() {
        let z = phase_impedance(&code("eq", 0.2, 0.3, 0.2, 0.3));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { Complex64::new(0.2, 0.3) } else { Complex64::new(0.0, 0.0) };
                assert!((z.0[i][j] - expect).norm() < 1e-15);
            }
        }

        let z = phase_impedance(&code("x", 0.1, 0.1, 0.3, 0.3));
        let diag = Complex64::new(0.5 / 3.0, 0.5 / 3.0);
        let off = Complex64::new(0.2 / 3.0, 0.2 / 3.0);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { diag } else { off };
                assert!((z.0[i][j] - expect).norm() < 1e-15);
            }
        }
        assert!((diag.re - 0.1667).abs() < 1e-4 && (off.re - 0.0667).abs() < 1e-4);
    }

    #[test]
    fn sequence_values_recovered_by_similarity_transform() {
        let lc = code("x", 0.446, 0.071, 1.505, 0.083);
        let seq = PhaseMatrix::fortescue_inverse() * phase_impedance(&lc) * PhaseMatrix::fortescue();
        let expect = [lc.z0(), lc.z1(), lc.z1()];
        for (i, want) in expect.iter().enumerate() {
            for j in 0..3 {
                let e = if i == j { *want } else { Complex64::new(0.0, 0.0) };
                assert!((seq.0[i][j] - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn builds_topology_and_distances() {
        let m = FeederModel::from_parts(parts(vec![seg("1", "2", 10.0), seg("3", "2", 5.0), seg("2", "4", 7.0)])).unwrap();
        assert_eq!(m.buses().len(), 4);
        assert_eq!(m.distance_m(&"3".into()), Some(15.0));
        assert_eq!(m.distance_m(&"4".into()), Some(17.0));
        assert_eq!(main_line(&m), vec![BusId::from("1"), "2".into(), "4".into()]);
    }

    #[test]
    fn duplicated_segment_is_not_radial() {
        let err = FeederModel::from_parts(parts(vec![seg("1", "2", 10.0), seg("1", "2", 10.0)])).unwrap_err();
        assert!(matches!(err, FeederError::NotRadial(_)), "{err}");
    }

    #[test]
    fn disconnected_network_is_not_radial() {
        let mut p = parts(vec![seg("1", "2", 10.0), seg("3", "4", 10.0), seg("4", "5", 1.0)]);
        p.buses.push(Bus { id: "6".into(), x_m: None, y_m: None });
        let err = FeederModel::from_parts(p).unwrap_err();
        assert!(matches!(err, FeederError::NotRadial(_)), "{err}");
    }

    #[test]
    fn dangling_references_are_rejected() {
        let mut p = parts(vec![seg("1", "2", 10.0)]);
        p.loads.push(LoadPoint {
            name: "L".into(),
            bus: "X999".into(),
            phase: Phase::A,
            kw: 1.0,
            power_factor: 0.95,
        });
        assert!(matches!(FeederModel::from_parts(p).unwrap_err(), FeederError::DanglingReference(_)));

        let mut p = parts(vec![seg("1", "2", 10.0)]);
        p.segments[0].line_code = "nope".into();
        assert!(matches!(FeederModel::from_parts(p).unwrap_err(), FeederError::DanglingReference(_)));
    }

    #[test]
    fn main_line_of_two_buses_and_tie_break() {
        let m = FeederModel::from_parts(parts(vec![seg("1", "2", 3.0)])).unwrap();
        assert_eq!(main_line(&m).len(), 2);

        let star = FeederModel::from_parts(parts(vec![seg("1", "7", 4.0), seg("1", "5", 4.0), seg("1", "6", 4.0)])).unwrap();
        assert_eq!(main_line(&star), vec![BusId::from("1"), "5".into()]);
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = parts(vec![seg("1", "2", 0.0)]);
        assert!(FeederModel::from_parts(p.clone()).is_err());
        p.segments[0].length_m = 1.0;
        p.source.voltage_pu = [1.2, 1.0, 1.0];
        assert!(FeederModel::from_parts(p.clone()).is_err());
        p.source.voltage_pu = [1.0; 3];
        p.line_codes[0].r1_ohm_per_km = 0.0;
        p.line_codes[0].x1_ohm_per_km = 0.0;
        assert!(FeederModel::from_parts(p).is_err());
    }

    #[test]
    fn load_kvar_follows_power_factor() {
        let l = LoadPoint {
            name: "L".into(),
            bus: "1".into(),
            phase: Phase::B,
            kw: 3.0,
            power_factor: 0.95,
        };
        assert!((l.kvar() - 3.0 * (1.0f64 - 0.9025).sqrt() / 0.95).abs() < 1e-12);
        assert_eq!(LoadPoint { power_factor: 1.0, ..l }.kvar(), 0.0);
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let m = FeederModel::from_parts(parts(vec![seg("1", "2", 10.0), seg("2", "3", 4.0)])).unwrap();
        let text = m.to_json();
        assert!(text.contains("\"length_m\"") && text.contains("\"r1_ohm_per_km\""));
        let back = FeederModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(FeederModel::from_json(&bumped).is_err());
    }
}
