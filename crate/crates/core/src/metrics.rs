//! Symmetrical components and the five voltage-unbalance indices.
//!
//! Every index returns a [`MetricDetail`] carrying the intermediate values
//! that produced it, so reports can show averages, deviations and the CIGRE
//! `beta` next to the percentage.
//!
//! VUF is defined on phase-to-neutral phasors here. Because line voltages
//! are obtained by a linear map that scales the positive and negative
//! sequences by the same factor (√3) and removes the zero sequence, the ratio
//! is identical when computed from line phasors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::phasor::{rotation, LineVoltageTriple, PhasorTriple, SequenceSet};

/// Radicand values in `[-CIGRE_CLAMP, 0)` are treated as rounding noise.
pub const CIGRE_CLAMP: f64 = 1e-12;

/// Relative threshold below which the positive sequence is considered zero.
pub const POSITIVE_SEQUENCE_FLOOR: f64 = 1e-12;

/// Absolute threshold below which all line magnitudes count as zero.
pub const DEGENERATE_LINE_FLOOR: f64 = 1e-12;

/// Index values (percent) below this are rounding noise of a balanced set
/// and are reported as exactly zero.
pub const NOISE_FLOOR_PERCENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Vuf,
    Lvur,
    Cigre,
    Pvur1,
    Pvur2,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Vuf,
        Metric::Lvur,
        Metric::Cigre,
        Metric::Pvur1,
        Metric::Pvur2,
    ];

    /// The four indices compared against VUF.
    pub const RELATIVE: [Metric; 4] = [Metric::Lvur, Metric::Cigre, Metric::Pvur1, Metric::Pvur2];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Vuf => "VUF",
            Metric::Lvur => "LVUR",
            Metric::Cigre => "CIGRE",
            Metric::Pvur1 => "PVUR1",
            Metric::Pvur2 => "PVUR2",
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Metric::Vuf => "vuf",
            Metric::Lvur => "lvur",
            Metric::Cigre => "cigre",
            Metric::Pvur1 => "pvur1",
            Metric::Pvur2 => "pvur2",
        }
    }

    /// Evaluates this index on a phasor triple.
    pub fn evaluate(&self, v: &PhasorTriple) -> Result<MetricDetail, MetricError> {
        match self {
            Metric::Vuf => vuf(v),
            Metric::Lvur => lvur(&line_voltages(v)?),
            Metric::Cigre => cigre_factor(&line_voltages(v)?),
            Metric::Pvur1 => Ok(pvur1(v)),
            Metric::Pvur2 => Ok(pvur2(v)),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vuf" => Ok(Metric::Vuf),
            "lvur" => Ok(Metric::Lvur),
            "cigre" => Ok(Metric::Cigre),
            "pvur1" => Ok(Metric::Pvur1),
            "pvur2" => Ok(Metric::Pvur2),
            other => Err(MetricError::InvalidInput(format!("unknown index '{other}'"))),
        }
    }
}

/// An index value (percent) plus the named quantities it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDetail {
    pub metric: Metric,
    pub value: f64,
    pub intermediates: BTreeMap<String, f64>,
}

impl MetricDetail {
    fn new(metric: Metric, value: f64, intermediates: &[(&str, f64)]) -> Self {
        Self {
            metric,
            value: if value.abs() < NOISE_FLOOR_PERCENT { 0.0 } else { value },
            intermediates: intermediates
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    pub fn intermediate(&self, name: &str) -> Option<f64> {
        self.intermediates.get(name).copied()
    }

    /// Re-evaluates the defining formula from the stored intermediates.
    pub fn recompute(&self) -> Option<f64> {
        let get = |k: &str| self.intermediate(k);
        Some(match self.metric {
            Metric::Vuf => 100.0 * get("negative_magnitude")? / get("positive_magnitude")?,
            Metric::Lvur => 100.0 * get("max_deviation")? / get("average_line_voltage")?,
            Metric::Cigre => cigre_value(get("radicand")?, get("radicand_deficit")?),
            Metric::Pvur1 => 100.0 * get("max_deviation")? / get("average_phase_voltage")?,
            Metric::Pvur2 => {
                100.0 * (get("v_max")? - get("v_min")?) / get("average_phase_voltage")?
            }
        })
    }
}

/// Fortescue decomposition: zero, positive and negative sequence phasors.
pub fn symmetrical_components(v: &PhasorTriple) -> SequenceSet {
    let [va, vb, vc] = v.complex();
    let a = rotation();
    let a2 = a * a;
    SequenceSet {
        zero: (va + vb + vc) / 3.0,
        positive: (va + a * vb + a2 * vc) / 3.0,
        negative: (va + a2 * vb + a * vc) / 3.0,
    }
}

/// Voltage unbalance factor, `100 |V2| / |V1|`.
pub fn vuf(v: &PhasorTriple) -> Result<MetricDetail, MetricError> {
    let seq = symmetrical_components(v);
    let pos = seq.positive.norm();
    let neg = seq.negative.norm();
    if pos < POSITIVE_SEQUENCE_FLOOR * v.max_magnitude() {
        return Err(MetricError::PositiveSequenceZero);
    }
    Ok(MetricDetail::new(
        Metric::Vuf,
        100.0 * neg / pos,
        &[("positive_magnitude", pos), ("negative_magnitude", neg)],
    ))
}

pub fn line_voltages(v: &PhasorTriple) -> Result<LineVoltageTriple, MetricError> {
    let [va, vb, vc] = v.complex();
    let ab = (va - vb).norm();
    let bc = (vb - vc).norm();
    let ca = (vc - va).norm();
    if ab < DEGENERATE_LINE_FLOOR && bc < DEGENERATE_LINE_FLOOR && ca < DEGENERATE_LINE_FLOOR {
        return Err(MetricError::DegenerateTriple);
    }
    LineVoltageTriple::new(ab, bc, ca)
}

fn mean3(x: [f64; 3]) -> f64 {
    (x[0] + x[1] + x[2]) / 3.0
}

fn max_deviation(x: [f64; 3], avg: f64) -> f64 {
    x.iter().map(|v| (v - avg).abs()).fold(0.0, f64::max)
}

/// NEMA line voltage unbalance ratio.
pub fn lvur(lv: &LineVoltageTriple) -> Result<MetricDetail, MetricError> {
    let x = lv.as_array();
    let avg = mean3(x);
    let dev = max_deviation(x, avg);
    Ok(MetricDetail::new(
        Metric::Lvur,
        100.0 * dev / avg,
        &[("average_line_voltage", avg), ("max_deviation", dev)],
    ))
}

fn cigre_value(radicand: f64, deficit: f64) -> f64 {
    // (1 - sqrt(r)) / (1 + sqrt(r)) with 1 - sqrt(r) = (1 - r) / (1 + sqrt(r))
    let s = radicand.sqrt();
    100.0 * (deficit / ((1.0 + s) * (1.0 + s))).sqrt()
}

/// CIGRE unbalance factor from line-voltage magnitudes.
///
/// `1 - (3 - 6 beta)` is evaluated as `2 Σ (x_i² - x_j²)² / (Σ x²)²`, which
/// avoids the cancellation of the textbook form when the set is nearly
/// balanced.
pub fn cigre_factor(lv: &LineVoltageTriple) -> Result<MetricDetail, MetricError> {
    let [x, y, z] = lv.as_array().map(|v| v * v);
    let sum_sq = x + y + z;
    let sum_4 = x * x + y * y + z * z;
    let beta = sum_4 / (sum_sq * sum_sq);
    let spread = (x - y).powi(2) + (y - z).powi(2) + (z - x).powi(2);
    let deficit = 2.0 * spread / (sum_sq * sum_sq);
    let raw = 1.0 - deficit;
    if raw < -CIGRE_CLAMP {
        return Err(MetricError::NotRealizable { radicand: raw });
    }
    let (radicand, deficit) = if raw < 0.0 { (0.0, 1.0) } else { (raw, deficit) };
    Ok(MetricDetail::new(
        Metric::Cigre,
        cigre_value(radicand, deficit),
        &[
            ("beta", beta),
            ("radicand", radicand),
            ("radicand_deficit", deficit),
        ],
    ))
}

/// IEEE phase voltage unbalance ratio, maximum deviation form.
pub fn pvur1(v: &PhasorTriple) -> MetricDetail {
    let m = v.magnitudes();
    let avg = mean3(m);
    let dev = max_deviation(m, avg);
    MetricDetail::new(
        Metric::Pvur1,
        100.0 * dev / avg,
        &[("average_phase_voltage", avg), ("max_deviation", dev)],
    )
}

/// IEEE phase voltage unbalance ratio, max-minus-min form.
pub fn pvur2(v: &PhasorTriple) -> MetricDetail {
    let m = v.magnitudes();
    let avg = mean3(m);
    let hi = m.iter().copied().fold(f64::MIN, f64::max);
    let lo = m.iter().copied().fold(f64::MAX, f64::min);
    MetricDetail::new(
        Metric::Pvur2,
        100.0 * (hi - lo) / avg,
        &[("average_phase_voltage", avg), ("v_max", hi), ("v_min", lo)],
    )
}

/// Absolute error of an index against VUF, in percentage points.
pub fn absolute_error(index_value: f64, vuf_value: f64) -> f64 {
    (index_value - vuf_value).abs()
}

/// All five indices for one triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    pub vuf: MetricDetail,
    pub lvur: MetricDetail,
    pub cigre: MetricDetail,
    pub pvur1: MetricDetail,
    pub pvur2: MetricDetail,
}

impl IndexSet {
    pub fn compute(v: &PhasorTriple) -> Result<Self, MetricError> {
        let lv = line_voltages(v)?;
        Ok(Self {
            vuf: vuf(v)?,
            lvur: lvur(&lv)?,
            cigre: cigre_factor(&lv)?,
            pvur1: pvur1(v),
            pvur2: pvur2(v),
        })
    }

    pub fn get(&self, metric: Metric) -> &MetricDetail {
        match metric {
            Metric::Vuf => &self.vuf,
            Metric::Lvur => &self.lvur,
            Metric::Cigre => &self.cigre,
            Metric::Pvur1 => &self.pvur1,
            Metric::Pvur2 => &self.pvur2,
        }
    }

    pub fn value(&self, metric: Metric) -> f64 {
        self.get(metric).value
    }
}
