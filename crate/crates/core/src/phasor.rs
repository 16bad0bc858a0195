//! Phasor value types shared by every unbalance index.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// Rotation operator `a = e^{j120°}`.
pub fn rotation() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(360.0);
    if wrapped > 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// A single fundamental-frequency phasor in polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPhasor")]
pub struct Phasor {
    magnitude: f64,
    angle_deg: f64,
}

#[derive(Deserialize)]
struct RawPhasor {
    magnitude: f64,
    angle_deg: f64,
}

impl TryFrom<RawPhasor> for Phasor {
    type Error = MetricError;

    fn try_from(raw: RawPhasor) -> Result<Self, Self::Error> {
        Phasor::new(raw.magnitude, raw.angle_deg)
    }
}

impl Phasor {
    pub fn new(magnitude: f64, angle_deg: f64) -> Result<Self, MetricError> {
        if !magnitude.is_finite() || !angle_deg.is_finite() {
            return Err(MetricError::InvalidInput(format!(
                "non-finite phasor {magnitude}∠{angle_deg}°"
            )));
        }
        if magnitude < 0.0 {
            return Err(MetricError::InvalidInput(format!(
                "negative magnitude {magnitude}"
            )));
        }
        Ok(Self {
            magnitude,
            angle_deg: normalize_degrees(angle_deg),
        })
    }

    pub fn from_complex(value: Complex64) -> Result<Self, MetricError> {
        Self::new(value.norm(), value.arg().to_degrees())
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.angle_deg.to_radians())
    }
}

impl fmt::Display for Phasor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}∠{}°", self.magnitude, self.angle_deg)
    }
}

/// Phase-to-neutral voltages of phases a, b and c.
///
/// Stored in rectangular form; the polar view is derived on demand so that
/// triples built from solver output are used exactly as computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTriple", into = "RawTriple")]
pub struct PhasorTriple {
    complex: [Complex64; 3],
}

#[derive(Serialize, Deserialize)]
struct RawTriple {
    a: Phasor,
    b: Phasor,
    c: Phasor,
}

impl TryFrom<RawTriple> for PhasorTriple {
    type Error = MetricError;

    fn try_from(raw: RawTriple) -> Result<Self, Self::Error> {
        PhasorTriple::new(raw.a, raw.b, raw.c)
    }
}

impl From<PhasorTriple> for RawTriple {
    fn from(t: PhasorTriple) -> Self {
        let [a, b, c] = t.phasors();
        RawTriple { a, b, c }
    }
}

impl PhasorTriple {
    pub fn new(a: Phasor, b: Phasor, c: Phasor) -> Result<Self, MetricError> {
        Self::from_complex([a.to_complex(), b.to_complex(), c.to_complex()])
    }

    /// Builds a triple from magnitudes and angles (degrees).
    pub fn from_polar(magnitudes: [f64; 3], angles_deg: [f64; 3]) -> Result<Self, MetricError> {
        Self::new(
            Phasor::new(magnitudes[0], angles_deg[0])?,
            Phasor::new(magnitudes[1], angles_deg[1])?,
            Phasor::new(magnitudes[2], angles_deg[2])?,
        )
    }

    pub fn from_complex(values: [Complex64; 3]) -> Result<Self, MetricError> {
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(MetricError::InvalidInput(format!(
                "non-finite phasor in {values:?}"
            )));
        }
        if values.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
            return Err(MetricError::AllZero);
        }
        Ok(Self { complex: values })
    }

    /// Balanced positive-sequence set with phase a at 0°.
    pub fn balanced(magnitude: f64) -> Result<Self, MetricError> {
        Self::from_polar([magnitude; 3], [0.0, -120.0, 120.0])
    }

    pub fn a(&self) -> Phasor {
        self.phasors()[0]
    }

    pub fn b(&self) -> Phasor {
        self.phasors()[1]
    }

    pub fn c(&self) -> Phasor {
        self.phasors()[2]
    }

    pub fn phasors(&self) -> [Phasor; 3] {
        self.complex
            .map(|v| Phasor::from_complex(v).expect("finite by construction"))
    }

    pub fn complex(&self) -> [Complex64; 3] {
        self.complex
    }

    pub fn magnitudes(&self) -> [f64; 3] {
        self.complex.map(|v| v.norm())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    /// Applies the same map to every phasor (rotation, scaling, offset).
    pub fn map_complex(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self, MetricError> {
        Self::from_complex(self.complex.map(f))
    }
}

/// Line-to-line voltage magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineVoltageTriple {
    pub ab: f64,
    pub bc: f64,
    pub ca: f64,
}

impl LineVoltageTriple {
    pub fn new(ab: f64, bc: f64, ca: f64) -> Result<Self, MetricError> {
        let all = [ab, bc, ca];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(MetricError::InvalidInput(format!(
                "line magnitudes must be finite and non-negative, got ({ab}, {bc}, {ca})"
            )));
        }
        if all.iter().all(|v| *v == 0.0) {
            return Err(MetricError::AllZero);
        }
        Ok(Self { ab, bc, ca })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.ab, self.bc, self.ca]
    }
}

/// Fortescue components of a phasor triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceSet {
    pub zero: Complex64,
    pub positive: Complex64,
    pub negative: Complex64,
}

impl SequenceSet {
    /// Inverse transform back to phase quantities.
    pub fn to_phases(&self) -> [Complex64; 3] {
        let a = rotation();
        let a2 = a * a;
        [
            self.zero + self.positive + self.negative,
            self.zero + a2 * self.positive + a * self.negative,
            self.zero + a * self.positive + a2 * self.negative,
        ]
    }
}
