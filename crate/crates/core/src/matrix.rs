//! 3×3 complex matrices for phase-domain impedances.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::phasor::rotation;

pub type Phase3 = [Complex64; 3];

pub const ZERO3: Phase3 = [Complex64::new(0.0, 0.0); 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseMatrix(pub [[Complex64; 3]; 3]);

impl Default for PhaseMatrix {
    fn default() -> Self {
        Self::zero()
    }
}

impl PhaseMatrix {
    pub fn zero() -> Self {
        Self([ZERO3; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Phase-domain matrix of a transposed three-phase element with the
    /// given positive- and zero-sequence impedances.
    pub fn from_sequence(z1: Complex64, z0: Complex64) -> Self {
        let self_z = (z0 + 2.0 * z1) / 3.0;
        let mutual = (z0 - z1) / 3.0;
        let mut m = Self([[mutual; 3]; 3]);
        for i in 0..3 {
            m.0[i][i] = self_z;
        }
        m
    }

    /// Fortescue matrix `A` with columns (zero, positive, negative).
    pub fn fortescue() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let a = rotation();
        let a2 = a * a;
        Self([[one, one, one], [one, a2, a], [one, a, a2]])
    }

    pub fn fortescue_inverse() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let a = rotation();
        let a2 = a * a;
        Self([[one, one, one], [one, a, a2], [one, a2, a]]).scale(1.0 / 3.0)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self(self.0.map(|row| row.map(|z| z * k)))
    }

    pub fn mul_vec(&self, v: &Phase3) -> Phase3 {
        let mut out = ZERO3;
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactors; `None` when singular relative to its scale.
    pub fn inverse(&self) -> Option<Self> {
        let m = &self.0;
        let det = self.determinant();
        let scale = self.max_norm();
        if scale == 0.0 || det.norm() <= 1e-14 * scale.powi(3) {
            return None;
        }
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let cof = [
            [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
            [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
            [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
        ];
        Some(Self(cof).transpose().map(|z| z / det))
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self(self.0.map(|row| row.map(&f)))
    }

    pub fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_norm() == 0.0
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (self.0[i][j] - self.0[j][i]).norm() <= tol))
    }
}

impl Mul for PhaseMatrix {
    type Output = PhaseMatrix;

    fn mul(self, rhs: PhaseMatrix) -> PhaseMatrix {
        let mut out = PhaseMatrix::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl Add for PhaseMatrix {
    type Output = PhaseMatrix;

    fn add(self, rhs: PhaseMatrix) -> PhaseMatrix {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for PhaseMatrix {
    type Output = PhaseMatrix;

    fn sub(self, rhs: PhaseMatrix) -> PhaseMatrix {
        self + rhs.scale(-1.0)
    }
}

pub fn sub3(a: &Phase3, b: &Phase3) -> Phase3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add3(a: &Phase3, b: &Phase3) -> Phase3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
