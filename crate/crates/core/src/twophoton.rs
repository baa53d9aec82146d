//! Quadrature algebra for Gaussian noise at a single sideband frequency.
//!
//! Noise is carried as a 2x2 Hermitian spectral covariance in the
//! (amplitude, phase) quadrature basis, normalized so that the vacuum state
//! is the identity. Optical elements act through a [`QuadratureTransfer`]:
//! `S -> T S T^dagger + N`, where `N` is the vacuum noise admitted by loss.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_fraction, Error, Result};

pub type Mat2 = Matrix2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sideband-to-quadrature basis change `(1/sqrt 2) [[1, 1], [-i, i]]`.
pub fn basis_change() -> Mat2 {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let i = Complex64::new(0.0, FRAC_1_SQRT_2);
    Mat2::new(s, s, -i, i)
}

fn diag(a: Complex64, b: Complex64) -> Mat2 {
    Mat2::new(a, ZERO, ZERO, b)
}

/// Builds the quadrature transfer matrix of an element that multiplies the
/// upper sideband by `r_plus` and the lower sideband by `r_minus`.
///
/// Equal responses `r_plus = r_minus = e^{ia}` rotate the quadratures by `a`;
/// conjugate responses `r_plus = conj(r_minus)` only add a global phase.
pub fn sideband_to_quadrature(r_plus: Complex64, r_minus: Complex64) -> Mat2 {
    let a = basis_change();
    a * diag(r_plus, r_minus.conj()) * a.adjoint()
}

/// Quadrature-basis form of a sideband-diagonal Hermitian matrix.
pub(crate) fn sideband_diagonal(upper: f64, lower: f64) -> Mat2 {
    let a = basis_change();
    a * diag(upper.into(), lower.into()) * a.adjoint()
}

/// Noise spectral covariance of the two field quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCovariance {
    pub s11: f64,
    pub s22: f64,
    pub s12: Complex64,
}

impl SpectralCovariance {
    pub fn vacuum() -> Self {
        Self::diagonal(1.0, 1.0)
    }

    pub fn diagonal(amplitude: f64, phase: f64) -> Self {
        Self {
            s11: amplitude,
            s22: phase,
            s12: ZERO,
        }
    }

    /// Takes the Hermitian part of `m`.
    pub fn from_matrix(m: &Mat2) -> Self {
        Self {
            s11: m[(0, 0)].re,
            s22: m[(1, 1)].re,
            s12: (m[(0, 1)] + m[(1, 0)].conj()) * 0.5,
        }
    }

    pub fn to_matrix(&self) -> Mat2 {
        Mat2::new(self.s11.into(), self.s12, self.s12.conj(), self.s22.into())
    }

    pub fn trace(&self) -> f64 {
        self.s11 + self.s22
    }

    pub fn determinant(&self) -> f64 {
        self.s11 * self.s22 - self.s12.norm_sqr()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * self.trace();
        let half_gap = (0.25 * (self.s11 - self.s22).powi(2) + self.s12.norm_sqr()).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    /// Positive semidefinite and at or above the vacuum uncertainty bound.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.eigenvalues()[0] >= -tol && self.determinant() >= 1.0 - tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.s11 - other.s11)
            .abs()
            .max((self.s22 - other.s22).abs())
            .max((self.s12 - other.s12).norm())
    }
}

/// Linear map of quadrature fluctuations across one element, together with
/// the vacuum noise it lets in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureTransfer {
    pub matrix: Mat2,
    pub vacuum_admixture: Mat2,
}

impl QuadratureTransfer {
    pub fn identity() -> Self {
        Self {
            matrix: Mat2::identity(),
            vacuum_admixture: Mat2::zeros(),
        }
    }

    /// Power transmission `eta` applied equally to both quadratures.
    pub fn scalar_loss(eta: f64) -> Result<Self> {
        let eta = ensure_fraction("eta", eta)?;
        Ok(Self {
            matrix: Mat2::identity() * Complex64::new(eta.sqrt(), 0.0),
            vacuum_admixture: Mat2::identity() * Complex64::new(1.0 - eta, 0.0),
        })
    }

    /// Transfer of an element with upper/lower sideband amplitude responses
    /// `r_plus`/`r_minus`; whatever power is not passed is replaced by vacuum.
    pub fn from_sidebands(r_plus: Complex64, r_minus: Complex64) -> Self {
        Self {
            matrix: sideband_to_quadrature(r_plus, r_minus),
            vacuum_admixture: sideband_diagonal(1.0 - r_plus.norm_sqr(), 1.0 - r_minus.norm_sqr()),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            matrix: next.matrix * self.matrix,
            vacuum_admixture: next.matrix * self.vacuum_admixture * next.matrix.adjoint()
                + next.vacuum_admixture,
        }
    }

    /// Largest entry of `T T^dagger + N - I`; zero for a passive element.
    pub fn passivity_residual(&self) -> f64 {
        let r = self.matrix * self.matrix.adjoint() + self.vacuum_admixture - Mat2::identity();
        r.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, phase: Complex64) -> Self {
        Self {
            matrix: self.matrix * phase,
            vacuum_admixture: self.vacuum_admixture,
        }
    }
}

pub fn apply_transfer(s: &SpectralCovariance, x: &QuadratureTransfer) -> SpectralCovariance {
    let out = x.matrix * s.to_matrix() * x.matrix.adjoint() + x.vacuum_admixture;
    SpectralCovariance::from_matrix(&out)
}

/// Mixes `s` with vacuum: `eta * S + (1 - eta) * I`.
pub fn apply_scalar_loss(s: &SpectralCovariance, eta: f64) -> Result<SpectralCovariance> {
    let eta = ensure_fraction("eta", eta)?;
    Ok(SpectralCovariance {
        s11: eta * s.s11 + (1.0 - eta),
        s22: eta * s.s22 + (1.0 - eta),
        s12: s.s12 * eta,
    })
}

/// Balanced homodyne readout at a quadrature angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSpec {
    /// Radians; 0 reads the amplitude quadrature.
    pub angle: f64,
    pub quantum_efficiency: f64,
}

impl HomodyneSpec {
    pub fn new(angle: f64, quantum_efficiency: f64) -> Result<Self> {
        ensure_fraction("quantum_efficiency", quantum_efficiency)?;
        Ok(Self {
            angle,
            quantum_efficiency,
        })
    }

    pub fn amplitude() -> Self {
        Self {
            angle: 0.0,
            quantum_efficiency: 1.0,
        }
    }
}

/// Detected noise power relative to shot noise.
pub fn homodyne_noise(s: &SpectralCovariance, h: &HomodyneSpec) -> f64 {
    let eta = h.quantum_efficiency.clamp(0.0, 1.0);
    let (sin, cos) = h.angle.sin_cos();
    let projected = s.s11 * cos * cos + s.s22 * sin * sin + 2.0 * s.s12.re * sin * cos;
    (eta * projected + (1.0 - eta)).max(0.0)
}

pub fn to_decibel(ratio: f64) -> Result<f64> {
    if ratio > 0.0 && ratio.is_finite() {
        Ok(10.0 * ratio.log10())
    } else {
        Err(Error::Domain {
            quantity: "power ratio",
            value: ratio,
            expected: "finite and > 0",
        })
    }
}

pub fn from_decibel(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
