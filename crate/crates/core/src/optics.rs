//! Component models: two-mirror cavities, the below-threshold parametric
//! amplifier, and scalar loss elements.
//!
//! All frequencies are in Hz and measured from the carrier. A cavity's
//! `detuning` is the carrier offset of its nearest resonance, so the
//! upper sideband at `+detuning` is resonant.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_fraction, ensure_positive, Error, Result};
use crate::twophoton::{QuadratureTransfer, SpectralCovariance};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Linear two-mirror cavity seen from its coupling mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// Meters.
    pub length: f64,
    /// Power reflectivity of the coupling mirror.
    pub r_in: f64,
    /// Power reflectivity of the end mirror.
    pub r_end: f64,
    /// Fraction of circulating power lost per round trip, apart from the mirrors.
    pub round_trip_loss: f64,
    /// Hz, signed.
    pub detuning: f64,
}

impl CavitySpec {
    pub fn new(length: f64, r_in: f64, r_end: f64, round_trip_loss: f64, detuning: f64) -> Result<Self> {
        let spec = Self {
            length,
            r_in,
            r_end,
            round_trip_loss,
            detuning,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("length", self.length)?;
        ensure_fraction("r_in", self.r_in)?;
        ensure_fraction("r_end", self.r_end)?;
        ensure_fraction("round_trip_loss", self.round_trip_loss)?;
        if !self.detuning.is_finite() {
            return Err(Error::Domain {
                quantity: "detuning",
                value: self.detuning,
                expected: "finite",
            });
        }
        Ok(())
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        Self { detuning, ..self }
    }

    fn coupler_amplitude(&self) -> f64 {
        self.r_in.sqrt()
    }

    /// Amplitude reflectivity of the end mirror including the round-trip loss.
    fn return_amplitude(&self) -> f64 {
        (self.r_end * (1.0 - self.round_trip_loss)).sqrt()
    }

    /// Round-trip phase for a field at `omega`.
    fn round_trip_phase(&self, omega: f64) -> f64 {
        4.0 * PI * self.length * (omega - self.detuning) / SPEED_OF_LIGHT
    }
}

/// Free spectral range `c / 2L` of a linear cavity.
pub fn cavity_fsr(length: f64) -> Result<f64> {
    Ok(SPEED_OF_LIGHT / (2.0 * ensure_positive("length", length)?))
}

/// Detuning produced by locking a cavity to a sideband at `lock_frequency`:
/// the residue of the lock frequency modulo the FSR, in `(-fsr/2, fsr/2]`.
pub fn detuning_from_sideband_lock(fsr: f64, lock_frequency: f64) -> Result<f64> {
    let fsr = ensure_positive("fsr", fsr)?;
    let residue = lock_frequency.rem_euclid(fsr);
    Ok(if residue > 0.5 * fsr { residue - fsr } else { residue })
}

pub fn cavity_finesse(spec: &CavitySpec) -> Result<f64> {
    let rho = spec.coupler_amplitude() * spec.return_amplitude();
    if rho >= 1.0 || rho.is_nan() {
        return Err(Error::Domain {
            quantity: "round-trip amplitude gain",
            value: rho,
            expected: "< 1",
        });
    }
    Ok(PI * rho.sqrt() / (1.0 - rho))
}

/// Full width at half maximum of the transmission resonance, in Hz.
pub fn cavity_linewidth(spec: &CavitySpec) -> Result<f64> {
    Ok(cavity_fsr(spec.length)? / cavity_finesse(spec)?)
}

/// Amplitude reflectivity at the coupling mirror. The promptly reflected
/// part carries `-r1`.
pub fn cavity_reflection(spec: &CavitySpec, omega: f64) -> Complex64 {
    let r1 = spec.coupler_amplitude();
    let r2 = spec.return_amplitude();
    let round_trip = Complex64::from_polar(1.0, spec.round_trip_phase(omega));
    (r2 * round_trip - r1) / (1.0 - r1 * r2 * round_trip)
}

/// Amplitude transmission through both mirrors.
pub fn cavity_transmission(spec: &CavitySpec, omega: f64) -> Complex64 {
    let r1 = spec.coupler_amplitude();
    let r2 = spec.return_amplitude();
    let t1 = (1.0 - spec.r_in).sqrt();
    let t2 = (1.0 - spec.r_end).sqrt();
    let phi = spec.round_trip_phase(omega);
    t1 * t2 * Complex64::from_polar(1.0, 0.5 * phi) / (1.0 - r1 * r2 * Complex64::from_polar(1.0, phi))
}

/// Quadrature transfer of the field reflected off the cavity at sideband
/// frequency `omega`.
pub fn cavity_quadrature_transfer(spec: &CavitySpec, omega: f64) -> QuadratureTransfer {
    QuadratureTransfer::from_sidebands(cavity_reflection(spec, omega), cavity_reflection(spec, -omega))
}

/// Angle by which reflection rotates the quadratures, folded into
/// `(-pi/2, pi/2]` since a rotation by pi leaves every covariance unchanged.
pub fn cavity_rotation_angle(spec: &CavitySpec, omega: f64) -> f64 {
    let half_sum = 0.5 * (cavity_reflection(spec, omega).arg() + cavity_reflection(spec, -omega).arg());
    let folded = half_sum.rem_euclid(PI);
    if folded > 0.5 * PI {
        folded - PI
    } else {
        folded
    }
}

/// Below-threshold degenerate parametric amplifier locked to deamplification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpaSpec {
    /// Pump amplitude normalized to threshold.
    pub pump_x: f64,
    /// Cavity half width at half maximum, Hz.
    pub bandwidth: f64,
    pub escape_efficiency: f64,
}

impl OpaSpec {
    pub fn new(pump_x: f64, bandwidth: f64, escape_efficiency: f64) -> Result<Self> {
        let spec = Self {
            pump_x,
            bandwidth,
            escape_efficiency,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.pump_x) {
            return Err(Error::Domain {
                quantity: "pump_x",
                value: self.pump_x,
                expected: "0 <= x < 1 (below threshold)",
            });
        }
        ensure_positive("bandwidth", self.bandwidth)?;
        ensure_fraction("escape_efficiency", self.escape_efficiency)?;
        Ok(())
    }

    pub fn with_pump(self, pump_x: f64) -> Self {
        Self { pump_x, ..self }
    }
}

/// Output noise of the OPA: amplitude quadrature squeezed, phase
/// quadrature anti-squeezed, both Lorentzian in `omega / bandwidth`.
pub fn opa_output_covariance(spec: &OpaSpec, omega: f64) -> Result<SpectralCovariance> {
    spec.validate()?;
    let x = spec.pump_x;
    let w2 = (omega / spec.bandwidth).powi(2);
    let gain = spec.escape_efficiency * 4.0 * x;
    Ok(SpectralCovariance::diagonal(
        1.0 - gain / ((1.0 + x).powi(2) + w2),
        1.0 + gain / ((1.0 - x).powi(2) + w2),
    ))
}

/// Scalar power transmission such as an isolator or a mode-matching efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub eta: f64,
    pub label: String,
}

impl LossSpec {
    pub fn new(eta: f64, label: impl Into<String>) -> Result<Self> {
        ensure_fraction("eta", eta)?;
        Ok(Self {
            eta,
            label: label.into(),
        })
    }

    pub fn transfer(&self) -> Result<QuadratureTransfer> {
        QuadratureTransfer::scalar_loss(self.eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twophoton::{apply_transfer, homodyne_noise, HomodyneSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const MHZ: f64 = 1e6;

    fn src() -> CavitySpec {
        CavitySpec::new(1.21, 0.90, 0.9992, 0.0, 10.0 * MHZ).unwrap()
    }

    #[test]
    fn fsr_of_linear_cavity() {
        assert_relative_eq!(cavity_fsr(1.21).unwrap(), 123.881_181e6, epsilon = 1.0);
        assert_relative_eq!(cavity_fsr(0.605).unwrap(), 2.0 * cavity_fsr(1.21).unwrap(), epsilon = 1e-6);
        assert_relative_eq!(cavity_fsr(1.0).unwrap(), 149.896_229e6, epsilon = 1.0);
        assert!(cavity_fsr(0.0).is_err());
        assert!(cavity_fsr(-1.0).is_err());
    }

    #[test]
    fn sideband_lock_residue() {
        assert_eq!(detuning_from_sideband_lock(124.0 * MHZ, 134.0 * MHZ).unwrap(), 10.0 * MHZ);
        assert_eq!(detuning_from_sideband_lock(124.0 * MHZ, -134.0 * MHZ).unwrap(), -10.0 * MHZ);
        assert_eq!(detuning_from_sideband_lock(124.0 * MHZ, 124.0 * MHZ).unwrap(), 0.0);
        // upper edge of the interval is kept
        assert_eq!(detuning_from_sideband_lock(124.0 * MHZ, 62.0 * MHZ).unwrap(), 62.0 * MHZ);
        assert_eq!(detuning_from_sideband_lock(124.0 * MHZ, -62.0 * MHZ).unwrap(), 62.0 * MHZ);
        assert!(detuning_from_sideband_lock(0.0, 1.0).is_err());
    }

    #[test]
    fn finesse_values() {
        assert_relative_eq!(cavity_finesse(&src()).unwrap(), 59.18, epsilon = 0.01);
        let perfect_end = CavitySpec::new(1.21, 0.90, 1.0, 0.0, 0.0).unwrap();
        // pi * sqrt(0.948683) / (1 - 0.948683)
        assert_relative_eq!(cavity_finesse(&perfect_end).unwrap(), 59.63, epsilon = 0.01);
        let closed = CavitySpec::new(1.21, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(cavity_finesse(&closed).is_err());
    }

    #[test]
    fn reflection_on_and_off_resonance() {
        let spec = src();
        let on = cavity_reflection(&spec, spec.detuning);
        assert_relative_eq!(on.re, 0.98493, epsilon = 1e-4);
        assert_relative_eq!(on.im, 0.0, epsilon = 1e-12);

        let fsr = cavity_fsr(spec.length).unwrap();
        let anti = cavity_reflection(&spec, spec.detuning + 0.5 * fsr);
        let (r1, r2) = (0.9f64.sqrt(), 0.9992f64.sqrt());
        assert_relative_eq!(anti.re, -(r1 + r2) / (1.0 + r1 * r2), epsilon = 1e-12);
        assert_relative_eq!(anti.norm(), 0.999989, epsilon = 1e-6);
    }

    #[test]
    fn one_sided_lossless_cavity_reflects_everything() {
        let spec = CavitySpec::new(1.21, 0.9, 1.0, 0.0, 3.0 * MHZ).unwrap();
        for f in [-40.0, -3.0, 0.0, 1.0, 3.0, 7.5, 60.0] {
            assert_relative_eq!(cavity_reflection(&spec, f * MHZ).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_cavity_transmits_fully_on_resonance() {
        let spec = CavitySpec::new(0.5, 0.95, 0.95, 0.0, 0.0).unwrap();
        assert_relative_eq!(cavity_transmission(&spec, 0.0).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn transmission_peak_and_half_width() {
        let spec = src();
        let peak = cavity_transmission(&spec, spec.detuning).norm_sqr();
        for f in [5.0, 9.0, 9.9, 10.1, 11.0, 15.0] {
            assert!(cavity_transmission(&spec, f * MHZ).norm_sqr() < peak);
        }
        // brute-force search for the half-power points
        let step = 100.0;
        let half: Vec<f64> = (0..100_000)
            .map(|k| 5.0 * MHZ + k as f64 * step)
            .filter(|&f| cavity_transmission(&spec, f).norm_sqr() >= 0.5 * peak)
            .collect();
        let fwhm = half.last().unwrap() - half.first().unwrap();
        let expected = cavity_fsr(spec.length).unwrap() / cavity_finesse(&spec).unwrap();
        assert_relative_eq!(fwhm, expected, epsilon = 0.01 * expected);
        assert_relative_eq!(fwhm, 2.09 * MHZ, epsilon = 0.02 * MHZ);
    }

    #[test]
    fn tuned_lossless_cavity_does_not_rotate() {
        let spec = CavitySpec::new(1.21, 0.9, 1.0, 0.0, 0.0).unwrap();
        for f in [0.5, 1.0, 5.0, 20.0] {
            let (up, down) = (cavity_reflection(&spec, f * MHZ), cavity_reflection(&spec, -f * MHZ));
            assert_relative_eq!((up - down.conj()).norm(), 0.0, epsilon = 1e-12);
            assert_relative_eq!(cavity_rotation_angle(&spec, f * MHZ), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn detuned_cavity_rotates_near_its_resonance() {
        let spec = src();
        let far = cavity_rotation_angle(&spec, 62.0 * MHZ).abs();
        let near = cavity_rotation_angle(&spec, 10.0 * MHZ).abs();
        assert!(far < 0.02, "far-off-resonance rotation {far}");
        assert!(near > 1.0, "on-resonance rotation {near}");

        // amplitude squeezing turns into anti-squeezing around the detuning
        let sq = SpectralCovariance::diagonal(0.5, 2.0);
        let h = HomodyneSpec::amplitude();
        let at = |f: f64| homodyne_noise(&apply_transfer(&sq, &cavity_quadrature_transfer(&spec, f)), &h);
        assert!(at(3.0 * MHZ) < 1.0);
        assert!(at(10.0 * MHZ) > 1.0);
    }

    #[test]
    fn opa_spectrum() {
        let off = OpaSpec::new(0.0, 20.0 * MHZ, 0.9).unwrap();
        assert_eq!(opa_output_covariance(&off, 3.0 * MHZ).unwrap(), SpectralCovariance::vacuum());

        let half = OpaSpec::new(0.5, 20.0 * MHZ, 1.0).unwrap();
        let s = opa_output_covariance(&half, 0.0).unwrap();
        assert_relative_eq!(s.s11, 1.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(s.s22, 9.0, epsilon = 1e-13);
        assert_relative_eq!(s.determinant(), 1.0, epsilon = 1e-13);

        assert!(OpaSpec::new(1.0, 20.0 * MHZ, 1.0).is_err());
        let above = OpaSpec {
            pump_x: 1.2,
            ..half
        };
        assert!(opa_output_covariance(&above, 0.0).is_err());
    }

    fn arb_cavity() -> impl Strategy<Value = CavitySpec> {
        (0.05..5.0f64, 0.0..0.999f64, 0.0..=1.0f64, 0.0..0.2f64, -50e6..50e6f64)
            .prop_map(|(l, a, b, loss, d)| CavitySpec::new(l, a, b, loss, d).unwrap())
    }

    proptest! {
        #[test]
        fn cavities_are_passive(spec in arb_cavity(), f in -100e6..100e6f64) {
            let total = cavity_reflection(&spec, f).norm_sqr() + cavity_transmission(&spec, f).norm_sqr();
            prop_assert!(total <= 1.0 + 1e-12);
            let lossless = CavitySpec { round_trip_loss: 0.0, ..spec };
            let total = cavity_reflection(&lossless, f).norm_sqr() + cavity_transmission(&lossless, f).norm_sqr();
            prop_assert!((total - 1.0).abs() < 1e-12, "{}", total);
        }

        #[test]
        fn cavities_preserve_vacuum(spec in arb_cavity(), f in 1.0..100e6f64) {
            let out = apply_transfer(&SpectralCovariance::vacuum(), &cavity_quadrature_transfer(&spec, f));
            prop_assert!(out.max_abs_diff(&SpectralCovariance::vacuum()) < 1e-12);
        }

        #[test]
        fn detuning_sign_mirrors_reflection(spec in arb_cavity(), f in -100e6..100e6f64) {
            let mirrored = spec.with_detuning(-spec.detuning);
            let diff = cavity_reflection(&spec, f) - cavity_reflection(&mirrored, -f).conj();
            prop_assert!(diff.norm() < 1e-12);
        }

        #[test]
        fn lossless_opa_output_is_pure(x in 0.0..0.999f64, bw in 1e5..1e8f64, f in 0.0..1e8f64) {
            let s = opa_output_covariance(&OpaSpec::new(x, bw, 1.0).unwrap(), f).unwrap();
            prop_assert!((s.determinant() - 1.0).abs() < 1e-9);
        }
    }
}
