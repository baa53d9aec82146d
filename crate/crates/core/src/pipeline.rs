//! Executable optical chain: an optional squeezed source, a sequence of
//! reflective stages, and a homodyne readout.

use crate::error::{Error, Result};
use crate::optics::{cavity_quadrature_transfer, cavity_reflection, opa_output_covariance, CavitySpec, LossSpec, OpaSpec};
use crate::twophoton::{apply_scalar_loss, apply_transfer, homodyne_noise, HomodyneSpec, SpectralCovariance};

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Loss(LossSpec),
    /// The field reflects off the cavity's coupling mirror.
    Cavity(CavitySpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: String,
    pub element: Element,
}

impl Stage {
    pub fn loss(name: impl Into<String>, eta: f64) -> Result<Self> {
        let name = name.into();
        Ok(Self {
            element: Element::Loss(LossSpec::new(eta, name.clone())?),
            name,
        })
    }

    pub fn cavity(name: impl Into<String>, spec: CavitySpec) -> Self {
        Self {
            name: name.into(),
            element: Element::Cavity(spec),
        }
    }

    fn propagate(&self, s: &SpectralCovariance, omega: f64) -> Result<SpectralCovariance> {
        match &self.element {
            Element::Loss(loss) => apply_scalar_loss(s, loss.eta),
            Element::Cavity(spec) => Ok(apply_transfer(s, &cavity_quadrature_transfer(spec, omega))),
        }
    }

    /// Power transmission seen by a single sideband at `omega`.
    fn sideband_power_gain(&self, omega: f64) -> f64 {
        match &self.element {
            Element::Loss(loss) => loss.eta,
            Element::Cavity(spec) => cavity_reflection(spec, omega).norm_sqr(),
        }
    }
}

/// Single-sideband field injected through the end mirror of a cavity stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalInjection {
    /// Index into [`Pipeline::stages`]; always a cavity.
    pub stage: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    /// Squeezed-light source; `None` injects vacuum.
    pub source: Option<(String, OpaSpec)>,
    pub stages: Vec<Stage>,
    pub homodyne: HomodyneSpec,
    pub signal: Option<SignalInjection>,
}

impl Pipeline {
    /// Source, stages and detector.
    pub fn stage_count(&self) -> usize {
        self.source.iter().count() + self.stages.len() + 1
    }

    pub fn with_vacuum_source(&self) -> Self {
        Self {
            source: None,
            ..self.clone()
        }
    }

    pub fn with_pump(&self, pump_x: f64) -> Result<Self> {
        let mut out = self.clone();
        if let Some((_, opa)) = out.source.as_mut() {
            *opa = opa.with_pump(pump_x);
            opa.validate()?;
        }
        Ok(out)
    }

    pub fn opa(&self) -> Option<&OpaSpec> {
        self.source.as_ref().map(|(_, opa)| opa)
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn source_covariance(&self, omega: f64) -> Result<SpectralCovariance> {
        match self.opa() {
            Some(opa) => opa_output_covariance(opa, omega),
            None => Ok(SpectralCovariance::vacuum()),
        }
    }

    /// Covariance arriving at the homodyne detector.
    pub fn covariance_at_detector(&self, omega: f64) -> Result<SpectralCovariance> {
        self.stages
            .iter()
            .try_fold(self.source_covariance(omega)?, |s, stage| stage.propagate(&s, omega))
    }

    /// Detected noise power relative to shot noise.
    pub fn detected_noise(&self, omega: f64) -> Result<f64> {
        Ok(homodyne_noise(&self.covariance_at_detector(omega)?, &self.homodyne))
    }

    /// Power gain from the injection point to the photodetectors for a
    /// single sideband at `omega`, including the detector efficiency.
    pub(crate) fn downstream_gain(&self, from_stage: usize, omega: f64) -> f64 {
        self.stages[from_stage + 1..]
            .iter()
            .map(|s| s.sideband_power_gain(omega))
            .product::<f64>()
            * self.homodyne.quantum_efficiency
    }

    pub(crate) fn signal_cavity(&self) -> Result<(SignalInjection, &CavitySpec)> {
        let signal = self.signal.ok_or(Error::NoSignal)?;
        match self.stages.get(signal.stage).map(|s| &s.element) {
            Some(Element::Cavity(spec)) => Ok((signal, spec)),
            _ => Err(Error::NoSignal),
        }
    }
}
