//! Built-in configurations of the experiment.
//!
//! | name  | squeezed path                               |
//! |-------|---------------------------------------------|
//! | fig2a | vacuum (shot-noise reference)               |
//! | fig2b | signal-recycling cavity only (+10 MHz)      |
//! | fig2c | filter cavity only (-10 MHz)                |
//! | fig2d | filter cavity, then signal-recycling cavity |
//! | fig3  | fig2d with the single-sideband signal       |
//!
//! The pump strength of every preset is calibrated on the fig2d chain so
//! that it detects 2.8 dB of squeezing at 5 MHz.

use std::fmt;
use std::str::FromStr;

use crate::error::Result;
use crate::experiment::{calibrate_pump, noise_spectrum, signal_spectrum, SpectrumRecord, SweepConfig};
use crate::netlist;
use crate::pipeline::Pipeline;

pub const REFERENCE_NETLIST: &str = include_str!("../data/reference.net");
pub const SRC_ONLY_NETLIST: &str = include_str!("../data/src_only.net");
pub const FC_ONLY_NETLIST: &str = include_str!("../data/fc_only.net");

pub const CALIBRATION_TARGET_DB: f64 = -2.8;
pub const CALIBRATION_FREQUENCY: f64 = 5e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Self::Fig2a, Self::Fig2b, Self::Fig2c, Self::Fig2d, Self::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig2c => "fig2c",
            Self::Fig2d => "fig2d",
            Self::Fig3 => "fig3",
        }
    }

    fn netlist(self) -> &'static str {
        match self {
            Self::Fig2b => SRC_ONLY_NETLIST,
            Self::Fig2c => FC_ONLY_NETLIST,
            Self::Fig2a | Self::Fig2d | Self::Fig3 => REFERENCE_NETLIST,
        }
    }

    /// The preset chain with its pump set by [`calibrated_pump`].
    pub fn pipeline(self) -> Result<Pipeline> {
        let pipeline = embedded(self.netlist()).with_pump(calibrated_pump()?)?;
        Ok(match self {
            Self::Fig2a => pipeline.with_vacuum_source(),
            _ => pipeline,
        })
    }

    pub fn run(self, sweep: &SweepConfig) -> Result<Vec<SpectrumRecord>> {
        let pipeline = self.pipeline()?;
        match self {
            Self::Fig3 => signal_spectrum(&pipeline, sweep),
            _ => noise_spectrum(&pipeline, sweep),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScenario(pub String);

impl fmt::Display for UnknownScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
        write!(f, "unknown scenario `{}` (valid: {})", self.0, names.join(", "))
    }
}

impl std::error::Error for UnknownScenario {}

impl FromStr for Scenario {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| UnknownScenario(s.to_owned()))
    }
}

fn embedded(text: &str) -> Pipeline {
    netlist::load(text).unwrap_or_else(|d| panic!("embedded netlist is invalid:\n{d}"))
}

/// The filter-cavity and signal-recycling chain as shipped.
pub fn reference_pipeline() -> Pipeline {
    embedded(REFERENCE_NETLIST)
}

/// Pump strength at which the reference chain detects the calibration
/// squeezing level.
pub fn calibrated_pump() -> Result<f64> {
    calibrate_pump(&reference_pipeline(), CALIBRATION_TARGET_DB, CALIBRATION_FREQUENCY)
}
