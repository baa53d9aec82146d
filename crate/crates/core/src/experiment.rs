//! Frequency sweeps over a pipeline: noise spectra, single-sideband signal
//! transfer, signal-to-noise ratios, pump calibration and loss budgets.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_fraction, Error, Result};
use crate::optics::cavity_transmission;
use crate::pipeline::Pipeline;
use crate::twophoton::{from_decibel, to_decibel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl SweepConfig {
    pub fn linear(f_min: f64, f_max: f64, points: usize) -> Result<Self> {
        if !(f_min > 0.0 && f_min.is_finite()) {
            return Err(Error::Domain {
                quantity: "f_min",
                value: f_min,
                expected: "finite and > 0",
            });
        }
        if !(f_max > f_min && f_max.is_finite()) {
            return Err(Error::Domain {
                quantity: "f_max",
                value: f_max,
                expected: "finite and > f_min",
            });
        }
        if points < 2 {
            return Err(Error::Domain {
                quantity: "points",
                value: points as f64,
                expected: ">= 2",
            });
        }
        Ok(Self {
            f_min,
            f_max,
            points,
            scale: Scale::Linear,
        })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let step = (self.f_max - self.f_min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.f_max } else { self.f_min + step * i as f64 })
            .collect()
    }
}

impl Default for SweepConfig {
    /// 2 to 16 MHz in 500 points.
    fn default() -> Self {
        Self {
            f_min: 2e6,
            f_max: 16e6,
            points: 500,
            scale: Scale::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRecord {
    pub frequency_hz: f64,
    pub noise_rel_shot_db: f64,
    pub signal_power: Option<f64>,
    pub snr_db: Option<f64>,
}

/// Signal-to-noise comparison at one injected sideband frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrRecord {
    pub frequency_hz: f64,
    pub noise_rel_shot_db: f64,
    pub signal_power: f64,
    /// With the squeezed source.
    pub snr_db: f64,
    /// With the source replaced by vacuum.
    pub snr_shot_db: f64,
    pub improvement_db: f64,
}

impl SnrRecord {
    pub fn spectrum_record(&self) -> SpectrumRecord {
        SpectrumRecord {
            frequency_hz: self.frequency_hz,
            noise_rel_shot_db: self.noise_rel_shot_db,
            signal_power: Some(self.signal_power),
            snr_db: Some(self.snr_db),
        }
    }
}

/// Detected noise in dB relative to shot noise at each sweep frequency.
pub fn noise_spectrum(pipeline: &Pipeline, sweep: &SweepConfig) -> Result<Vec<SpectrumRecord>> {
    sweep
        .frequencies()
        .into_par_iter()
        .map(|f| {
            Ok(SpectrumRecord {
                frequency_hz: f,
                noise_rel_shot_db: to_decibel(pipeline.detected_noise(f)?)?,
                signal_power: None,
                snr_db: None,
            })
        })
        .collect()
}

/// Detected power of a single upper sideband of amplitude
/// `injected_amplitude` at `omega`, entering through the end mirror of the
/// signal cavity. Only the stages after that cavity and the detector
/// efficiency attenuate it; the source plays no part.
pub fn signal_transfer(pipeline: &Pipeline, omega: f64, injected_amplitude: f64) -> Result<f64> {
    let (signal, cavity) = pipeline.signal_cavity()?;
    let field = injected_amplitude * cavity_transmission(cavity, omega);
    Ok(pipeline.downstream_gain(signal.stage, omega) * field.norm_sqr() / 2.0)
}

fn snr_db(signal_power: f64, noise: f64) -> Option<f64> {
    (signal_power > 0.0).then(|| 10.0 * (signal_power / noise).log10())
}

/// Noise sweep with the declared signal evaluated at every point, as if the
/// injected sideband were swept along with the analyzer.
pub fn signal_spectrum(pipeline: &Pipeline, sweep: &SweepConfig) -> Result<Vec<SpectrumRecord>> {
    let (signal, _) = pipeline.signal_cavity()?;
    sweep
        .frequencies()
        .into_par_iter()
        .map(|f| {
            let noise = pipeline.detected_noise(f)?;
            let power = signal_transfer(pipeline, f, signal.amplitude)?;
            Ok(SpectrumRecord {
                frequency_hz: f,
                noise_rel_shot_db: to_decibel(noise)?,
                signal_power: Some(power),
                snr_db: snr_db(power, noise),
            })
        })
        .collect()
}

/// Signal-to-noise ratio at each injected frequency, with and without the
/// squeezed source.
pub fn snr_spectrum(pipeline: &Pipeline, signal_frequencies: &[f64]) -> Result<Vec<SnrRecord>> {
    let (signal, _) = pipeline.signal_cavity()?;
    let shot = pipeline.with_vacuum_source();
    signal_frequencies
        .par_iter()
        .map(|&f| {
            let noise = pipeline.detected_noise(f)?;
            let shot_noise = shot.detected_noise(f)?;
            let power = signal_transfer(pipeline, f, signal.amplitude)?;
            let snr = 10.0 * (power / noise).log10();
            let snr_shot = 10.0 * (power / shot_noise).log10();
            Ok(SnrRecord {
                frequency_hz: f,
                noise_rel_shot_db: to_decibel(noise)?,
                signal_power: power,
                snr_db: snr,
                snr_shot_db: snr_shot,
                improvement_db: 10.0 * (shot_noise / noise).log10(),
            })
        })
        .collect()
}

const CALIBRATION_TOLERANCE_DB: f64 = 1e-4;
const PUMP_CEILING: f64 = 1.0 - 1e-9;

fn noise_db_at_pump(pipeline: &Pipeline, pump_x: f64, at: f64) -> Result<f64> {
    to_decibel(pipeline.with_pump(pump_x)?.detected_noise(at)?)
}

/// Smallest pump strength giving `target_db` of detected noise at
/// `at_frequency`.
///
/// Detected noise falls with pump strength until residual rotation lets
/// anti-squeezing in, so the search first locates the deepest attainable
/// noise and then bisects on the monotone branch below it.
pub fn calibrate_pump(pipeline: &Pipeline, target_db: f64, at_frequency: f64) -> Result<f64> {
    if pipeline.opa().is_none() {
        return Err(Error::Unreachable {
            target_db,
            bound_db: 0.0,
        });
    }
    if target_db.is_nan() || target_db > 0.0 {
        return Err(Error::Domain {
            quantity: "target_db",
            value: target_db,
            expected: "<= 0 (a squeezing level)",
        });
    }
    if target_db == 0.0 {
        return Ok(0.0);
    }
    let noise = |x: f64| noise_db_at_pump(pipeline, x, at_frequency);

    // coarse scan, then golden-section refinement of the minimum
    const GRID: usize = 256;
    let grid: Vec<f64> = (0..=GRID).map(|k| PUMP_CEILING * k as f64 / GRID as f64).collect();
    let values = grid.iter().map(|&x| noise(x)).collect::<Result<Vec<_>>>()?;
    let best = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(GRID)]);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if noise(a)? <= noise(b)? {
            hi = b;
        } else {
            lo = a;
        }
    }
    let x_best = 0.5 * (lo + hi);
    let bound_db = noise(x_best)?.min(values[best]);
    if target_db < bound_db {
        return Err(Error::Unreachable { target_db, bound_db });
    }

    let (mut lo, mut hi) = (0.0, x_best);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if noise(mid)? > target_db {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let x = if (noise(hi)? - target_db).abs() <= (noise(lo)? - target_db).abs() { hi } else { lo };
    debug_assert!((noise(x)? - target_db).abs() < CALIBRATION_TOLERANCE_DB);
    Ok(x)
}

/// Largest total loss that still leaves `target_db` of squeezing from a
/// source with `input_squeezing_db` (both given as positive magnitudes).
pub fn loss_budget(input_squeezing_db: f64, target_db: f64) -> Result<f64> {
    if !(target_db > 0.0 && target_db.is_finite()) {
        return Err(Error::Domain {
            quantity: "target_db",
            value: target_db,
            expected: "finite and > 0",
        });
    }
    if input_squeezing_db.is_nan() {
        return Err(Error::Domain {
            quantity: "input_squeezing_db",
            value: input_squeezing_db,
            expected: "a number",
        });
    }
    if input_squeezing_db < target_db {
        return Err(Error::Infeasible {
            input_db: input_squeezing_db,
            target_db,
        });
    }
    let eta = (1.0 - from_decibel(-target_db)) / (1.0 - from_decibel(-input_squeezing_db));
    Ok((1.0 - eta).max(0.0))
}

/// Ordered, labelled power efficiencies along the squeezed-light path.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyChain {
    pub entries: Vec<(String, f64)>,
}

impl EfficiencyChain {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        for (_, eta) in &entries {
            ensure_fraction("efficiency", *eta)?;
        }
        Ok(Self { entries })
    }

    /// Factors quoted for the experiment.
    pub fn reported() -> Self {
        let entries = [
            ("escape", 0.90),
            ("isolator", 0.93),
            ("fc_modematch", 0.95),
            ("src_modematch", 0.97),
            ("homodyne_modematch", 0.95),
            ("quantum_efficiency", 0.93),
        ];
        Self {
            entries: entries.iter().map(|&(k, v)| (k.to_owned(), v)).collect(),
        }
    }
}

pub fn efficiency_product(chain: &EfficiencyChain) -> f64 {
    chain.entries.iter().map(|(_, eta)| eta).product()
}
