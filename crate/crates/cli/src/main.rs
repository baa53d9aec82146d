use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use squeezesim_core::experiment::{
    calibrate_pump, loss_budget, noise_spectrum, signal_spectrum, snr_spectrum, SpectrumRecord, SweepConfig,
};
use squeezesim_core::netlist::{self, parse_frequency};
use squeezesim_core::pipeline::Pipeline;
use squeezesim_core::scenario::Scenario;
use squeezesim_core::Error;

mod output;

const EXIT_FAILURE: u8 = 1;
const EXIT_NETLIST: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Quantum noise and signal spectra of a squeezed-light enhanced
/// dual-recycled Michelson interferometer.
#[derive(Debug, Parser)]
#[command(name = "squeezesim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep a netlist and write one record per frequency.
    Run {
        #[arg(long, value_name = "PATH")]
        netlist: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a built-in configuration (fig2a, fig2b, fig2c, fig2d, fig3).
    Scenario {
        name: Scenario,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Largest total loss that keeps a target squeezing level.
    Budget {
        /// Squeezing generated by the source, dB (positive).
        #[arg(long, allow_hyphen_values = true)]
        input_db: f64,
        /// Squeezing wanted at the detector, dB (positive).
        #[arg(long, allow_hyphen_values = true)]
        target_db: f64,
    },
    /// Pump strength that yields a given detected noise level.
    Calibrate {
        #[arg(long, value_name = "PATH")]
        netlist: PathBuf,
        /// Detected noise relative to shot noise, dB (negative for squeezing).
        #[arg(long, allow_hyphen_values = true, default_value_t = -2.8)]
        target_db: f64,
        #[arg(long, value_parser = parse_frequency, default_value = "5MHz")]
        at: f64,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Lowest sideband frequency (Hz, or with kHz/MHz/GHz suffix).
    #[arg(long, value_parser = parse_frequency, default_value = "2MHz")]
    fmin: f64,
    #[arg(long, value_parser = parse_frequency, default_value = "16MHz")]
    fmax: f64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..), default_value_t = 500)]
    points: u32,
    /// Evaluate the injected signal only at these frequencies.
    #[arg(long, value_parser = parse_frequency, value_delimiter = ',', value_name = "F")]
    signal_at: Vec<f64>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write records here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Netlist(String),
    Other(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, message) = match self {
            Self::Usage(m) => (EXIT_USAGE, m),
            Self::Netlist(m) => (EXIT_NETLIST, m),
            Self::Other(m) => (EXIT_FAILURE, m),
        };
        eprintln!("{message}");
        ExitCode::from(code)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoSignal => Self::Usage("the netlist declares no signal; --signal-at needs a `signal` line".into()),
            other => Self::Other(format!("error: {other}")),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { netlist, sweep, output } => {
            let pipeline = load_netlist(&netlist)?;
            let records = sweep_records(&pipeline, &sweep)?;
            emit(&records, &output)
        }
        Command::Scenario { name, sweep, output } => {
            let pipeline = name.pipeline()?;
            let records = if sweep.signal_at.is_empty() && name != Scenario::Fig3 {
                noise_spectrum(&pipeline, &sweep.config()?)?
            } else {
                sweep_records(&pipeline, &sweep)?
            };
            emit(&records, &output)
        }
        Command::Budget { input_db, target_db } => budget(input_db, target_db),
        Command::Calibrate { netlist, target_db, at } => {
            let pipeline = load_netlist(&netlist)?;
            let pump_x = calibrate_pump(&pipeline, target_db, at)?;
            println!("pump_x {pump_x:.6}");
            Ok(())
        }
    }
}

impl SweepArgs {
    fn config(&self) -> Result<SweepConfig, Failure> {
        SweepConfig::linear(self.fmin, self.fmax, self.points as usize).map_err(|e| Failure::Usage(format!("error: {e}")))
    }
}

fn sweep_records(pipeline: &Pipeline, sweep: &SweepArgs) -> Result<Vec<SpectrumRecord>, Failure> {
    if !sweep.signal_at.is_empty() {
        let points = snr_spectrum(pipeline, &sweep.signal_at)?;
        return Ok(points.iter().map(|p| p.spectrum_record()).collect());
    }
    let config = sweep.config()?;
    Ok(if pipeline.signal.is_some() {
        signal_spectrum(pipeline, &config)?
    } else {
        noise_spectrum(pipeline, &config)?
    })
}

fn load_netlist(path: &Path) -> Result<Pipeline, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Netlist(format!("{}: {e}", path.display())))?;
    let doc = netlist::parse(&text).map_err(|d| Failure::Netlist(prefixed(path, d.0.iter())))?;
    let warnings = netlist::lint(&doc);
    if !warnings.is_empty() {
        eprintln!("{}", prefixed(path, warnings.iter()));
    }
    netlist::validate(&doc).map_err(|d| Failure::Netlist(prefixed(path, d.0.iter())))
}

fn prefixed<'a>(path: &Path, diags: impl Iterator<Item = &'a netlist::ParseDiagnostic>) -> String {
    diags.map(|d| format!("{}:{d}", path.display())).collect::<Vec<_>>().join("\n")
}

fn emit(records: &[SpectrumRecord], args: &OutputArgs) -> Result<(), Failure> {
    let text = match args.format {
        Format::Csv => output::csv(records),
        Format::Json => output::json(records),
    };
    let written = match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    written.map_err(|e| Failure::Other(format!("error: {e}")))
}

fn budget(input_db: f64, target_db: f64) -> Result<(), Failure> {
    match loss_budget(input_db, target_db) {
        Ok(loss) => {
            println!("max loss {:.1} %", 100.0 * loss);
            println!("min efficiency {:.1} %", 100.0 * (1.0 - loss));
            Ok(())
        }
        Err(Error::Infeasible { input_db, target_db }) => Err(Failure::Other(format!(
            "infeasible: {target_db} dB of squeezing cannot be kept from a {input_db} dB source"
        ))),
        Err(e) => Err(Failure::Usage(format!("error: {e}"))),
    }
}
