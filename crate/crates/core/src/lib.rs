//! Frequency-domain quantum noise and signal transfer model of a power- and
//! signal-recycled Michelson interferometer with squeezed-light injection
//! through a detuned filter cavity.

pub mod error;
pub mod experiment;
pub mod netlist;
pub mod optics;
pub mod pipeline;
pub mod scenario;
pub mod twophoton;

pub use error::{Error, Result};
