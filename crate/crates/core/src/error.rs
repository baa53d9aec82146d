use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric argument is outside the range where the model is defined.
    #[error("{quantity} = {value} is out of range ({expected})")]
    Domain {
        quantity: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// A calibration target cannot be met by any pump strength.
    #[error("target {target_db:.4} dB is not reachable; the best attainable is {bound_db:.4} dB")]
    Unreachable { target_db: f64, bound_db: f64 },
    /// A loss budget was requested for a target tighter than the input squeezing.
    #[error("target {target_db} dB exceeds the input squeezing of {input_db} dB")]
    Infeasible { input_db: f64, target_db: f64 },
    #[error("pipeline declares no signal injection")]
    NoSignal,
}

pub(crate) fn ensure_fraction(quantity: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            quantity,
            value,
            expected: "0 <= x <= 1",
        })
    }
}

pub(crate) fn ensure_positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            quantity,
            value,
            expected: "finite and > 0",
        })
    }
}
