use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("time {0} s is negative; t = 0 is the release instant")]
    NegativeTime(f64),

    #[error("thermal velocity must be positive (got {0} m/s): a frozen cloud has no time scales")]
    DegenerateCloud(f64),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("series did not converge after {terms} terms (last relative term {last_relative:.3e})")]
    SeriesNonConvergence { terms: usize, last_relative: f64 },

    #[error("dispersive detuning formula is undefined at delta = 0")]
    ZeroDetuning,

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

pub(crate) fn require(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
