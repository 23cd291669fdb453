use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("characteristic curve b_0 does not exist (family B starts at order 1)")]
    InvalidCurve,

    #[error("characteristic value {curve} at q = {q} did not converge at truncation {truncation} (change {change:e})")]
    TruncationNotConverged {
        curve: String,
        q: f64,
        truncation: usize,
        change: f64,
    },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps before t = {t_end} (reached t = {t})")]
    TooManySteps {
        max_steps: usize,
        t: f64,
        t_end: f64,
    },

    #[error("no bracket for crossing with {curve} up to q = {q_limit} (scan step {step})")]
    BracketNotFound {
        curve: String,
        q_limit: f64,
        step: f64,
    },

    #[error(
        "potential violates the axis gradient condition: |grad U(y,0,0)| = {residual:e} at y = {y}"
    )]
    AxisGradient { y: f64, residual: f64 },

    #[error("initial residual amplitude of z{mode} is zero; growth factor undefined")]
    ZeroResidualAmplitude { mode: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {v}"),
        })
    }
}

pub(crate) fn ensure_positive(name: &'static str, v: f64) -> Result<()> {
    ensure_finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be > 0, got {v}"),
        })
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, v: f64) -> Result<()> {
    ensure_finite(name, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be >= 0, got {v}"),
        })
    }
}
