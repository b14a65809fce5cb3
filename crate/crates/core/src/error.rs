use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates a configuration invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input lengths, rates or counts do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The multiplexer cannot settle between two ADC samples.
    #[error("switch timing violated: t_mux = {t_mux_s:e} s is not below 1/f_d = {sample_period_s:e} s (max f_d = {max_f_d_hz:.4e} Hz)")]
    Timing {
        t_mux_s: f64,
        sample_period_s: f64,
        max_f_d_hz: f64,
    },

    /// A numeric contract broke at run time (non-finite input, vanishing 1f, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Fixed-point datapath overflowed its declared width.
    #[error("fixed-point overflow in {stage}: value {value} does not fit {bits} bits")]
    Overflow {
        stage: &'static str,
        value: i128,
        bits: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
