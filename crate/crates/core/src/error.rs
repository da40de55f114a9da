use thiserror::Error;

/// Failure modes shared across the library.
///
/// Everything here is fatal for the current run: callers are expected to
/// abort and report, not retry.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A model closure, gain matrix, or dimension was inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A derivative evaluation produced NaN or infinity.
    #[error("non-finite derivative at t = {t}: {what}")]
    NonFinite { t: f64, what: String },

    /// A state left the configured blow-up bound.
    #[error("simulation diverged at t = {t}: max |state| {norm:.3e} exceeds bound {bound:.3e}")]
    Diverged { t: f64, norm: f64, bound: f64 },

    /// A window sample arrived at or before the newest buffered time.
    #[error("out-of-order window sample: t = {t} does not advance past {last}")]
    OutOfOrderSample { t: f64, last: f64 },

    /// A window sample contained NaN or infinity.
    #[error("non-finite window sample at t = {t}")]
    NonFiniteSample { t: f64 },

    /// The window buffer does not yet cover [t - T, t] for a t past warm-up.
    #[error("window not ready: buffer does not cover [{from}, {to}]")]
    WindowNotReady { from: f64, to: f64 },

    /// A gain matrix lost positive definiteness beyond recoverable limits.
    #[error("numerical conditioning failure at t = {t}: {what}")]
    Conditioning { t: f64, what: String },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
