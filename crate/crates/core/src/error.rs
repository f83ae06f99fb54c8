use std::path::PathBuf;

/// Everything that can go wrong while building channels, precoders or running a sweep.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("singular system (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("insufficient transmit dimensions: {transmit} available for {receive} receive dimensions")]
    InsufficientTransmitDimensions { transmit: usize, receive: usize },

    #[error("degenerate precoder: cascade carries no energy")]
    DegeneratePrecoder,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trial {trial}: gave up after {attempts} degenerate draws")]
    ResampleLimit { trial: usize, attempts: u32 },
}

impl Error {
    /// True for failures caused by the numbers rather than by the user's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateChannel(_)
                | Error::SingularSystem { .. }
                | Error::DegeneratePrecoder
                | Error::ResampleLimit { .. }
        )
    }

    /// Degenerate draws are retried by the trial engine; everything else propagates.
    pub fn is_resamplable(&self) -> bool {
        matches!(
            self,
            Error::DegenerateChannel(_) | Error::SingularSystem { .. } | Error::DegeneratePrecoder
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
