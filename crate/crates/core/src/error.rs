use thiserror::Error;

pub type Result<T> = std::result::Result<T, UdnError>;

/// Broad failure classes, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numeric,
}

#[derive(Debug, Error)]
pub enum UdnError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("fixed point did not converge after {iterations} iterations (last iterates: {history:?})")]
    FixedPoint { iterations: usize, history: Vec<f64> },

    #[error("degenerate metric: {0}")]
    Degenerate(String),

    #[error("stage `{stage}` failed for hot spot {spot}: {source}")]
    Stage {
        stage: &'static str,
        spot: usize,
        #[source]
        source: Box<UdnError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl UdnError {
    pub fn input(msg: impl Into<String>) -> Self {
        UdnError::Input(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        UdnError::Numeric(msg.into())
    }

    pub fn at_stage(self, stage: &'static str, spot: usize) -> Self {
        UdnError::Stage {
            stage,
            spot,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            UdnError::Input(_) | UdnError::Parse(_) | UdnError::Io(_) => ErrorClass::Input,
            UdnError::Stage { source, .. } => source.class(),
            _ => ErrorClass::Numeric,
        }
    }
}

impl From<csv::Error> for UdnError {
    fn from(e: csv::Error) -> Self {
        UdnError::Io(std::io::Error::other(e))
    }
}
