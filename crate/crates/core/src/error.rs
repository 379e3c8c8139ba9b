use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// The variants follow the exit-code contract of the runner: `Verdict`
/// failures are reported separately, everything here maps to a
/// configuration or reliability problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structural(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("parameter outside its domain: {0}")]
    Domain(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("singular or non-symmetric operator: {0}")]
    SingularOperator(String),
    #[error("capability limit: {0}")]
    Capability(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("insufficient statistical power: {0}")]
    Power(String),
    #[error("numerical reliability: {0}")]
    Reliability(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("range: {0}")]
    Range(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag used in reports and CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Input(_) => "input",
            Error::Domain(_) => "domain",
            Error::Resolution(_) => "resolution",
            Error::SingularOperator(_) => "singular-operator",
            Error::Capability(_) => "capability",
            Error::Precondition(_) => "precondition",
            Error::Power(_) => "power",
            Error::Reliability(_) => "reliability",
            Error::Config(_) => "config",
            Error::Range(_) => "range",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Input(format!("{what}: non-finite entry at index {i}"))),
        None => Ok(()),
    }
}
