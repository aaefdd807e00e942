use std::fmt;

/// Process-level failure classes, one exit code each.
#[derive(Debug)]
pub enum CliError {
    /// bad flags, unreadable files, malformed or out-of-range config (exit 2)
    Config(String),
    /// a verification check failed its tolerance (exit 3)
    Verification(String),
    /// a numerical invariant broke mid-run: eigenvalue bound, sum rule,
    /// degenerate decomposition (exit 4)
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Verification(m) => write!(f, "verification failure: {m}"),
            CliError::Numerical(m) => write!(f, "numerical invariant breach: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

impl From<decotm::noise::NoiseError> for CliError {
    fn from(e: decotm::noise::NoiseError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<decotm::transfer::TransferError> for CliError {
    fn from(e: decotm::transfer::TransferError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<decotm::correlated::CorrelatedError> for CliError {
    fn from(e: decotm::correlated::CorrelatedError) -> Self {
        use decotm::correlated::CorrelatedError as E;
        match e {
            E::Noise(inner) => CliError::Config(inner.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
