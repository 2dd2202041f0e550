use std::fmt;

/// Top-level failure, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unparseable specifiers, schema violations, IO.
    Input(anyhow::Error),
    /// A fit did not converge.
    NonConvergence(String),
    /// At least one verification check failed.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 1,
            Self::NonConvergence(_) => 2,
            Self::Verification(_) => 3,
        }
    }

    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        Self::Input(e.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(e) => write!(f, "{e:#}"),
            Self::NonConvergence(s) => write!(f, "fit did not converge: {s}"),
            Self::Verification(s) => write!(f, "verification failed: {s}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        Self::Input(e.into())
    }
}
