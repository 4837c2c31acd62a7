use std::fmt;

/// CLI failures, split by exit code: input/validation problems exit 2,
/// numerical failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mgsn::Error> for CliError {
    fn from(e: mgsn::Error) -> Self {
        use mgsn::Error::*;
        match e {
            NotPositiveDefinite
            | SeriesUnderflow { .. }
            | DegenerateUpdate { .. }
            | LikelihoodOrdering { .. }
            | AllGridPointsFailed(_)
            | RankDeficient => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
