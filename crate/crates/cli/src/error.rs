use serde::Serialize;

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_THRESHOLD: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, bad density file, or an unwritable output directory.
    Input(String),
    /// A solver gave up: blow-up, degeneracy, step underflow.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }

    pub fn record(&self, experiment: &str) -> ErrorRecord {
        ErrorRecord {
            experiment: experiment.to_string(),
            kind: self.kind(),
            message: self.message().to_string(),
            exit_code: self.exit_code(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<quantflow::Error> for CliError {
    fn from(e: quantflow::Error) -> Self {
        use quantflow::Error::*;
        let message = e.to_string();
        match e {
            DegenerateDensity
            | InvalidDensity(_)
            | InvalidExponent { .. }
            | InvalidConfig(_)
            | NotPeriodic { .. }
            | MissingDerivative
            | EmptyConfig
            | Resolution(_)
            | Io(_)
            | Csv(_) => CliError::Input(message),
            NonFinite { .. }
            | CoincidentPoints { .. }
            | StepUnderflow { .. }
            | Degeneracy { .. }
            | NonMonotone { .. }
            | BlowDown { .. }
            | Singular { .. }
            | Domain { .. }
            | CellDomain { .. }
            | LeftWindow { .. } => CliError::Numerical(message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("output: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("serialization: {e}"))
    }
}

/// Written to `error.json` when a run fails.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub experiment: String,
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}
