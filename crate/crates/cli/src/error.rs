use gas_core::GasError;
use serde::Serialize;
use thiserror::Error;

/// Process exit status for malformed input (files, flags, configuration).
pub const EXIT_INPUT: i32 = 2;
/// Process exit status for failures inside the model layer.
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error(transparent)]
    Domain(#[from] GasError),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn file(path: &std::path::Path, msg: impl ToString) -> Self {
        CliError::File { path: path.display().to_string(), message: msg.to_string() }
    }

    /// Errors describing an unusable model configuration count as input
    /// errors even though the model layer detects them.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::File { .. } => EXIT_INPUT,
            CliError::Domain(e) => match e {
                GasError::UnknownDistribution(_)
                | GasError::DimensionUnsupported { .. }
                | GasError::ScalingUnsupported { .. }
                | GasError::InvalidSpec(_)
                | GasError::InvalidGrid(_)
                | GasError::InvalidHorizon(_)
                | GasError::InvalidArgument(_) => EXIT_INPUT,
                _ => EXIT_DOMAIN,
            },
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Input(_) => "InputError".into(),
            CliError::File { .. } => "FileError".into(),
            CliError::Domain(e) => {
                let debug = format!("{e:?}");
                debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
            }
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        let kind = self.kind();
        serde_json::to_string(&Envelope {
            error: Body { kind: &kind, message: self.to_string(), exit_code: self.exit_code() },
        })
        .expect("error envelope serializes")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
