//! Command-line plumbing for `liu-logit`: CSV ingestion, restriction files,
//! run manifests and the four subcommands.

pub mod commands;
pub mod data;
pub mod manifest;
pub mod restriction_file;

use std::path::PathBuf;

/// Process exit code for bad input.
pub const EXIT_INPUT: u8 = 2;
/// Process exit code for a numerical failure.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] liu_logit::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use liu_logit::Error as E;
        match self {
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Model(
                E::DimensionMismatch { .. } | E::InvalidInput(_) | E::RankDeficient { .. } | E::InvalidLiuParameter(_),
            ) => EXIT_INPUT,
            CliError::Model(_) => EXIT_NUMERICAL,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parses a comma or whitespace separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Input(format!("{what}: cannot parse '{s}'")))
        })
        .collect()
}
