use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CascadeError>;

#[derive(Debug, Error)]
pub enum CascadeError {
    /// Invalid configuration value; `field` names the offending setting.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Malformed input data. `row` is 1-based and counts the header as row 1.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<CascadeError>,
    },
}

impl CascadeError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CascadeError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn parse(row: usize, message: impl Into<String>) -> Self {
        CascadeError::Parse {
            row,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CascadeError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        CascadeError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 configuration, 3 data/parse/io, 4 internal
    /// numerical. Stratification and calibration failures are fixed by
    /// changing `k` or `jab_bootstrap`, so they count as configuration; a
    /// single-class training split is a data problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CascadeError::Config { .. } | CascadeError::Stratification(_) | CascadeError::Calibration(_) => 2,
            CascadeError::Parse { .. } | CascadeError::Io { .. } | CascadeError::Fit(_) => 3,
            CascadeError::Argument(_) | CascadeError::Numerical(_) => 4,
            CascadeError::Context { source, .. } => source.exit_code(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_wrapped_error() {
        assert_eq!(CascadeError::config("alpha", "x").exit_code(), 2);
        assert_eq!(CascadeError::parse(3, "x").exit_code(), 3);
        assert_eq!(CascadeError::Numerical("x".into()).exit_code(), 4);
        let wrapped = CascadeError::parse(2, "bad").context("method split");
        assert_eq!(wrapped.exit_code(), 3);
        assert!(wrapped.to_string().contains("method split"));
    }
}
