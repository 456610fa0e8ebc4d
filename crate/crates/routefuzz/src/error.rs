use std::path::PathBuf;

use thiserror::Error;

/// Unified error type. Variants map onto the four failure classes surfaced by
/// file loading (io, parse, schema, invariant) plus `Config` for invalid
/// runtime arguments such as mismatched parameter lists or a zero frame budget.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("schema error in {path}: schema_version {found} is not supported (expected {expected})")]
    SchemaVersion {
        path: PathBuf,
        found: u64,
        expected: u64,
    },

    /// Structural mismatch against the documented format: unknown or missing
    /// fields, wrong types. The message names the offending field.
    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    /// A structurally valid document whose content breaks a documented rule.
    /// `field` is the path of the offending value, e.g. `keypoints[0].location`.
    #[error("invariant violation at {field}: {message}")]
    Invariant { field: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            field: field.into(),
            message: message.into(),
        }
    }
}
