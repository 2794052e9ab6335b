//! Crate-wide error type. Variants name the pipeline stage that failed so
//! callers can surface (and exit-code) the failing stage directly.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image: {0}")]
    Image(String),
    #[error("annotation: {0}")]
    Annotation(String),
    #[error("curve: {0}")]
    Curve(String),
    #[error("seam: {0}")]
    Seam(String),
    #[error("integrate: {0}")]
    Integrate(String),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("synth: {0}")]
    Synth(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
