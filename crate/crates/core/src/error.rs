use thiserror::Error;

use crate::config::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error:\n{}", format_diagnostics(.0))]
    Config(Vec<Diagnostic>),

    #[error("circuit validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("stiffness: step size fell below dt_min at t = {time:e} s (node {node})")]
    Stiffness { time: f64, node: String },

    #[error("relay {relay} exceeded its lifetime of {max_cycles} cycles at t = {time:e} s")]
    LifetimeExceeded {
        relay: String,
        max_cycles: f64,
        time: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown template '{0}'")]
    UnknownTemplate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}
