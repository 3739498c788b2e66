//! Crate-wide error type.

use std::collections::BTreeSet;

use crate::solution::Variable;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Parse(#[from] crate::parse::ParseError),

    #[error("{path}:{line}: malformed N-Triples: {message}")]
    Ntriples {
        path: String,
        line: usize,
        message: String,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "query is not web-bounded: no finite lookup strategy covers {{{}}}",
        missing.iter().map(Variable::to_string).collect::<Vec<_>>().join(", ")
    )]
    NotWebBounded { missing: BTreeSet<Variable> },

    #[error("lookup budget exceeded: more than {limit} distinct IRIs required")]
    LookupBudgetExceeded { limit: u64 },

    #[error("{operation} requires an omniscient backend, not live lookups")]
    OmniscienceRequired { operation: &'static str },

    #[error("backend failure: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, Error>;
