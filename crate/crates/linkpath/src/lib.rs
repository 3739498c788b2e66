//! Property path queries over a Web of Linked Data.
//!
//! The crate models RDF graphs and SPARQL-style property path patterns,
//! evaluates them under three semantics (standard, over a single graph;
//! full-Web, over the union of all documents; context-based, over the
//! authoritative subject contexts of the documents), decides statically
//! whether a pattern can be answered completely by following links, and
//! runs the lookup-driven evaluation for patterns that can.

pub mod ast;
pub mod ctx_eval;
pub mod error;
pub mod http;
pub mod ntriples;
pub mod parse;
pub mod safety;
pub mod solution;
pub mod std_eval;
pub mod term;
pub mod wold;

pub use ast::{fresh_variable, GraphPattern, PatternTerm, PpExpression, PpPattern};
pub use ctx_eval::{alpw1, eval_ctx_based, eval_ctx_reference, exec_alpw1, EvalConfig};
pub use error::{Error, Result};
pub use http::HttpWeb;
pub use safety::{analyze, cbv, certifies, is_web_safe, Analyzer, RuleTrace, SafetyReport};
pub use std_eval::{alp1, eval_fullweb, eval_graph_pattern, eval_pattern};
pub use parse::{parse_iri, parse_query, ParseError};
pub use solution::{SolutionMapping, SolutionMultiset, Variable};
pub use term::{BlankNode, Graph, Iri, Literal, LiteralKind, Term, Triple};
pub use wold::{load_fixture, Document, FixtureWeb, Ledger, LookupOutcome, Web, Wold};
