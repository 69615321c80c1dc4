//! The compact language: syntax, parsing, printing and static checks.

mod ast;
mod check;
mod lexer;
mod observability;
mod parser;
mod printer;

use thiserror::Error;

pub use ast::*;
pub use check::{
    check_well_formedness, fact_attributes, has_errors, instance_key, Diagnostic, DiagnosticKind,
    Severity,
};
pub use observability::{check_observability, ObservabilityGap};
pub use parser::parse_compact;
pub use printer::{condition as print_condition, pretty_print};

/// First syntax error in a compact file. Positions are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: error: {message} (found `{token}`)")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub token: String,
}
