//! The bug-and-fix description language: constructs, per-language syntax
//! templates and bug-fix patterns.
//!
//! [`parse_spec`] turns `.bugfix` source into a [`SpecUnit`];
//! [`render_spec`] prints a unit back in canonical form (ASCII operators,
//! 4-space indent, one declaration per block). Parsing the canonical output
//! yields a structurally equal unit.

mod ast;
mod lexer;
mod parser;
mod printer;

pub use ast::*;
pub use parser::RESERVED_FIELDS;
pub use printer::{render_spec, render_template};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{line}:{col}: syntax error at `{token}`: {message}")]
    Syntax {
        line: usize,
        col: usize,
        token: String,
        message: String,
    },
    #[error("{line}:{col}: duplicate {kind} `{name}`")]
    Duplicate {
        kind: &'static str,
        name: String,
        line: usize,
        col: usize,
    },
}

impl SpecError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            SpecError::Syntax { line, col, .. } | SpecError::Duplicate { line, col, .. } => {
                (*line, *col)
            }
        }
    }
}

/// Parses DSL source. `source_name` is recorded on the unit for diagnostics.
pub fn parse_spec(text: &str) -> Result<SpecUnit, SpecError> {
    parser::parse_spec(text, "")
}

pub fn parse_spec_named(text: &str, source_name: &str) -> Result<SpecUnit, SpecError> {
    parser::parse_spec(text, source_name)
}
