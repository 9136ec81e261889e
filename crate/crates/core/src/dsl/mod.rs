//! The `.ged` design language.
//!
//! ```text
//! design "Fisher's split-plot design" {
//!   units {
//!     patch = 36
//!     plot = nested_in(patch, 3)
//!   }
//!   trts {
//!     variety = 12
//!     fertilizer = ["basal", "sulphate", "chloride"]
//!   }
//!   rcrds {
//!     yield on plot
//!     biomass on patch
//!   }
//!   allot {
//!     variety ~ patch
//!     fertilizer ~ plot
//!   }
//!   assign [random, random] seed 1
//! }
//! ```
//!
//! Block keywords and `nested_in`, `on`, `seed`, `random`, `systematic` are
//! contextual; they are ordinary identifiers everywhere else.

pub mod ast;
mod lexer;
mod lower;
mod parser;
mod printer;

use std::fmt;

pub use ast::*;
pub use lexer::{tokenize, Pos, Token, TokenKind};
pub use lower::{build, lower};
pub use parser::parse;
pub use printer::print;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn expecting(mut self, expected: Vec<String>) -> Self {
        self.expected = expected;
        self
    }

    pub fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        match self.expected.as_slice() {
            [] => Ok(()),
            [one] => write!(f, "; expected {one}"),
            many => write!(f, "; expected one of {}", many.join(", ")),
        }
    }
}

impl std::error::Error for ParseError {}
