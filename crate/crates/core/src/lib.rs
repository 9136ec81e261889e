//! A grammar of experimental designs.
//!
//! Designs are described declaratively, either through the verbs on
//! [`model::Design`] or as a `.ged` program, and are held as a pair of
//! graphs: a factor graph of units, treatments and records, and a level
//! graph of their levels. Seeded assignment links treatment levels to unit
//! levels within their nesting groups, and [`serve::serve_table`] flattens
//! the result into a design table.

pub mod cli;
pub mod dsl;
pub mod engine;
pub mod model;
pub mod serve;

pub use dsl::{build, parse, DesignSpec, ParseError};
pub use engine::{Command, EngineError, Rng};
pub use model::{AssignmentSpec, Design, Order, Role};
pub use serve::{serve_table, to_csv, DesignTable, ServeError};
