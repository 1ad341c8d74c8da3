//! An XML-native data warehouse engine.
//!
//! A warehouse is three kinds of documents: the schema (`dw-model.xml`), one
//! member document per dimension and one fact document. On top of that
//! document model the crate provides
//!
//! - [`cube`]: data cubes and the nine operators cube, rotate, switch,
//!   roll-up, drill-down, slice, dice, pull and push;
//! - [`evolution`]: "if-then" aggregation rules that add a hierarchy level;
//! - [`mining`]: clustering-based aggregation, correspondence-analysis cube
//!   arrangement and association rules mined from cube aggregates;
//! - [`ingest`] and [`fixtures`]: CSV loading and seeded demo warehouses.

pub mod cube;
pub mod documents;
pub mod error;
pub mod evolution;
pub mod fixtures;
pub mod ingest;
pub mod mining;
pub mod model;
pub mod validate;
mod xml;

pub use error::{Error, Location, Result};
pub use model::{
    DimensionData, DimensionSpec, FactRow, FactSpec, FactTable, Hierarchy, Instance, LevelSpec,
    Warehouse, WarehouseModel,
};
pub use validate::{validate_warehouse, Finding, FindingKind, ValidationReport};
