//! Test support for `xdw`: golden documents, seeded generators and
//! brute-force reference implementations written from the definitions,
//! independent of the engine's algorithms. Only the engine's data types are
//! shared.
//!
//! [`checks`] bundles the acceptance properties so the per-crate suites and
//! the acceptance runner evaluate the same thing.

pub mod ahc;
pub mod apriori;
pub mod checks;
pub mod cube;
pub mod gen;
pub mod golden;
pub mod mca;
