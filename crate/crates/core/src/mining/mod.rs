//! Mining over cubes: aggregation by clustering ([`opac`]), correspondence
//! analysis arrangement ([`mca`]) and association rules ([`rules`]).

pub mod mca;
pub mod opac;
pub mod rules;
