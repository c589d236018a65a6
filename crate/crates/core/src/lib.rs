//! Versioned archive for evolving relational, multidimensional and RDF
//! datasets.
//!
//! Sources are mapped into one record-based model ([`model`]), committed as
//! immutable, time-stamped versions of a diachronic dataset ([`store`]),
//! compared through low- and high-level change sets ([`delta`]), viewed
//! through curator-defined diachronic resources ([`resource`]) and queried
//! through snapshot, longitudinal, change and mixed queries ([`query`]).

pub mod delta;
pub mod error;
pub mod ingest;
pub mod model;
pub mod query;
pub mod resource;
pub mod store;

pub use error::{Error, Result};
