//! Domain types shared by every part of the archive.

mod dataset;
mod identifier;
mod record;
mod schema;
mod temporal;
mod value;

pub use dataset::{DatasetInstantiation, DiachronicDataset, SourceModel};
pub use identifier::{
    dataset_slug, encode_component, join_key, mint_identifier, resource_context_id, slugify, IdKind,
    Identifier, Scheme, Scope, ARCHIVE_PREFIX, BLANK_PREFIX,
};
pub use record::{hash_record_set, sha256_hex, Fact, Record, RecordAttribute, RecordSet};
pub(crate) use record::{escape, unescape};
pub use schema::{Range, SchemaKind, SchemaObject, SchemaVersion, SourceConstruct};
pub use temporal::{Interval, ProvenanceInfo, TemporalAnnotation};
pub use value::{canonicalize_value, format_timestamp, parse_timestamp, DataType, Literal, Object};

/// The built-in type-assertion predicate.
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
pub const RDFS_RESOURCE: &str = "http://www.w3.org/2000/01/rdf-schema#Resource";

pub fn rdf_type() -> Identifier {
    Identifier::uri(RDF_TYPE).expect("constant is a valid identifier")
}
