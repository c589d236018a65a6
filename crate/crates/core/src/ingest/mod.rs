//! Source parsers, the three mapping procedures (relational, multidimensional,
//! RDF) and canonical re-serialization of archived versions.

mod config;
mod csv;
mod cube;
mod export;
mod ntriples;
mod rdf;
mod relational;

pub use self::config::{ColumnSpec, CubeColumn, CubeConfig, CubeRole, RelationalConfig, SourceConfig};
pub use self::csv::{parse_csv, write_csv, CsvRow};
pub use cube::map_multidimensional;
pub use export::{export_canonical, export_records};
pub use ntriples::{format_triple, parse_ntriples, skolemize, Triple};
pub use rdf::map_rdf;
pub use relational::map_relational;

use crate::error::{Error, Result};
use crate::model::{dataset_slug, Identifier, RecordSet, SchemaVersion};

pub(crate) fn dataset_component(dataset: &Identifier) -> Result<&str> {
    dataset_slug(dataset).ok_or_else(|| Error::InvalidConfig(format!("{dataset} is not a dataset identifier")))
}

/// Parses `text` in the format implied by `config` and maps it.
pub fn ingest_text(config: &SourceConfig, text: &str, dataset: &Identifier) -> Result<(SchemaVersion, RecordSet)> {
    match config {
        SourceConfig::Relational(cfg) => {
            cfg.validate()?;
            map_relational(&parse_csv(text, &cfg.column_names())?, cfg, dataset)
        }
        SourceConfig::Multidimensional(cfg) => {
            cfg.validate()?;
            map_multidimensional(&parse_csv(text, &cfg.column_names())?, cfg, dataset)
        }
        SourceConfig::Rdf => map_rdf(&parse_ntriples(text)?, dataset),
    }
}

/// Restores source-specific record ids on a record set read back from its
/// facts file.
pub(crate) fn restore_record_ids(config: &SourceConfig, rs: RecordSet, dataset: &Identifier) -> Result<RecordSet> {
    match config {
        SourceConfig::Relational(cfg) => relational::restore_record_ids(rs, cfg, dataset),
        SourceConfig::Multidimensional(cfg) => cube::restore_record_ids(rs, cfg, dataset),
        SourceConfig::Rdf => Ok(rs),
    }
}
