use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Identifier, ProvenanceInfo, TemporalAnnotation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceModel {
    Relational,
    Multidimensional,
    Rdf,
}

impl SourceModel {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceModel::Relational => "relational",
            SourceModel::Multidimensional => "multidimensional",
            SourceModel::Rdf => "rdf",
        }
    }
}

impl fmt::Display for SourceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relational" => Ok(SourceModel::Relational),
            "multidimensional" | "cube" => Ok(SourceModel::Multidimensional),
            "rdf" => Ok(SourceModel::Rdf),
            other => Err(Error::InvalidConfig(format!("unknown source model `{other}`"))),
        }
    }
}

/// The time-agnostic identity of a dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiachronicDataset {
    pub diachronic_id: Identifier,
    pub title: String,
    pub source_model: SourceModel,
    pub version_ids: Vec<Identifier>,
}

/// One committed version of a diachronic dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInstantiation {
    pub version_id: Identifier,
    pub diachronic_id: Identifier,
    pub temporal: TemporalAnnotation,
    pub provenance: ProvenanceInfo,
    pub schema_version_id: Identifier,
    pub record_set_hash: String,
}
