use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DataType;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub datatype: DataType,
}

/// How a CSV table maps onto records: one record per row, keyed by the
/// primary-key columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationalConfig {
    pub table_name: String,
    pub columns: Vec<ColumnSpec>,
    pub primary_key: Vec<String>,
}

impl RelationalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.table_name.is_empty() {
            return Err(Error::InvalidConfig("table_name is empty".into()));
        }
        unique_names(self.columns.iter().map(|c| c.name.as_str()))?;
        if self.primary_key.is_empty() {
            return Err(Error::InvalidConfig("primary_key is empty".into()));
        }
        for key in &self.primary_key {
            if !self.columns.iter().any(|c| &c.name == key) {
                return Err(Error::InvalidConfig(format!(
                    "primary key column `{key}` is not a declared column"
                )));
            }
        }
        unique_names(self.primary_key.iter().map(String::as_str))
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn key_positions(&self) -> Vec<usize> {
        self.primary_key
            .iter()
            .filter_map(|k| self.columns.iter().position(|c| &c.name == k))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubeRole {
    Dimension,
    Measure,
    Attribute,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeColumn {
    pub name: String,
    pub role: CubeRole,
    pub datatype: DataType,
}

/// A data cube laid out as CSV: one observation per row, identified by its
/// dimension values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeConfig {
    pub columns: Vec<CubeColumn>,
}

impl CubeConfig {
    pub fn validate(&self) -> Result<()> {
        unique_names(self.columns.iter().map(|c| c.name.as_str()))?;
        let has = |role| self.columns.iter().any(|c| c.role == role);
        if !has(CubeRole::Dimension) || !has(CubeRole::Measure) {
            return Err(Error::InvalidConfig(
                "a cube needs at least one dimension and one measure".into(),
            ));
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn dimension_positions(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.columns[i].role == CubeRole::Dimension)
            .collect()
    }
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in names {
        if name.is_empty() {
            return Err(Error::InvalidConfig("empty column name".into()));
        }
        if !seen.insert(name) {
            return Err(Error::InvalidConfig(format!("duplicate column `{name}`")));
        }
    }
    Ok(())
}

/// Mapping configuration persisted alongside each committed version.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SourceConfig {
    Relational(RelationalConfig),
    Multidimensional(CubeConfig),
    Rdf,
}

impl SourceConfig {
    pub fn model(&self) -> crate::model::SourceModel {
        use crate::model::SourceModel;
        match self {
            SourceConfig::Relational(_) => SourceModel::Relational,
            SourceConfig::Multidimensional(_) => SourceModel::Multidimensional,
            SourceConfig::Rdf => SourceModel::Rdf,
        }
    }
}
