//! Reified identifiers and the `evoarch:` URI template.
//!
//! Every entity in the archive (datasets, versions, record subjects, schema
//! objects, resources) is named by an [`Identifier`]. Identifiers minted by
//! the archive follow a fixed template so that the same inputs always yield
//! the same name:
//!
//! ```text
//! evoarch:ds/<dataset>                 diachronic dataset
//! evoarch:ds/<dataset>/v/<version>     dataset instantiation
//! evoarch:ds/<dataset>/rec/<key>       record subject
//! evoarch:ds/<dataset>/schema/<name>   schema object
//! evoarch:res/<name>                   diachronic resource
//! ```
//!
//! Each component is percent-encoded for `/ % | space tab CR LF`, so a
//! component can never introduce a path separator of its own.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const ARCHIVE_PREFIX: &str = "evoarch:";
const DATASET_PREFIX: &str = "evoarch:ds/";
const RESOURCE_PREFIX: &str = "evoarch:res/";

/// Blank-node labels are skolemized into opaque identifiers with this prefix.
pub const BLANK_PREFIX: &str = "_:";

/// Percent-encodes one template component. Only the reserved characters
/// are escaped; everything else, including non-ASCII text, passes through.
pub fn encode_component(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '/' | '%' | '|' | ' ' | '\t' | '\n' | '\r' => out.push_str(&format!("%{:02X}", c as u32)),
            _ => out.push(c),
        }
    }
    out
}

/// Joins key values into a single record-key component. Each value is
/// encoded first so that a `|` inside a value cannot be confused with the
/// separator.
pub fn join_key<S: AsRef<str>>(values: &[S]) -> String {
    values
        .iter()
        .map(|v| encode_component(v.as_ref()))
        .collect::<Vec<_>>()
        .join("|")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Uri,
    CompositeKey,
    Opaque,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Diachronic,
    VersionSpecific,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdKind {
    DiachronicDataset,
    Version,
    Record,
    SchemaObject,
    Resource,
}

impl IdKind {
    fn name(self) -> &'static str {
        match self {
            IdKind::DiachronicDataset => "diachronic-dataset",
            IdKind::Version => "version",
            IdKind::Record => "record",
            IdKind::SchemaObject => "schema-object",
            IdKind::Resource => "resource",
        }
    }
}

/// A reified identifier. Equality, ordering and hashing consider only the
/// scheme and canonical value; scope and functional metadata ride along.
#[derive(Clone, Debug)]
pub struct Identifier {
    scheme: Scheme,
    value: String,
    scope: Scope,
    meta: BTreeMap<String, String>,
}

impl Identifier {
    pub fn new(scheme: Scheme, value: impl Into<String>, scope: Scope) -> Result<Self> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(Error::ValueSyntax {
                lexical: value,
                datatype: "identifier".into(),
            });
        }
        Ok(Self {
            scheme,
            value,
            scope,
            meta: BTreeMap::new(),
        })
    }

    /// Reconstructs an identifier from its canonical value alone, as stored
    /// in facts and change-set files. The scheme is `opaque` for skolemized
    /// blank nodes and `uri` otherwise; scope follows the archive template.
    pub fn parse(value: &str) -> Result<Self> {
        let scheme = if value.starts_with(BLANK_PREFIX) {
            Scheme::Opaque
        } else {
            Scheme::Uri
        };
        Self::new(scheme, value, infer_scope(value))
    }

    /// Shorthand for a version-specific `uri` identifier.
    pub fn uri(value: &str) -> Result<Self> {
        Self::new(Scheme::Uri, value, infer_scope(value))
    }

    /// A composite-key identifier; `columns` names the key fields in order.
    pub fn composite_key<S: AsRef<str>>(values: &[S], columns: &[S]) -> Result<Self> {
        let mut id = Self::new(Scheme::CompositeKey, join_key(values), Scope::VersionSpecific)?;
        let cols = columns.iter().map(|c| c.as_ref()).collect::<Vec<_>>().join(",");
        id.meta.insert("columns".into(), cols);
        Ok(id)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn as_str(&self) -> &str {
        &self.value
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    /// Key columns of a composite-key identifier, in order.
    pub fn key_columns(&self) -> Vec<&str> {
        self.meta
            .get("columns")
            .map(|c| c.split(',').collect())
            .unwrap_or_default()
    }
}

fn infer_scope(value: &str) -> Scope {
    let rest = value
        .strip_prefix(DATASET_PREFIX)
        .or_else(|| value.strip_prefix(RESOURCE_PREFIX));
    match rest {
        Some(rest) if !rest.contains('/') => Scope::Diachronic,
        _ => Scope::VersionSpecific,
    }
}

impl PartialEq for Identifier {
    fn eq(&self, other: &Self) -> bool {
        self.scheme == other.scheme && self.value == other.value
    }
}

impl Eq for Identifier {}

impl Hash for Identifier {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.scheme.hash(state);
        self.value.hash(state);
    }
}

impl Ord for Identifier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .as_bytes()
            .cmp(other.value.as_bytes())
            .then(self.scheme.cmp(&other.scheme))
    }
}

impl PartialOrd for Identifier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.value)
    }
}

impl Serialize for Identifier {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.value)
    }
}

impl<'de> Deserialize<'de> for Identifier {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Identifier::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Mints an archive identifier from its template components.
///
/// | kind               | components                  | result                              |
/// |--------------------|-----------------------------|-------------------------------------|
/// | diachronic-dataset | `[ds]`                      | `evoarch:ds/<ds>`                   |
/// | version            | `[ds, v]`                   | `evoarch:ds/<ds>/v/<v>`             |
/// | record             | `[ds, "pk", key]`           | `evoarch:ds/<ds>/rec/<key>`         |
/// | record             | `[ds, tag, key]`            | `evoarch:ds/<ds>/rec/<tag>/<key>`   |
/// | schema-object      | `[ds, name, ...]`           | `evoarch:ds/<ds>/schema/<name>/...` |
/// | resource           | `[name]`                    | `evoarch:res/<name>`                |
pub fn mint_identifier<S: AsRef<str>>(kind: IdKind, components: &[S]) -> Result<Identifier> {
    if components.is_empty() {
        return Err(Error::InvalidIdentifierComponent { index: 0 });
    }
    if let Some(index) = components.iter().position(|c| c.as_ref().is_empty()) {
        return Err(Error::InvalidIdentifierComponent { index });
    }
    let enc: Vec<String> = components.iter().map(|c| encode_component(c.as_ref())).collect();
    let arity = |expected: &'static str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(Error::IdentifierArity {
                kind: kind.name(),
                expected,
                got: components.len(),
            })
        }
    };
    let (value, scope) = match kind {
        IdKind::DiachronicDataset => {
            arity("1", enc.len() == 1)?;
            (format!("{DATASET_PREFIX}{}", enc[0]), Scope::Diachronic)
        }
        IdKind::Version => {
            arity("2", enc.len() == 2)?;
            (format!("{DATASET_PREFIX}{}/v/{}", enc[0], enc[1]), Scope::VersionSpecific)
        }
        IdKind::Record => {
            arity("3", enc.len() == 3)?;
            let value = if enc[1] == "pk" {
                format!("{DATASET_PREFIX}{}/rec/{}", enc[0], enc[2])
            } else {
                format!("{DATASET_PREFIX}{}/rec/{}/{}", enc[0], enc[1], enc[2])
            };
            (value, Scope::VersionSpecific)
        }
        IdKind::SchemaObject => {
            arity("at least 2", enc.len() >= 2)?;
            (
                format!("{DATASET_PREFIX}{}/schema/{}", enc[0], enc[1..].join("/")),
                Scope::VersionSpecific,
            )
        }
        IdKind::Resource => {
            arity("1", enc.len() == 1)?;
            (format!("{RESOURCE_PREFIX}{}", enc[0]), Scope::Diachronic)
        }
    };
    Identifier::new(Scheme::Uri, value, scope)
}

/// The version-specific identifier of a resource context.
pub fn resource_context_id(resource: &str, version: &str) -> Result<Identifier> {
    let base = mint_identifier(IdKind::Resource, &[resource])?;
    Identifier::new(
        Scheme::Uri,
        format!("{base}/v/{}", encode_component(version)),
        Scope::VersionSpecific,
    )
}

/// Extracts the dataset slug from a dataset identifier (or any identifier
/// minted under one).
pub fn dataset_slug(id: &Identifier) -> Option<&str> {
    let rest = id.as_str().strip_prefix(DATASET_PREFIX)?;
    let slug = rest.split('/').next().unwrap_or(rest);
    (!slug.is_empty()).then_some(slug)
}

/// Dataset slug: lowercase ASCII alphanumerics, every other run of
/// characters collapsed to one hyphen, no leading or trailing hyphen.
pub fn slugify(title: &str) -> Result<String> {
    let mut slug = String::with_capacity(title.len());
    for c in title.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else if !slug.is_empty() && !slug.ends_with('-') {
            slug.push('-');
        }
    }
    while slug.ends_with('-') {
        slug.pop();
    }
    if slug.is_empty() {
        return Err(Error::InvalidIdentifierComponent { index: 0 });
    }
    Ok(slug)
}
