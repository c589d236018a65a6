//! Diachronic resources: curator-defined views over one dataset's records,
//! evaluated per version into resource contexts.

use std::collections::BTreeSet;
use std::fs;
use std::io::ErrorKind;

use serde::{Deserialize, Serialize};

use crate::delta::{compute_delta, derive_high_level, ChangeRule, ChangeSet};
use crate::error::{Error, Result};
use crate::model::{
    mint_identifier, resource_context_id, DataType, Fact, IdKind, Identifier, Literal, Object,
    RecordSet,
};
use crate::store::{atomic_write, Archive};

pub const MAX_DEPTH: u32 = 3;

/// An object value in a resource condition, as written in a `.def` file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ConditionValue {
    Ref(Identifier),
    Lit {
        lexical: String,
        #[serde(default = "string_type")]
        datatype: DataType,
    },
}

fn string_type() -> DataType {
    DataType::String
}

impl ConditionValue {
    pub fn to_object(&self) -> Result<Object> {
        match self {
            ConditionValue::Ref(id) => Ok(Object::Ref(id.clone())),
            ConditionValue::Lit { lexical, datatype } => Literal::new(lexical, *datatype).map(Object::Literal),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub predicate: Identifier,
    pub object: ConditionValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ResourceIdentification {
    ExplicitSubjects { subjects: Vec<Identifier> },
    PredicateValueCondition { condition: Condition },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateFilter {
    All,
    Whitelist(Vec<Identifier>),
}

impl PredicateFilter {
    fn accepts(&self, predicate: &Identifier) -> bool {
        match self {
            PredicateFilter::All => true,
            PredicateFilter::Whitelist(list) => list.contains(predicate),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceDescription {
    pub predicates: PredicateFilter,
    #[serde(default)]
    pub depth: u32,
}

impl ResourceDescription {
    pub fn all(depth: u32) -> Self {
        Self {
            predicates: PredicateFilter::All,
            depth,
        }
    }
}

/// The `.def` file contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceDefinition {
    pub name: String,
    pub dataset: Identifier,
    pub identification: ResourceIdentification,
    pub description: ResourceDescription,
}

impl ResourceDefinition {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || self.name.starts_with('.')
        {
            return Err(Error::InvalidResource(format!("invalid resource name `{}`", self.name)));
        }
        if self.description.depth > MAX_DEPTH {
            return Err(Error::InvalidResource(format!(
                "expansion depth {} exceeds {MAX_DEPTH}",
                self.description.depth
            )));
        }
        match &self.identification {
            ResourceIdentification::ExplicitSubjects { subjects } if subjects.is_empty() => {
                Err(Error::InvalidResource("explicit identification lists no subjects".into()))
            }
            ResourceIdentification::PredicateValueCondition { condition } => {
                condition.object.to_object().map_err(|e| Error::InvalidResource(e.to_string()))?;
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiachronicResource {
    pub resource_id: Identifier,
    pub dataset_id: Identifier,
    pub definition: ResourceDefinition,
}

impl DiachronicResource {
    pub fn from_definition(definition: ResourceDefinition) -> Result<Self> {
        definition.validate()?;
        Ok(Self {
            resource_id: mint_identifier(IdKind::Resource, &[&definition.name])?,
            dataset_id: definition.dataset.clone(),
            definition,
        })
    }

    pub fn name(&self) -> &str {
        &self.definition.name
    }

    /// Evaluates the resource over one version's records.
    pub fn evaluate_records(&self, version_id: &Identifier, records: &RecordSet) -> Result<ResourceContext> {
        let description = &self.definition.description;
        let matched: Vec<Identifier> = match &self.definition.identification {
            ResourceIdentification::ExplicitSubjects { subjects } => {
                let set: BTreeSet<&Identifier> = subjects.iter().filter(|s| records.get(s).is_some()).collect();
                set.into_iter().cloned().collect()
            }
            ResourceIdentification::PredicateValueCondition { condition } => {
                let object = condition.object.to_object()?;
                records
                    .records()
                    .filter(|r| r.attributes.iter().any(|a| a.predicate == condition.predicate && a.object == object))
                    .map(|r| r.subject_id.clone())
                    .collect()
            }
        };

        let mut facts = BTreeSet::new();
        let mut visited: BTreeSet<&Identifier> = BTreeSet::new();
        let mut level: Vec<&Identifier> = matched.iter().collect();
        for k in 0..=description.depth {
            let mut next = Vec::new();
            for subject in level {
                if !visited.insert(subject) {
                    continue;
                }
                let Some(record) = records.get(subject) else { continue };
                for a in record.attributes.iter().filter(|a| description.predicates.accepts(&a.predicate)) {
                    facts.insert(Fact {
                        subject: subject.clone(),
                        attribute: a.clone(),
                    });
                    if k < description.depth {
                        if let Some((target, _)) = a.object.as_ref_id().and_then(|t| records.get(t).map(|r| (t, r))) {
                            next.push(target);
                        }
                    }
                }
            }
            level = next;
        }
        Ok(ResourceContext {
            context_id: resource_context_id(self.name(), version_label(version_id))?,
            resource_id: self.resource_id.clone(),
            version_id: version_id.clone(),
            matched_subjects: matched,
            facts,
        })
    }
}

fn version_label(version: &Identifier) -> &str {
    version.as_str().rsplit('/').next().unwrap_or(version.as_str())
}

/// A resource materialized over one version.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceContext {
    pub context_id: Identifier,
    pub resource_id: Identifier,
    pub version_id: Identifier,
    pub matched_subjects: Vec<Identifier>,
    pub facts: BTreeSet<Fact>,
}

pub fn define_resource(
    archive: &Archive,
    dataset: &Identifier,
    identification: ResourceIdentification,
    description: ResourceDescription,
    name: &str,
) -> Result<DiachronicResource> {
    let resource = DiachronicResource::from_definition(ResourceDefinition {
        name: name.to_string(),
        dataset: dataset.clone(),
        identification,
        description,
    })?;
    archive.dataset(dataset)?;
    let _lock = archive.writer_lock()?;
    let path = archive.resources_dir().join(format!("{name}.def"));
    if path.exists() {
        return Err(Error::ResourceExists(name.to_string()));
    }
    let json = serde_json::to_vec_pretty(&resource.definition).map_err(|e| Error::json(&path, e))?;
    atomic_write(&path, &json)?;
    Ok(resource)
}

pub fn load_resource(archive: &Archive, name: &str) -> Result<DiachronicResource> {
    let path = archive.resources_dir().join(format!("{name}.def"));
    let bytes = fs::read(&path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::ResourceNotFound(name.to_string()),
        _ => Error::io(&path, e),
    })?;
    let definition: ResourceDefinition =
        serde_json::from_slice(&bytes).map_err(|e| Error::CorruptArchive(format!("{}: {e}", path.display())))?;
    DiachronicResource::from_definition(definition)
}

pub fn list_resources(archive: &Archive) -> Result<Vec<String>> {
    let dir = archive.resources_dir();
    let mut names = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        if let Some(name) = entry.file_name().to_str().and_then(|n| n.strip_suffix(".def")) {
            names.push(name.to_string());
        }
    }
    names.sort();
    Ok(names)
}

pub fn evaluate_resource(archive: &Archive, resource: &DiachronicResource, version: &Identifier) -> Result<ResourceContext> {
    check_version(resource, version)?;
    let loaded = archive.get_version(&resource.dataset_id, version)?;
    resource.evaluate_records(version, &loaded.records)
}

fn check_version(resource: &DiachronicResource, version: &Identifier) -> Result<()> {
    let expected = format!("{}/v/", resource.dataset_id);
    if !version.as_str().starts_with(&expected) {
        return Err(Error::DatasetMismatch {
            left: resource.dataset_id.to_string(),
            right: version.to_string(),
        });
    }
    Ok(())
}

/// The dataset delta between two versions restricted to the facts of the
/// two resource contexts. Schema changes are dropped; high-level rules run
/// on the restricted set and every high-level change names the resource.
pub fn resource_diff(
    archive: &Archive,
    resource: &DiachronicResource,
    from: &Identifier,
    to: &Identifier,
    rules: &[ChangeRule],
) -> Result<ChangeSet> {
    check_version(resource, from)?;
    check_version(resource, to)?;
    let a = archive.get_version(&resource.dataset_id, from)?;
    let b = archive.get_version(&resource.dataset_id, to)?;
    let ca = resource.evaluate_records(from, &a.records)?;
    let cb = resource.evaluate_records(to, &b.records)?;
    let full = compute_delta(a.view(), b.view())?;
    Ok(restrict_to_contexts(full, resource, &ca, &cb, rules))
}

/// Restricts `full` to the union of two contexts and derives high-level
/// changes on the result.
pub fn restrict_to_contexts(
    full: ChangeSet,
    resource: &DiachronicResource,
    from: &ResourceContext,
    to: &ResourceContext,
    rules: &[ChangeRule],
) -> ChangeSet {
    let mut cs = full.restrict(|f| from.facts.contains(f) || to.facts.contains(f), |_| false);
    cs.high_level.clear();
    let mut cs = derive_high_level(cs, rules);
    for hl in &mut cs.high_level {
        hl.context.push(resource.resource_id.clone());
    }
    cs
}
