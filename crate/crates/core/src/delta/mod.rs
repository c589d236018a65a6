//! Low-level deltas between two versions, their application and inversion,
//! and rule-driven derivation of high-level changes.

mod csfile;
mod rules;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub use rules::{apply_rules, derive_high_level, ChangeRule};

use crate::error::{Error, Result};
use crate::model::{
    Fact, Identifier, Record, RecordAttribute, RecordSet, SchemaObject, SchemaVersion,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChangeOp {
    AddAttribute,
    AddRecord,
    AddSchemaObject,
    DeleteAttribute,
    DeleteRecord,
    DeleteSchemaObject,
}

impl ChangeOp {
    pub const ALL: [ChangeOp; 6] = [
        ChangeOp::AddAttribute,
        ChangeOp::AddRecord,
        ChangeOp::AddSchemaObject,
        ChangeOp::DeleteAttribute,
        ChangeOp::DeleteRecord,
        ChangeOp::DeleteSchemaObject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeOp::AddAttribute => "add-attribute",
            ChangeOp::AddRecord => "add-record",
            ChangeOp::AddSchemaObject => "add-schema-object",
            ChangeOp::DeleteAttribute => "delete-attribute",
            ChangeOp::DeleteRecord => "delete-record",
            ChangeOp::DeleteSchemaObject => "delete-schema-object",
        }
    }

    pub fn is_add(self) -> bool {
        matches!(self, ChangeOp::AddAttribute | ChangeOp::AddRecord | ChangeOp::AddSchemaObject)
    }

    pub fn inverse(self) -> ChangeOp {
        match self {
            ChangeOp::AddAttribute => ChangeOp::DeleteAttribute,
            ChangeOp::AddRecord => ChangeOp::DeleteRecord,
            ChangeOp::AddSchemaObject => ChangeOp::DeleteSchemaObject,
            ChangeOp::DeleteAttribute => ChangeOp::AddAttribute,
            ChangeOp::DeleteRecord => ChangeOp::AddRecord,
            ChangeOp::DeleteSchemaObject => ChangeOp::AddSchemaObject,
        }
    }
}

impl fmt::Display for ChangeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChangeOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChangeOp::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| Error::InvalidSelector(format!("unknown change kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Attribute(RecordAttribute),
    Record(Record),
    Schema(SchemaObject),
}

impl Payload {
    fn sort_key(&self) -> (u8, Option<&RecordAttribute>, Option<&BTreeSet<RecordAttribute>>, Option<&SchemaObject>) {
        match self {
            Payload::Attribute(a) => (0, Some(a), None, None),
            Payload::Record(r) => (1, None, Some(&r.attributes), None),
            Payload::Schema(s) => (2, None, None, Some(s)),
        }
    }
}

impl Ord for Payload {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Payload {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An atomic add or delete. Record-level changes carry the record's full
/// attribute set; schema-level changes carry the whole schema object.
/// Ordering is by operation, then subject, then payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LowLevelChange {
    pub op: ChangeOp,
    pub subject: Identifier,
    pub payload: Payload,
}

impl LowLevelChange {
    pub fn attribute(add: bool, fact: Fact) -> Self {
        Self {
            op: if add { ChangeOp::AddAttribute } else { ChangeOp::DeleteAttribute },
            subject: fact.subject,
            payload: Payload::Attribute(fact.attribute),
        }
    }

    pub fn record(add: bool, record: Record) -> Self {
        Self {
            op: if add { ChangeOp::AddRecord } else { ChangeOp::DeleteRecord },
            subject: record.subject_id.clone(),
            payload: Payload::Record(record),
        }
    }

    pub fn schema(add: bool, object: SchemaObject) -> Self {
        Self {
            op: if add { ChangeOp::AddSchemaObject } else { ChangeOp::DeleteSchemaObject },
            subject: object.id.clone(),
            payload: Payload::Schema(object),
        }
    }

    pub fn is_add(&self) -> bool {
        self.op.is_add()
    }

    /// The facts this change adds or deletes (empty for schema changes).
    pub fn facts(&self) -> Vec<Fact> {
        match &self.payload {
            Payload::Attribute(a) => vec![Fact {
                subject: self.subject.clone(),
                attribute: a.clone(),
            }],
            Payload::Record(r) => r.facts().collect(),
            Payload::Schema(_) => Vec::new(),
        }
    }

    pub fn schema_object(&self) -> Option<&SchemaObject> {
        match &self.payload {
            Payload::Schema(s) => Some(s),
            _ => None,
        }
    }

    pub fn inverted(&self) -> Self {
        Self {
            op: self.op.inverse(),
            subject: self.subject.clone(),
            payload: self.payload.clone(),
        }
    }
}

/// A named composition of low-level changes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HighLevelChange {
    pub name: String,
    pub constituents: Vec<LowLevelChange>,
    pub context: Vec<Identifier>,
    pub annotation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChangeSet {
    pub dataset_id: Identifier,
    pub from_version: Identifier,
    pub to_version: Identifier,
    pub low_level: Vec<LowLevelChange>,
    pub high_level: Vec<HighLevelChange>,
}

impl ChangeSet {
    pub fn empty(dataset_id: Identifier, from_version: Identifier, to_version: Identifier) -> Self {
        Self {
            dataset_id,
            from_version,
            to_version,
            low_level: Vec::new(),
            high_level: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.low_level.is_empty() && self.high_level.is_empty()
    }

    /// All facts added, with record-level changes expanded.
    pub fn added_facts(&self) -> BTreeSet<Fact> {
        self.low_level.iter().filter(|c| c.is_add()).flat_map(|c| c.facts()).collect()
    }

    pub fn deleted_facts(&self) -> BTreeSet<Fact> {
        self.low_level.iter().filter(|c| !c.is_add()).flat_map(|c| c.facts()).collect()
    }

    pub fn added_schema(&self) -> BTreeSet<&SchemaObject> {
        self.low_level.iter().filter(|c| c.is_add()).filter_map(|c| c.schema_object()).collect()
    }

    pub fn deleted_schema(&self) -> BTreeSet<&SchemaObject> {
        self.low_level.iter().filter(|c| !c.is_add()).filter_map(|c| c.schema_object()).collect()
    }

    /// Keeps only the low-level changes accepted by `keep` (record changes
    /// are narrowed fact by fact), then drops high-level changes that lost a
    /// constituent.
    pub fn restrict(
        mut self,
        keep_fact: impl Fn(&Fact) -> bool,
        keep_schema: impl Fn(&SchemaObject) -> bool,
    ) -> ChangeSet {
        let mut low = Vec::with_capacity(self.low_level.len());
        for change in self.low_level {
            match &change.payload {
                Payload::Schema(s) => {
                    if keep_schema(s) {
                        low.push(change);
                    }
                }
                Payload::Attribute(_) => {
                    if change.facts().iter().all(&keep_fact) {
                        low.push(change);
                    }
                }
                Payload::Record(_) => {
                    let facts = change.facts();
                    if facts.iter().all(&keep_fact) {
                        low.push(change);
                    } else {
                        let add = change.is_add();
                        low.extend(
                            facts
                                .into_iter()
                                .filter(|f| keep_fact(f))
                                .map(|f| LowLevelChange::attribute(add, f)),
                        );
                    }
                }
            }
        }
        low.sort();
        let kept: BTreeSet<&LowLevelChange> = low.iter().collect();
        self.high_level.retain(|h| h.constituents.iter().all(|c| kept.contains(c)));
        self.low_level = low;
        self
    }

    pub fn to_cs_string(&self) -> String {
        csfile::write(self)
    }

    pub fn parse_cs(text: &str) -> Result<ChangeSet> {
        csfile::parse(text)
    }
}

/// One side of a comparison: a version's schema and records.
#[derive(Clone, Copy, Debug)]
pub struct VersionView<'a> {
    pub dataset_id: &'a Identifier,
    pub version_id: &'a Identifier,
    pub schema: &'a SchemaVersion,
    pub records: &'a RecordSet,
}

/// Low-level delta from `from` to `to`. Subjects present on only one side
/// produce a single record-level change; shared subjects produce
/// attribute-level changes.
pub fn compute_delta(from: VersionView<'_>, to: VersionView<'_>) -> Result<ChangeSet> {
    if from.dataset_id != to.dataset_id {
        return Err(Error::DatasetMismatch {
            left: from.dataset_id.to_string(),
            right: to.dataset_id.to_string(),
        });
    }
    let mut low = Vec::new();

    let old_schema: BTreeSet<&SchemaObject> = from.schema.objects().collect();
    let new_schema: BTreeSet<&SchemaObject> = to.schema.objects().collect();
    low.extend(old_schema.difference(&new_schema).map(|o| LowLevelChange::schema(false, (*o).clone())));
    low.extend(new_schema.difference(&old_schema).map(|o| LowLevelChange::schema(true, (*o).clone())));

    for old in from.records.records() {
        match to.records.get(&old.subject_id) {
            None => low.push(LowLevelChange::record(false, old.clone())),
            Some(new) => {
                for a in old.attributes.difference(&new.attributes) {
                    low.push(LowLevelChange::attribute(false, fact(&old.subject_id, a)));
                }
                for a in new.attributes.difference(&old.attributes) {
                    low.push(LowLevelChange::attribute(true, fact(&old.subject_id, a)));
                }
            }
        }
    }
    for new in to.records.records() {
        if from.records.get(&new.subject_id).is_none() {
            low.push(LowLevelChange::record(true, new.clone()));
        }
    }
    low.sort();
    Ok(ChangeSet {
        dataset_id: from.dataset_id.clone(),
        from_version: from.version_id.clone(),
        to_version: to.version_id.clone(),
        low_level: low,
        high_level: Vec::new(),
    })
}

fn fact(subject: &Identifier, attribute: &RecordAttribute) -> Fact {
    Fact {
        subject: subject.clone(),
        attribute: attribute.clone(),
    }
}

/// Applies `cs` to a base version: deletes first, then adds. Every delete
/// must hit an existing fact or object and no add may already be present.
pub fn apply_delta(
    schema: &SchemaVersion,
    records: &RecordSet,
    cs: &ChangeSet,
) -> Result<(SchemaVersion, RecordSet)> {
    let mut objects: BTreeMap<Identifier, SchemaObject> =
        schema.objects().map(|o| (o.id.clone(), o.clone())).collect();
    let mut by_subject: BTreeMap<Identifier, Record> =
        records.records().map(|r| (r.subject_id.clone(), r.clone())).collect();
    let inapplicable = |change: &LowLevelChange, why: &str| {
        Error::InapplicableDelta(format!("{} {} ({why})", change.op, change.subject))
    };

    let (deletes, adds): (Vec<&LowLevelChange>, Vec<&LowLevelChange>) =
        cs.low_level.iter().partition(|c| !c.is_add());
    for change in deletes.into_iter().chain(adds) {
        match &change.payload {
            Payload::Schema(object) => {
                if change.is_add() {
                    if objects.contains_key(&object.id) {
                        return Err(inapplicable(change, "schema object already present"));
                    }
                    objects.insert(object.id.clone(), object.clone());
                } else if objects.get(&object.id) == Some(object) {
                    objects.remove(&object.id);
                } else {
                    return Err(inapplicable(change, "schema object not present"));
                }
            }
            Payload::Attribute(attribute) => {
                if change.is_add() {
                    let record = by_subject
                        .entry(change.subject.clone())
                        .or_insert_with(|| Record::for_subject(change.subject.clone()));
                    if !record.attributes.insert(attribute.clone()) {
                        return Err(inapplicable(change, "fact already present"));
                    }
                } else {
                    let removed = by_subject
                        .get_mut(&change.subject)
                        .is_some_and(|r| r.attributes.remove(attribute));
                    if !removed {
                        return Err(inapplicable(change, "fact not present"));
                    }
                    if by_subject.get(&change.subject).is_some_and(|r| r.attributes.is_empty()) {
                        by_subject.remove(&change.subject);
                    }
                }
            }
            Payload::Record(record) => {
                if change.is_add() {
                    if by_subject.contains_key(&record.subject_id) {
                        return Err(inapplicable(change, "subject already present"));
                    }
                    by_subject.insert(record.subject_id.clone(), record.clone());
                } else if by_subject.get(&record.subject_id) == Some(record) {
                    by_subject.remove(&record.subject_id);
                } else {
                    return Err(inapplicable(change, "record not present as given"));
                }
            }
        }
    }
    Ok((
        SchemaVersion::new(&cs.dataset_id, objects.into_values())?,
        RecordSet::from_records(by_subject.into_values())?,
    ))
}

/// Swaps adds and deletes and the version endpoints.
pub fn invert_delta(cs: &ChangeSet) -> ChangeSet {
    let mut low: Vec<LowLevelChange> = cs.low_level.iter().map(LowLevelChange::inverted).collect();
    low.sort();
    ChangeSet {
        dataset_id: cs.dataset_id.clone(),
        from_version: cs.to_version.clone(),
        to_version: cs.from_version.clone(),
        low_level: low,
        high_level: cs
            .high_level
            .iter()
            .map(|h| HighLevelChange {
                name: h.name.clone(),
                constituents: h.constituents.iter().map(LowLevelChange::inverted).collect(),
                context: h.context.clone(),
                annotation: h.annotation.clone(),
            })
            .collect(),
    }
}
