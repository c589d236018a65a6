//! Records, record attributes and the canonical facts file.
//!
//! A record set is persisted as a facts file: UTF-8, one fact per line,
//! tab-separated `subject predicate kind lexical datatype`, lines sorted
//! bytewise and each terminated by `\n`. That byte string is the preimage of
//! the record set's content hash.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{DataType, Identifier, Literal, Object};

/// One (predicate, object) pair of a record.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordAttribute {
    pub predicate: Identifier,
    pub object: Object,
}

impl RecordAttribute {
    pub fn new(predicate: Identifier, object: Object) -> Self {
        Self { predicate, object }
    }
}

/// A fully qualified fact: a record attribute together with its subject.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub subject: Identifier,
    pub attribute: RecordAttribute,
}

impl Fact {
    pub fn new(subject: Identifier, predicate: Identifier, object: Object) -> Self {
        Self {
            subject,
            attribute: RecordAttribute::new(predicate, object),
        }
    }

    pub fn predicate(&self) -> &Identifier {
        &self.attribute.predicate
    }

    pub fn object(&self) -> &Object {
        &self.attribute.object
    }

    /// The facts-file line for this fact, without the trailing newline.
    pub fn to_line(&self) -> String {
        let (kind, lexical, datatype) = match self.object() {
            Object::Literal(lit) => ("lit", escape(lit.lexical()), lit.datatype().tag()),
            Object::Ref(id) => ("ref", id.as_str().to_string(), "-"),
        };
        format!(
            "{}\t{}\t{kind}\t{lexical}\t{datatype}",
            self.subject,
            self.predicate()
        )
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self> {
        let bad = |message: &str| Error::Parse {
            line_no,
            message: message.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [subject, predicate, kind, lexical, datatype] = fields[..] else {
            return Err(bad("expected 5 tab-separated fields"));
        };
        let subject = Identifier::parse(subject)?;
        let predicate = Identifier::parse(predicate)?;
        let object = match (kind, datatype) {
            ("ref", "-") => Object::Ref(Identifier::parse(lexical)?),
            ("lit", tag) => {
                let datatype: DataType = tag.parse()?;
                Object::Literal(Literal::new(&unescape(lexical).ok_or_else(|| bad("bad escape"))?, datatype)?)
            }
            _ => return Err(bad("kind must be `lit` or `ref`")),
        };
        Ok(Fact::new(subject, predicate, object))
    }
}

/// Backslash escapes for the lexical field: `\\`, `\t`, `\n`, `\r`.
pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

/// The fact bag of one subject. Equality considers the subject and the
/// attribute set; `record_id` is descriptive only.
#[derive(Clone, Debug)]
pub struct Record {
    pub record_id: Identifier,
    pub subject_id: Identifier,
    pub attributes: BTreeSet<RecordAttribute>,
}

impl Record {
    pub fn new(record_id: Identifier, subject_id: Identifier) -> Self {
        Self {
            record_id,
            subject_id,
            attributes: BTreeSet::new(),
        }
    }

    /// A record whose id is the subject itself.
    pub fn for_subject(subject_id: Identifier) -> Self {
        Self::new(subject_id.clone(), subject_id)
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.attributes.iter().map(|a| Fact {
            subject: self.subject_id.clone(),
            attribute: a.clone(),
        })
    }
}

impl PartialEq for Record {
    fn eq(&self, other: &Self) -> bool {
        self.subject_id == other.subject_id && self.attributes == other.attributes
    }
}

impl Eq for Record {}

/// All records of one dataset instantiation, keyed by subject. Immutable
/// once built; the content hash is computed at construction.
#[derive(Clone, Debug)]
pub struct RecordSet {
    records: BTreeMap<Identifier, Record>,
    content_hash: String,
}

impl PartialEq for RecordSet {
    fn eq(&self, other: &Self) -> bool {
        self.content_hash == other.content_hash && self.records == other.records
    }
}

impl Eq for RecordSet {}

impl Default for RecordSet {
    fn default() -> Self {
        Self::from_parts(BTreeMap::new())
    }
}

impl RecordSet {
    /// Builds a record set; two records for the same subject are rejected.
    pub fn from_records(records: impl IntoIterator<Item = Record>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for record in records {
            if record.attributes.is_empty() {
                continue;
            }
            let subject = record.subject_id.clone();
            if map.insert(subject.clone(), record).is_some() {
                return Err(Error::DuplicateKey {
                    values: vec![subject.to_string()],
                });
            }
        }
        Ok(Self::from_parts(map))
    }

    /// Groups facts by subject. Duplicate facts collapse.
    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Self {
        let mut map: BTreeMap<Identifier, Record> = BTreeMap::new();
        for fact in facts {
            map.entry(fact.subject.clone())
                .or_insert_with(|| Record::for_subject(fact.subject.clone()))
                .attributes
                .insert(fact.attribute);
        }
        Self::from_parts(map)
    }

    fn from_parts(records: BTreeMap<Identifier, Record>) -> Self {
        let content_hash = sha256_hex(&facts_bytes(&records));
        Self {
            records,
            content_hash,
        }
    }

    /// Replaces record ids without touching facts.
    pub fn map_record_ids(mut self, mut f: impl FnMut(&Record) -> Identifier) -> Self {
        for record in self.records.values_mut() {
            record.record_id = f(record);
        }
        self
    }

    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, subject: &Identifier) -> Option<&Record> {
        self.records.get(subject)
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.records.values()
    }

    pub fn subjects(&self) -> impl Iterator<Item = &Identifier> {
        self.records.keys()
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.records.values().flat_map(Record::facts)
    }

    pub fn fact_set(&self) -> BTreeSet<Fact> {
        self.facts().collect()
    }

    pub fn fact_count(&self) -> usize {
        self.records.values().map(|r| r.attributes.len()).sum()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.records
            .get(&fact.subject)
            .is_some_and(|r| r.attributes.contains(&fact.attribute))
    }

    /// The canonical facts file for this record set.
    pub fn to_facts_file(&self) -> Vec<u8> {
        facts_bytes(&self.records)
    }

    pub fn parse_facts_file(text: &str) -> Result<Self> {
        let facts = text
            .lines()
            .enumerate()
            .map(|(i, line)| Fact::parse_line(line, i + 1))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_facts(facts))
    }
}

fn facts_bytes(records: &BTreeMap<Identifier, Record>) -> Vec<u8> {
    let mut lines: Vec<String> = records
        .values()
        .flat_map(Record::facts)
        .map(|f| f.to_line())
        .collect();
    lines.sort_unstable();
    let mut out = Vec::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a record set.
pub fn hash_record_set(rs: &RecordSet) -> String {
    sha256_hex(&rs.to_facts_file())
}
