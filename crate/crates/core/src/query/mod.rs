//! Snapshot, partial, longitudinal, change and mixed queries.

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::{DateTime, Utc};

use crate::delta::{apply_rules, compute_delta, derive_high_level, ChangeOp, ChangeRule, ChangeSet};
use crate::error::{Error, Result};
use crate::model::{Fact, Identifier, Interval, RecordSet};
use crate::resource::load_resource;
use crate::store::Archive;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VersionSelector {
    Version(Identifier),
    AtTime(DateTime<Utc>),
    Latest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartSelector {
    Subjects(Vec<Identifier>),
    Predicates(Vec<Identifier>),
    Resource(String),
}

/// Low-level kinds and high-level rule names to keep. An empty filter
/// keeps everything.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeFilter {
    pub ops: BTreeSet<ChangeOp>,
    pub rules: BTreeSet<String>,
}

impl TypeFilter {
    /// Parses a comma-separated list; names that are not low-level kinds are
    /// taken as rule names.
    pub fn parse(list: &str) -> Self {
        let mut filter = TypeFilter::default();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name.parse::<ChangeOp>() {
                Ok(op) => {
                    filter.ops.insert(op);
                }
                Err(_) => {
                    filter.rules.insert(name.to_string());
                }
            }
        }
        filter
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty() && self.rules.is_empty()
    }

    /// Keeps matching low-level changes, matching high-level changes and
    /// their constituents.
    pub fn apply(&self, mut cs: ChangeSet) -> ChangeSet {
        if self.is_empty() {
            return cs;
        }
        cs.high_level.retain(|h| self.rules.contains(&h.name));
        let constituents: BTreeSet<_> = cs.high_level.iter().flat_map(|h| h.constituents.iter().cloned()).collect();
        cs.low_level.retain(|c| self.ops.contains(&c.op) || constituents.contains(c));
        cs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimelineEntry {
    pub version_id: Identifier,
    pub start: DateTime<Utc>,
    pub facts: BTreeSet<Fact>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Timeline {
    pub entries: Vec<TimelineEntry>,
}

pub fn resolve_selector(archive: &Archive, dataset: &Identifier, sel: &VersionSelector) -> Result<Identifier> {
    match sel {
        VersionSelector::Version(v) => {
            archive.instantiation(dataset, v)?;
            Ok(v.clone())
        }
        VersionSelector::AtTime(t) => archive.resolve_version_at(dataset, *t),
        VersionSelector::Latest => archive
            .version_ids(dataset)?
            .pop()
            .ok_or_else(|| Error::VersionNotFound(format!("{dataset} has no versions"))),
    }
}

/// Selects the facts of one version matching `part`.
fn select_part(
    archive: &Archive,
    version: &Identifier,
    records: &RecordSet,
    part: Option<&PartSelector>,
) -> Result<BTreeSet<Fact>> {
    Ok(match part {
        None => records.fact_set(),
        Some(PartSelector::Subjects(subjects)) => subjects
            .iter()
            .filter_map(|s| records.get(s))
            .flat_map(|r| r.facts())
            .collect(),
        Some(PartSelector::Predicates(predicates)) => {
            records.facts().filter(|f| predicates.contains(f.predicate())).collect()
        }
        Some(PartSelector::Resource(name)) => {
            load_resource(archive, name)?.evaluate_records(version, records)?.facts
        }
    })
}

pub fn snapshot_query(
    archive: &Archive,
    dataset: &Identifier,
    sel: &VersionSelector,
    part: Option<&PartSelector>,
) -> Result<BTreeSet<Fact>> {
    let version = resolve_selector(archive, dataset, sel)?;
    if let Some(PartSelector::Resource(name)) = part {
        check_resource_dataset(archive, name, dataset)?;
    }
    let loaded = archive.get_version(dataset, &version)?;
    select_part(archive, &version, &loaded.records, part)
}

fn check_resource_dataset(archive: &Archive, name: &str, dataset: &Identifier) -> Result<()> {
    let resource = load_resource(archive, name)?;
    if &resource.dataset_id != dataset {
        return Err(Error::DatasetMismatch {
            left: resource.dataset_id.to_string(),
            right: dataset.to_string(),
        });
    }
    Ok(())
}

/// One entry per version whose transaction time overlaps `range` (every
/// version when absent). Versions where the part is empty are kept.
pub fn longitudinal_query(
    archive: &Archive,
    dataset: &Identifier,
    part: &PartSelector,
    range: Option<&Interval>,
) -> Result<Timeline> {
    if let PartSelector::Resource(name) = part {
        check_resource_dataset(archive, name, dataset)?;
    }
    let mut timeline = Timeline::default();
    for inst in archive.list_versions(dataset, &Default::default())? {
        if range.is_some_and(|r| !inst.temporal.transaction_time.overlaps(r)) {
            continue;
        }
        let loaded = archive.get_version(dataset, &inst.version_id)?;
        timeline.entries.push(TimelineEntry {
            facts: select_part(archive, &inst.version_id, &loaded.records, Some(part))?,
            version_id: inst.version_id,
            start: inst.temporal.transaction_time.start,
        });
    }
    Ok(timeline)
}

/// Changes from `from` to `to`. Adjacent versions use the change set cached
/// at commit time; others are diffed directly. User rules, the type filter
/// and the part restriction apply afterwards, in that order.
pub fn changes_query(
    archive: &Archive,
    dataset: &Identifier,
    from: &Identifier,
    to: &Identifier,
    rules: &[ChangeRule],
    types: &TypeFilter,
    part: Option<&PartSelector>,
) -> Result<ChangeSet> {
    let ids = archive.version_ids(dataset)?;
    let position = |v: &Identifier| {
        ids.iter()
            .position(|x| x == v)
            .ok_or_else(|| Error::VersionNotFound(v.to_string()))
    };
    let (i, j) = (position(from)?, position(to)?);
    if i > j {
        return Err(Error::VersionOrder {
            from: from.to_string(),
            to: to.to_string(),
        });
    }

    let mut cs = match archive.cached_change_set(dataset, from, to)? {
        Some(cached) => cached,
        None => {
            let a = archive.get_version(dataset, from)?;
            let b = archive.get_version(dataset, to)?;
            derive_high_level(compute_delta(a.view(), b.view())?, &[])
        }
    };
    cs = apply_rules(cs, rules);
    let mut cs = types.apply(cs);

    if let Some(part) = part {
        if let PartSelector::Resource(name) = part {
            check_resource_dataset(archive, name, dataset)?;
        }
        let a = archive.get_version(dataset, from)?;
        let b = archive.get_version(dataset, to)?;
        let selected: BTreeSet<Fact> = select_part(archive, from, &a.records, Some(part))?
            .into_iter()
            .chain(select_part(archive, to, &b.records, Some(part))?)
            .collect();
        cs = cs.restrict(|f| selected.contains(f), |_| false);
    }
    Ok(cs)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MixedCriteria {
    pub types: TypeFilter,
    pub interval: Option<Interval>,
    pub subjects: Option<BTreeSet<Identifier>>,
}

/// A dataset affected by matching changes, with the affected parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffectedDataset {
    pub dataset_id: Identifier,
    pub subjects: BTreeSet<Identifier>,
    pub schema_objects: BTreeSet<Identifier>,
    pub change_sets: Vec<PathBuf>,
}

/// Scans every cached change set, keeping those whose target version
/// started inside the interval, and reports the subjects and schema
/// objects touched by changes that pass the type filter.
pub fn mixed_query(archive: &Archive, criteria: &MixedCriteria) -> Result<Vec<AffectedDataset>> {
    let mut out = Vec::new();
    for dataset in archive.list_datasets(&Default::default())? {
        let id = dataset.diachronic_id;
        let mut hit = AffectedDataset {
            dataset_id: id.clone(),
            subjects: BTreeSet::new(),
            schema_objects: BTreeSet::new(),
            change_sets: Vec::new(),
        };
        for (from, to, path) in archive.change_set_files(&id)? {
            if let Some(interval) = &criteria.interval {
                let start = archive.instantiation(&id, &to)?.temporal.transaction_time.start;
                if !interval.contains(start) {
                    continue;
                }
            }
            let cs = criteria.types.apply(
                archive
                    .cached_change_set(&id, &from, &to)?
                    .expect("adjacent versions have a cached change set"),
            );
            let mut matched = false;
            for change in &cs.low_level {
                if criteria.subjects.as_ref().is_some_and(|s| !s.contains(&change.subject)) {
                    continue;
                }
                matched = true;
                if change.schema_object().is_some() {
                    hit.schema_objects.insert(change.subject.clone());
                } else {
                    hit.subjects.insert(change.subject.clone());
                }
            }
            if matched {
                hit.change_sets.push(path);
            }
        }
        if !hit.change_sets.is_empty() {
            out.push(hit);
        }
    }
    Ok(out)
}
