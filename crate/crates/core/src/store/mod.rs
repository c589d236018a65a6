//! The on-disk archive.
//!
//! ```text
//! <root>/archive.meta
//! <root>/datasets/<slug>/dataset.meta
//! <root>/blobs/<sha256>.facts
//! <root>/blobs/<sha256>.schema
//! <root>/changesets/<slug>/<from>_<to>.cs
//! <root>/resources/<name>.def
//! ```
//!
//! Versions are full snapshots; equal content shares one blob. Metadata
//! files start with the sha256 of their JSON body on a line of its own, and
//! every blob and cached change set is verified against its recorded hash
//! when read. All writes go to a temporary file that is then renamed.

use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::delta::{compute_delta, derive_high_level, ChangeSet, VersionView};
use crate::error::{Error, Result};
use crate::ingest::{ingest_text, restore_record_ids, SourceConfig};
use crate::model::{
    dataset_slug, format_timestamp, mint_identifier, sha256_hex, slugify, DatasetInstantiation,
    DiachronicDataset, IdKind, Identifier, Interval, ProvenanceInfo, RecordSet, SchemaVersion,
    SourceModel, TemporalAnnotation,
};

pub const FORMAT_VERSION: u32 = 1;
const ARCHIVE_META: &str = "archive.meta";
const LOCK: &str = ".lock";

#[derive(Debug, Serialize, Deserialize)]
struct ArchiveMeta {
    format_version: u32,
    created_at: DateTime<Utc>,
    datasets: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DatasetMeta {
    dataset: DiachronicDataset,
    versions: Vec<VersionEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct VersionEntry {
    label: String,
    instantiation: DatasetInstantiation,
    schema_hash: String,
    config: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    changeset_hash: Option<String>,
}

/// A committed version read back from the archive.
#[derive(Clone, Debug)]
pub struct LoadedVersion {
    pub instantiation: DatasetInstantiation,
    pub schema: SchemaVersion,
    pub records: RecordSet,
    pub config: SourceConfig,
}

impl LoadedVersion {
    pub fn view(&self) -> VersionView<'_> {
        VersionView {
            dataset_id: &self.instantiation.diachronic_id,
            version_id: &self.instantiation.version_id,
            schema: &self.schema,
            records: &self.records,
        }
    }
}

/// Filters for [`Archive::list_datasets`] and [`Archive::list_versions`].
/// Unset fields match everything.
#[derive(Clone, Debug, Default)]
pub struct ListFilter {
    pub source_model: Option<SourceModel>,
    pub agent: Option<String>,
    pub overlaps: Option<Interval>,
}

impl ListFilter {
    fn matches_version(&self, inst: &DatasetInstantiation) -> bool {
        self.agent.as_ref().map_or(true, |a| &inst.provenance.agent == a)
            && self
                .overlaps
                .as_ref()
                .map_or(true, |i| inst.temporal.transaction_time.overlaps(i))
    }
}

/// Exclusive writer lock, released on drop.
struct WriterLock(PathBuf);

impl WriterLock {
    fn acquire(root: &Path) -> Result<Self> {
        let path = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::WriterLocked(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for WriterLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

#[derive(Clone, Debug)]
pub struct Archive {
    root: PathBuf,
}

impl Archive {
    /// Creates an archive in `root`, which must be missing or empty.
    pub fn init(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        if root.exists() {
            let mut entries = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
            if entries.next().is_some() {
                return Err(Error::AlreadyInitialized(root));
            }
        }
        for dir in ["datasets", "blobs", "changesets", "resources"] {
            let path = root.join(dir);
            fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        }
        let archive = Self { root };
        let _lock = WriterLock::acquire(&archive.root)?;
        archive.write_meta(
            &archive.root.join(ARCHIVE_META),
            &ArchiveMeta {
                format_version: FORMAT_VERSION,
                created_at: Utc::now(),
                datasets: Vec::new(),
            },
        )?;
        Ok(archive)
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        if !root.join(ARCHIVE_META).is_file() {
            return Err(Error::NotAnArchive(root));
        }
        let archive = Self { root };
        let meta = archive.archive_meta()?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::CorruptArchive(format!(
                "unsupported format version {}",
                meta.format_version
            )));
        }
        Ok(archive)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registers a new diachronic dataset; its id is derived from the title.
    pub fn register_dataset(&self, title: &str, model: SourceModel) -> Result<DiachronicDataset> {
        let _lock = WriterLock::acquire(&self.root)?;
        let slug = slugify(title)?;
        let mut meta = self.archive_meta()?;
        if meta.datasets.contains(&slug) {
            return Err(Error::DatasetExists(slug));
        }
        let dataset = DiachronicDataset {
            diachronic_id: mint_identifier(IdKind::DiachronicDataset, &[&slug])?,
            title: title.to_string(),
            source_model: model,
            version_ids: Vec::new(),
        };
        let dir = self.root.join("datasets").join(&slug);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        self.write_dataset_meta(
            &slug,
            &DatasetMeta {
                dataset: dataset.clone(),
                versions: Vec::new(),
            },
        )?;
        meta.datasets.push(slug);
        meta.datasets.sort();
        self.write_meta(&self.root.join(ARCHIVE_META), &meta)?;
        Ok(dataset)
    }

    /// Accepts a full dataset id or its slug.
    pub fn resolve_dataset(&self, name: &str) -> Result<Identifier> {
        let id = if name.starts_with("evoarch:") {
            Identifier::parse(name)?
        } else {
            mint_identifier(IdKind::DiachronicDataset, &[name])?
        };
        self.dataset(&id)?;
        Ok(id)
    }

    pub fn dataset(&self, dataset: &Identifier) -> Result<DiachronicDataset> {
        Ok(self.dataset_meta(dataset)?.dataset)
    }

    pub fn list_datasets(&self, filter: &ListFilter) -> Result<Vec<DiachronicDataset>> {
        let mut out = Vec::new();
        for slug in self.archive_meta()?.datasets {
            let meta = self.read_dataset_meta(&slug)?;
            if filter.source_model.map_or(true, |m| m == meta.dataset.source_model)
                && (filter.agent.is_none() && filter.overlaps.is_none()
                    || meta.versions.iter().any(|v| filter.matches_version(&v.instantiation)))
            {
                out.push(meta.dataset);
            }
        }
        Ok(out)
    }

    pub fn list_versions(&self, dataset: &Identifier, filter: &ListFilter) -> Result<Vec<DatasetInstantiation>> {
        let meta = self.dataset_meta(dataset)?;
        if filter.source_model.is_some_and(|m| m != meta.dataset.source_model) {
            return Ok(Vec::new());
        }
        Ok(meta
            .versions
            .into_iter()
            .map(|v| v.instantiation)
            .filter(|i| filter.matches_version(i))
            .collect())
    }

    pub fn version_ids(&self, dataset: &Identifier) -> Result<Vec<Identifier>> {
        Ok(self.dataset(dataset)?.version_ids)
    }

    /// Accepts a version label such as `v0002` or a full version id.
    pub fn resolve_version(&self, dataset: &Identifier, name: &str) -> Result<Identifier> {
        let meta = self.dataset_meta(dataset)?;
        meta.versions
            .iter()
            .find(|v| v.label == name || v.instantiation.version_id.as_str() == name)
            .map(|v| v.instantiation.version_id.clone())
            .ok_or_else(|| Error::VersionNotFound(name.to_string()))
    }

    /// The version whose transaction time contains `at`.
    pub fn resolve_version_at(&self, dataset: &Identifier, at: DateTime<Utc>) -> Result<Identifier> {
        let meta = self.dataset_meta(dataset)?;
        // Starts are strictly increasing, so the last start not after `at` decides.
        let idx = meta
            .versions
            .partition_point(|v| v.instantiation.temporal.transaction_time.start <= at);
        idx.checked_sub(1)
            .map(|i| &meta.versions[i].instantiation)
            .filter(|inst| inst.temporal.transaction_time.contains(at))
            .map(|inst| inst.version_id.clone())
            .ok_or_else(|| Error::NoVersionAtTime {
                dataset: dataset.to_string(),
                at: format_timestamp(&at),
            })
    }

    pub fn get_version(&self, dataset: &Identifier, version: &Identifier) -> Result<LoadedVersion> {
        let meta = self.dataset_meta(dataset)?;
        let entry = find_entry(&meta, version)?;
        let facts = self.read_blob(&entry.instantiation.record_set_hash, "facts")?;
        let records = RecordSet::parse_facts_file(&facts)
            .map_err(|e| Error::CorruptArchive(format!("facts blob for {version}: {e}")))?;
        if records.content_hash() != entry.instantiation.record_set_hash {
            return Err(Error::CorruptArchive(format!("facts blob for {version} is not canonical")));
        }
        let records = restore_record_ids(&entry.config, records, dataset)?;
        let schema_text = self.read_blob(&entry.schema_hash, "schema")?;
        let schema = SchemaVersion::parse_schema_file(dataset, &schema_text)
            .map_err(|e| Error::CorruptArchive(format!("schema blob for {version}: {e}")))?;
        if schema.id() != &entry.instantiation.schema_version_id {
            return Err(Error::CorruptArchive(format!("schema version of {version} does not match")));
        }
        Ok(LoadedVersion {
            instantiation: entry.instantiation.clone(),
            schema,
            records,
            config: entry.config.clone(),
        })
    }

    /// The instantiation metadata of a version without loading its content.
    pub fn instantiation(&self, dataset: &Identifier, version: &Identifier) -> Result<DatasetInstantiation> {
        let meta = self.dataset_meta(dataset)?;
        Ok(find_entry(&meta, version)?.instantiation.clone())
    }

    /// Parses, maps and commits a source text as the next version.
    pub fn ingest(
        &self,
        dataset: &Identifier,
        config: &SourceConfig,
        text: &str,
        temporal: TemporalAnnotation,
        provenance: ProvenanceInfo,
    ) -> Result<DatasetInstantiation> {
        let (schema, records) = ingest_text(config, text, dataset)?;
        self.commit_version(dataset, &schema, &records, temporal, provenance, config)
    }

    /// Commits a new version. Its transaction time must start after the
    /// previous version's and must be open; committing closes the previous
    /// version's transaction time. The change set from the previous version
    /// is computed and cached.
    pub fn commit_version(
        &self,
        dataset: &Identifier,
        schema: &SchemaVersion,
        records: &RecordSet,
        temporal: TemporalAnnotation,
        provenance: ProvenanceInfo,
        config: &SourceConfig,
    ) -> Result<DatasetInstantiation> {
        temporal.validate()?;
        provenance.validate()?;
        if temporal.transaction_time.end.is_some() {
            return Err(Error::InvalidTemporal(
                "transaction time of a new version must be open".into(),
            ));
        }
        let _lock = WriterLock::acquire(&self.root)?;
        let mut meta = self.dataset_meta(dataset)?;
        if config.model() != meta.dataset.source_model {
            return Err(Error::ConfigMismatch(format!(
                "{} is a {} dataset, got a {} configuration",
                dataset,
                meta.dataset.source_model,
                config.model()
            )));
        }
        let start = temporal.transaction_time.start;
        if let Some(prev) = meta.versions.last() {
            let prev_start = prev.instantiation.temporal.transaction_time.start;
            if start <= prev_start {
                return Err(Error::TemporalOrderViolation {
                    previous: format_timestamp(&prev_start),
                    new: format_timestamp(&start),
                });
            }
        }

        let slug = slug_of(dataset)?;
        let label = format!("v{:04}", meta.versions.len() + 1);
        let version_id = mint_identifier(IdKind::Version, &[slug, &label])?;
        let schema_hash = self.write_blob(&schema.to_schema_file(), "schema")?;
        let record_set_hash = self.write_blob(&records.to_facts_file(), "facts")?;
        debug_assert_eq!(record_set_hash, records.content_hash());

        let changeset_hash = match meta.versions.last() {
            Some(prev) => {
                let previous = self.get_version(dataset, &prev.instantiation.version_id)?;
                let cs = compute_delta(
                    previous.view(),
                    VersionView {
                        dataset_id: dataset,
                        version_id: &version_id,
                        schema,
                        records,
                    },
                )?;
                let text = derive_high_level(cs, &[]).to_cs_string();
                let dir = self.root.join("changesets").join(slug);
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                atomic_write(&dir.join(format!("{}_{label}.cs", prev.label)), text.as_bytes())?;
                Some(sha256_hex(text.as_bytes()))
            }
            None => None,
        };

        if let Some(prev) = meta.versions.last_mut() {
            prev.instantiation.temporal.transaction_time.end = Some(start);
        }
        let instantiation = DatasetInstantiation {
            version_id: version_id.clone(),
            diachronic_id: dataset.clone(),
            temporal,
            provenance,
            schema_version_id: schema.id().clone(),
            record_set_hash,
        };
        meta.versions.push(VersionEntry {
            label,
            instantiation: instantiation.clone(),
            schema_hash,
            config: config.clone(),
            changeset_hash,
        });
        meta.dataset.version_ids.push(version_id);
        self.write_dataset_meta(slug, &meta)?;
        Ok(instantiation)
    }

    /// The cached change set between two adjacent versions, if `to`
    /// directly follows `from`.
    pub fn cached_change_set(
        &self,
        dataset: &Identifier,
        from: &Identifier,
        to: &Identifier,
    ) -> Result<Option<ChangeSet>> {
        let meta = self.dataset_meta(dataset)?;
        let Some(i) = meta.versions.iter().position(|v| &v.instantiation.version_id == from) else {
            return Err(Error::VersionNotFound(from.to_string()));
        };
        let Some(next) = meta.versions.get(i + 1).filter(|v| &v.instantiation.version_id == to) else {
            return Ok(None);
        };
        let path = self.change_set_path(dataset, &meta.versions[i].label, &next.label)?;
        let text = self.read_verified(&path, next.changeset_hash.as_deref())?;
        ChangeSet::parse_cs(&text)
            .map(Some)
            .map_err(|e| Error::CorruptArchive(format!("{}: {e}", path.display())))
    }

    /// Paths of all cached change sets of a dataset, oldest first, with the
    /// versions they connect.
    pub fn change_set_files(&self, dataset: &Identifier) -> Result<Vec<(Identifier, Identifier, PathBuf)>> {
        let meta = self.dataset_meta(dataset)?;
        meta.versions
            .windows(2)
            .map(|w| {
                Ok((
                    w[0].instantiation.version_id.clone(),
                    w[1].instantiation.version_id.clone(),
                    self.change_set_path(dataset, &w[0].label, &w[1].label)?,
                ))
            })
            .collect()
    }

    fn change_set_path(&self, dataset: &Identifier, from: &str, to: &str) -> Result<PathBuf> {
        Ok(self
            .root
            .join("changesets")
            .join(slug_of(dataset)?)
            .join(format!("{from}_{to}.cs")))
    }

    pub(crate) fn resources_dir(&self) -> PathBuf {
        self.root.join("resources")
    }

    pub(crate) fn writer_lock(&self) -> Result<impl Drop> {
        WriterLock::acquire(&self.root)
    }

    fn archive_meta(&self) -> Result<ArchiveMeta> {
        self.read_meta(&self.root.join(ARCHIVE_META))
    }

    fn dataset_meta(&self, dataset: &Identifier) -> Result<DatasetMeta> {
        let slug = slug_of(dataset).map_err(|_| Error::DatasetNotFound(dataset.to_string()))?;
        let expected = mint_identifier(IdKind::DiachronicDataset, &[slug])?;
        if &expected != dataset {
            return Err(Error::DatasetNotFound(dataset.to_string()));
        }
        if !self.archive_meta()?.datasets.iter().any(|s| s == slug) {
            return Err(Error::DatasetNotFound(dataset.to_string()));
        }
        self.read_dataset_meta(slug)
    }

    fn read_dataset_meta(&self, slug: &str) -> Result<DatasetMeta> {
        self.read_meta(&self.root.join("datasets").join(slug).join("dataset.meta"))
    }

    fn write_dataset_meta(&self, slug: &str, meta: &DatasetMeta) -> Result<()> {
        self.write_meta(&self.root.join("datasets").join(slug).join("dataset.meta"), meta)
    }

    fn read_meta<T: DeserializeOwned>(&self, path: &Path) -> Result<T> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => Error::CorruptArchive(format!("missing {}", path.display())),
            _ => Error::io(path, e),
        })?;
        let corrupt = || Error::CorruptArchive(format!("{} fails its checksum", path.display()));
        let split = bytes.iter().position(|&b| b == b'\n').ok_or_else(corrupt)?;
        let (hash, body) = (&bytes[..split], &bytes[split + 1..]);
        if hash != sha256_hex(body).as_bytes() {
            return Err(corrupt());
        }
        serde_json::from_slice(body).map_err(|e| Error::CorruptArchive(format!("{}: {e}", path.display())))
    }

    fn write_meta<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let body = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
        let mut bytes = sha256_hex(&body).into_bytes();
        bytes.push(b'\n');
        bytes.extend_from_slice(&body);
        atomic_write(path, &bytes)
    }

    fn blob_path(&self, hash: &str, ext: &str) -> PathBuf {
        self.root.join("blobs").join(format!("{hash}.{ext}"))
    }

    /// Writes content-addressed bytes unless an identical blob exists.
    fn write_blob(&self, bytes: &[u8], ext: &str) -> Result<String> {
        let hash = sha256_hex(bytes);
        let path = self.blob_path(&hash, ext);
        if !path.exists() {
            atomic_write(&path, bytes)?;
        }
        Ok(hash)
    }

    fn read_blob(&self, hash: &str, ext: &str) -> Result<String> {
        self.read_verified(&self.blob_path(hash, ext), Some(hash))
    }

    fn read_verified(&self, path: &Path, hash: Option<&str>) -> Result<String> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => Error::CorruptArchive(format!("missing {}", path.display())),
            _ => Error::io(path, e),
        })?;
        if hash.is_some_and(|h| sha256_hex(&bytes) != h) {
            return Err(Error::CorruptArchive(format!("{} fails its checksum", path.display())));
        }
        String::from_utf8(bytes).map_err(|_| Error::CorruptArchive(format!("{} is not UTF-8", path.display())))
    }
}

fn find_entry<'a>(meta: &'a DatasetMeta, version: &Identifier) -> Result<&'a VersionEntry> {
    meta.versions
        .iter()
        .find(|v| &v.instantiation.version_id == version)
        .ok_or_else(|| Error::VersionNotFound(version.to_string()))
}

fn slug_of(dataset: &Identifier) -> Result<&str> {
    dataset_slug(dataset).ok_or_else(|| Error::DatasetNotFound(dataset.to_string()))
}

pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
