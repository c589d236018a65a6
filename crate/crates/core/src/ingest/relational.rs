use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::{dataset_component, CsvRow, RelationalConfig};
use crate::model::{
    join_key, mint_identifier, rdf_type, IdKind, Identifier, Literal, Object, Range, Record,
    RecordAttribute, RecordSet, SchemaObject, SchemaVersion, SourceConstruct,
};

pub(crate) fn table_class(slug: &str, cfg: &RelationalConfig) -> Result<Identifier> {
    mint_identifier(IdKind::SchemaObject, &[slug, cfg.table_name.as_str()])
}

pub(crate) fn column_property(slug: &str, cfg: &RelationalConfig, column: &str) -> Result<Identifier> {
    mint_identifier(IdKind::SchemaObject, &[slug, cfg.table_name.as_str(), column])
}

/// Maps table rows onto records. The table becomes a class and each column a
/// property whose domain is that class and whose range is the column type.
/// Each row becomes one record, subject minted from its key values, with one
/// attribute per non-null field plus a type assertion to the table class.
pub fn map_relational(
    rows: &[CsvRow],
    cfg: &RelationalConfig,
    dataset: &Identifier,
) -> Result<(SchemaVersion, RecordSet)> {
    cfg.validate()?;
    let slug = dataset_component(dataset)?;
    let class = table_class(slug, cfg)?;
    let properties = cfg
        .columns
        .iter()
        .map(|c| column_property(slug, cfg, &c.name))
        .collect::<Result<Vec<_>>>()?;

    let mut objects = vec![SchemaObject::class(class.clone(), SourceConstruct::Table)];
    objects.extend(cfg.columns.iter().zip(&properties).map(|(col, prop)| {
        SchemaObject::property(
            prop.clone(),
            Some(class.clone()),
            Range::Datatype(col.datatype),
            SourceConstruct::Column,
        )
    }));
    let schema = SchemaVersion::new(dataset, objects)?;

    let key_positions = cfg.key_positions();
    let type_pred = rdf_type();
    let mut records: BTreeMap<Identifier, Record> = BTreeMap::new();
    for row in rows {
        if row.cells.len() != cfg.columns.len() {
            return Err(Error::Parse {
                line_no: row.line_no,
                message: format!("expected {} cells, found {}", cfg.columns.len(), row.cells.len()),
            });
        }
        let mut values: Vec<Option<Literal>> = Vec::with_capacity(cfg.columns.len());
        for (i, col) in cfg.columns.iter().enumerate() {
            values.push(row.cell(i).map(|v| Literal::new(v, col.datatype)).transpose()?);
        }
        let mut key = Vec::with_capacity(key_positions.len());
        for &i in &key_positions {
            match &values[i] {
                Some(lit) => key.push(lit.lexical().to_string()),
                None => {
                    return Err(Error::NullKey {
                        column: cfg.columns[i].name.clone(),
                        line_no: row.line_no,
                    })
                }
            }
        }
        let subject = mint_identifier(IdKind::Record, &[slug, "pk", &join_key(&key)])?;
        let record_id = Identifier::composite_key(&key, &cfg.primary_key)?;
        let mut record = Record::new(record_id, subject.clone());
        for (prop, value) in properties.iter().zip(values) {
            if let Some(lit) = value {
                record
                    .attributes
                    .insert(RecordAttribute::new(prop.clone(), Object::Literal(lit)));
            }
        }
        record
            .attributes
            .insert(RecordAttribute::new(type_pred.clone(), Object::Ref(class.clone())));
        if records.insert(subject, record).is_some() {
            return Err(Error::DuplicateKey { values: key });
        }
    }
    Ok((schema, RecordSet::from_records(records.into_values())?))
}

/// Rebuilds composite-key record ids for a relational record set read back
/// from storage.
pub(crate) fn restore_record_ids(rs: RecordSet, cfg: &RelationalConfig, dataset: &Identifier) -> Result<RecordSet> {
    let slug = dataset_component(dataset)?;
    let key_props = cfg
        .primary_key
        .iter()
        .map(|k| column_property(slug, cfg, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(rs.map_record_ids(|record| key_record_id(record, &key_props, &cfg.primary_key)))
}

pub(crate) fn key_record_id(record: &Record, key_props: &[Identifier], columns: &[String]) -> Identifier {
    let values: Option<Vec<String>> = key_props
        .iter()
        .map(|p| {
            record.attributes.iter().find(|a| &a.predicate == p).and_then(|a| match &a.object {
                Object::Literal(l) => Some(l.lexical().to_string()),
                Object::Ref(_) => None,
            })
        })
        .collect();
    values
        .and_then(|v| Identifier::composite_key(&v, columns).ok())
        .unwrap_or_else(|| record.subject_id.clone())
}
