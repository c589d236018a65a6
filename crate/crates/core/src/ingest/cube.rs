use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::{dataset_component, CsvRow, CubeConfig, CubeRole};
use crate::ingest::relational::key_record_id;
use crate::model::{
    join_key, mint_identifier, rdf_type, IdKind, Identifier, Literal, Object, Range, Record,
    RecordAttribute, RecordSet, SchemaObject, SchemaVersion, SourceConstruct,
};

const OBSERVATION: &str = "Observation";

pub(crate) fn observation_class(slug: &str) -> Result<Identifier> {
    mint_identifier(IdKind::SchemaObject, &[slug, OBSERVATION])
}

pub(crate) fn cube_property(slug: &str, column: &str) -> Result<Identifier> {
    mint_identifier(IdKind::SchemaObject, &[slug, OBSERVATION, column])
}

/// Maps cube observations onto records: dimensions, measures and attributes
/// become properties of an observation class; each row becomes a record
/// identified by its dimension values in column order.
pub fn map_multidimensional(
    rows: &[CsvRow],
    cfg: &CubeConfig,
    dataset: &Identifier,
) -> Result<(SchemaVersion, RecordSet)> {
    cfg.validate()?;
    let slug = dataset_component(dataset)?;
    let class = observation_class(slug)?;
    let properties = cfg
        .columns
        .iter()
        .map(|c| cube_property(slug, &c.name))
        .collect::<Result<Vec<_>>>()?;

    let mut objects = vec![SchemaObject::class(class.clone(), SourceConstruct::Table)];
    objects.extend(cfg.columns.iter().zip(&properties).map(|(col, prop)| {
        let construct = match col.role {
            CubeRole::Dimension => SourceConstruct::Dimension,
            CubeRole::Measure => SourceConstruct::Measure,
            CubeRole::Attribute => SourceConstruct::Attribute,
        };
        SchemaObject::property(prop.clone(), Some(class.clone()), Range::Datatype(col.datatype), construct)
    }));
    let schema = SchemaVersion::new(dataset, objects)?;

    let dims = cfg.dimension_positions();
    let dim_names: Vec<String> = dims.iter().map(|&i| cfg.columns[i].name.clone()).collect();
    let type_pred = rdf_type();
    let mut records: BTreeMap<Identifier, Record> = BTreeMap::new();
    for row in rows {
        if row.cells.len() != cfg.columns.len() {
            return Err(Error::Parse {
                line_no: row.line_no,
                message: format!("expected {} cells, found {}", cfg.columns.len(), row.cells.len()),
            });
        }
        let values = cfg
            .columns
            .iter()
            .enumerate()
            .map(|(i, col)| row.cell(i).map(|v| Literal::new(v, col.datatype)).transpose())
            .collect::<Result<Vec<_>>>()?;
        let mut key = Vec::with_capacity(dims.len());
        for &i in &dims {
            let lit = values[i].as_ref().ok_or_else(|| Error::NullKey {
                column: cfg.columns[i].name.clone(),
                line_no: row.line_no,
            })?;
            key.push(lit.lexical().to_string());
        }
        let subject = mint_identifier(IdKind::Record, &[slug, "pk", &join_key(&key)])?;
        let mut record = Record::new(Identifier::composite_key(&key, &dim_names)?, subject.clone());
        for (prop, value) in properties.iter().zip(values) {
            if let Some(lit) = value {
                record.attributes.insert(RecordAttribute::new(prop.clone(), Object::Literal(lit)));
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

pub(crate) fn restore_record_ids(rs: RecordSet, cfg: &CubeConfig, dataset: &Identifier) -> Result<RecordSet> {
    let slug = dataset_component(dataset)?;
    let dims: Vec<String> = cfg
        .dimension_positions()
        .into_iter()
        .map(|i| cfg.columns[i].name.clone())
        .collect();
    let props = dims.iter().map(|d| cube_property(slug, d)).collect::<Result<Vec<_>>>()?;
    Ok(rs.map_record_ids(|record| key_record_id(record, &props, &dims)))
}
