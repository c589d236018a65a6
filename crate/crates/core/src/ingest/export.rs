use std::cmp::Ordering;

use crate::error::Result;
use crate::ingest::{cube, format_triple, relational, write_csv, SourceConfig};
use crate::model::{parse_timestamp, DataType, Identifier, Literal, Object, RecordSet};
use crate::store::Archive;

/// Reproduces a committed version in its source model's canonical form:
/// CSV sorted by key for tables and cubes, sorted N-Triples for RDF.
pub fn export_canonical(archive: &Archive, dataset: &Identifier, version: &Identifier) -> Result<String> {
    let loaded = archive.get_version(dataset, version)?;
    export_records(&loaded.config, dataset, &loaded.records)
}

pub fn export_records(config: &SourceConfig, dataset: &Identifier, records: &RecordSet) -> Result<String> {
    let slug = super::dataset_component(dataset)?;
    match config {
        SourceConfig::Relational(cfg) => {
            let props = cfg
                .columns
                .iter()
                .map(|c| relational::column_property(slug, cfg, &c.name))
                .collect::<Result<Vec<_>>>()?;
            Ok(export_table(&cfg.column_names(), &props, &cfg.key_positions(), records))
        }
        SourceConfig::Multidimensional(cfg) => {
            let props = cfg
                .columns
                .iter()
                .map(|c| cube::cube_property(slug, &c.name))
                .collect::<Result<Vec<_>>>()?;
            Ok(export_table(&cfg.column_names(), &props, &cfg.dimension_positions(), records))
        }
        SourceConfig::Rdf => {
            let mut lines: Vec<String> = records
                .facts()
                .map(|f| format_triple(&f.subject, f.predicate(), f.object()))
                .collect();
            lines.sort_unstable();
            Ok(lines.into_iter().map(|l| l + "\n").collect())
        }
    }
}

fn export_table(header: &[&str], props: &[Identifier], key: &[usize], records: &RecordSet) -> String {
    let mut rows: Vec<Vec<Option<&Literal>>> = records
        .records()
        .map(|record| {
            props
                .iter()
                .map(|p| {
                    record.attributes.iter().find_map(|a| match &a.object {
                        Object::Literal(lit) if &a.predicate == p => Some(lit),
                        _ => None,
                    })
                })
                .collect()
        })
        .collect();
    rows.sort_by(|a, b| {
        key.iter()
            .map(|&i| cmp_cells(a[i], b[i]))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.cmp(b))
    });
    let cells: Vec<Vec<String>> = rows
        .into_iter()
        .map(|row| row.into_iter().map(|c| c.map_or(String::new(), |l| l.lexical().to_string())).collect())
        .collect();
    write_csv(header, &cells)
}

fn cmp_cells(a: Option<&Literal>, b: Option<&Literal>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => cmp_literals(a, b),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

/// Orders canonical literals by value where the datatype has a natural
/// order, by lexical form otherwise.
pub(crate) fn cmp_literals(a: &Literal, b: &Literal) -> Ordering {
    if a.datatype() != b.datatype() {
        return a.cmp(b);
    }
    let by_value = match a.datatype() {
        DataType::Integer | DataType::Decimal => cmp_decimal(a.lexical(), b.lexical()),
        DataType::Datetime => match (parse_timestamp(a.lexical()), parse_timestamp(b.lexical())) {
            (Ok(x), Ok(y)) => x.cmp(&y),
            _ => Ordering::Equal,
        },
        _ => Ordering::Equal,
    };
    by_value.then_with(|| a.lexical().cmp(b.lexical()))
}

/// Compares canonical decimal strings (no leading zeros, no trailing
/// fractional zeros, no `+`).
fn cmp_decimal(a: &str, b: &str) -> Ordering {
    let split = |s: &str| {
        let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        (neg, int.to_string(), frac.to_string())
    };
    let (na, ia, fa) = split(a);
    let (nb, ib, fb) = split(b);
    match (na, nb) {
        (false, true) => return Ordering::Greater,
        (true, false) => return Ordering::Less,
        _ => {}
    }
    let magnitude = ia.len().cmp(&ib.len()).then_with(|| ia.cmp(&ib)).then_with(|| fa.cmp(&fb));
    if na {
        magnitude.reverse()
    } else {
        magnitude
    }
}
