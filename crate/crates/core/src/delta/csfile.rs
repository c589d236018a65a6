//! The `.cs` change-set file.
//!
//! ```text
//! <from-version> TAB <to-version>
//! <op> TAB <subject> TAB <predicate> TAB <lit|ref> TAB <lexical> TAB <datatype>
//! ...
//! ==HL==
//! <name> TAB <context ids, space separated> TAB <constituent line numbers, comma separated>[ TAB <annotation>]
//! ```
//!
//! Record-level changes occupy one line per attribute, all with the same op
//! and subject; consecutive such lines form one change. Schema-level changes
//! write `<op> TAB <schema object line>`. Line numbers are 1-based over the
//! whole file and a high-level change refers to the first line of each
//! constituent.

use std::collections::BTreeMap;

use crate::delta::{ChangeOp, ChangeSet, HighLevelChange, LowLevelChange, Payload};
use crate::error::{Error, Result};
use crate::model::{dataset_slug, escape, mint_identifier, unescape, Fact, IdKind, Identifier, Record, SchemaObject};

pub const HL_MARKER: &str = "==HL==";

pub(super) fn write(cs: &ChangeSet) -> String {
    let mut out = format!("{}\t{}\n", cs.from_version, cs.to_version);
    let mut line_no = 1;
    let mut first_line: BTreeMap<&LowLevelChange, usize> = BTreeMap::new();
    for change in &cs.low_level {
        first_line.entry(change).or_insert(line_no + 1);
        for line in change_lines(change) {
            out.push_str(&line);
            out.push('\n');
            line_no += 1;
        }
    }
    out.push_str(HL_MARKER);
    out.push('\n');
    for hl in &cs.high_level {
        let context = if hl.context.is_empty() {
            "-".to_string()
        } else {
            hl.context.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" ")
        };
        let refs = hl
            .constituents
            .iter()
            .map(|c| first_line.get(c).map_or("?".to_string(), |n| n.to_string()))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!("{}\t{context}\t{refs}", hl.name));
        if let Some(note) = &hl.annotation {
            out.push('\t');
            out.push_str(&escape(note));
        }
        out.push('\n');
    }
    out
}

fn change_lines(change: &LowLevelChange) -> Vec<String> {
    match &change.payload {
        Payload::Schema(object) => vec![format!("{}\t{}", change.op, object.to_line())],
        _ => change
            .facts()
            .iter()
            .map(|f| format!("{}\t{}", change.op, f.to_line()))
            .collect(),
    }
}

pub(super) fn parse(text: &str) -> Result<ChangeSet> {
    let bad = |line_no: usize, message: &str| Error::ChangeSetSyntax {
        line_no,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let (from, to) = header.split_once('\t').ok_or_else(|| bad(1, "header must be `from TAB to`"))?;
    let from_version = Identifier::parse(from).map_err(|e| bad(1, &e.to_string()))?;
    let to_version = Identifier::parse(to).map_err(|e| bad(1, &e.to_string()))?;
    let slug = dataset_slug(&from_version).ok_or_else(|| bad(1, "from is not a version identifier"))?;
    let dataset_id = mint_identifier(IdKind::DiachronicDataset, &[slug])?;

    let mut low: Vec<LowLevelChange> = Vec::new();
    let mut starts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut in_hl = false;
    let mut high = Vec::new();
    for (line_no, line) in lines {
        if line == HL_MARKER {
            in_hl = true;
            continue;
        }
        if in_hl {
            high.push(parse_hl(line, line_no, &low, &starts)?);
            continue;
        }
        let (op, rest) = line.split_once('\t').ok_or_else(|| bad(line_no, "missing op"))?;
        let op: ChangeOp = op.parse().map_err(|_| bad(line_no, "unknown op"))?;
        let change = match op {
            ChangeOp::AddSchemaObject | ChangeOp::DeleteSchemaObject => {
                let object = SchemaObject::parse_line(rest, line_no).map_err(|e| bad(line_no, &e.to_string()))?;
                LowLevelChange::schema(op.is_add(), object)
            }
            ChangeOp::AddAttribute | ChangeOp::DeleteAttribute => {
                let fact = Fact::parse_line(rest, line_no).map_err(|e| bad(line_no, &e.to_string()))?;
                LowLevelChange::attribute(op.is_add(), fact)
            }
            ChangeOp::AddRecord | ChangeOp::DeleteRecord => {
                let fact = Fact::parse_line(rest, line_no).map_err(|e| bad(line_no, &e.to_string()))?;
                if let Some(last) = low.last_mut() {
                    if last.op == op && last.subject == fact.subject {
                        if let Payload::Record(record) = &mut last.payload {
                            record.attributes.insert(fact.attribute);
                            continue;
                        }
                    }
                }
                let mut record = Record::for_subject(fact.subject.clone());
                record.attributes.insert(fact.attribute);
                LowLevelChange::record(op.is_add(), record)
            }
        };
        starts.insert(line_no, low.len());
        low.push(change);
    }
    Ok(ChangeSet {
        dataset_id,
        from_version,
        to_version,
        low_level: low,
        high_level: high,
    })
}

fn parse_hl(
    line: &str,
    line_no: usize,
    low: &[LowLevelChange],
    starts: &BTreeMap<usize, usize>,
) -> Result<HighLevelChange> {
    let bad = |message: String| Error::ChangeSetSyntax { line_no, message };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 3 || fields.len() > 4 {
        return Err(bad("high-level line needs 3 or 4 fields".into()));
    }
    let context = if fields[1] == "-" {
        Vec::new()
    } else {
        fields[1]
            .split(' ')
            .map(Identifier::parse)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| bad(e.to_string()))?
    };
    let constituents = fields[2]
        .split(',')
        .map(|n| {
            let n: usize = n.parse().map_err(|_| bad(format!("bad line reference `{n}`")))?;
            starts
                .get(&n)
                .map(|&i| low[i].clone())
                .ok_or_else(|| bad(format!("line {n} does not start a low-level change")))
        })
        .collect::<Result<Vec<_>>>()?;
    let annotation = fields
        .get(3)
        .map(|a| unescape(a).ok_or_else(|| bad("bad escape in annotation".into())))
        .transpose()?;
    Ok(HighLevelChange {
        name: fields[0].to_string(),
        constituents,
        context,
        annotation,
    })
}
