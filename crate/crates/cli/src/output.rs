use std::collections::BTreeSet;

use serde_json::{json, Value};

use evoarch_core::delta::{ChangeSet, LowLevelChange, Payload};
use evoarch_core::model::{format_timestamp, DatasetInstantiation, Fact, Object};
use evoarch_core::query::{AffectedDataset, Timeline};

use crate::Format;

pub fn version_line(inst: &DatasetInstantiation) -> String {
    let tx = &inst.temporal.transaction_time;
    format!(
        "{}\t{}\t{}\t{}\t{}",
        inst.version_id,
        format_timestamp(&tx.start),
        tx.end.map_or("-".to_string(), |e| format_timestamp(&e)),
        inst.provenance.agent,
        inst.record_set_hash
    )
}

fn object_json(object: &Object) -> Value {
    match object {
        Object::Ref(id) => json!({ "ref": id.as_str() }),
        Object::Literal(lit) => json!({ "lit": lit.lexical(), "datatype": lit.datatype().tag() }),
    }
}

fn fact_json(fact: &Fact) -> Value {
    json!({
        "subject": fact.subject.as_str(),
        "predicate": fact.predicate().as_str(),
        "object": object_json(fact.object()),
    })
}

pub fn print_facts(facts: &BTreeSet<Fact>, format: Format) {
    match format {
        Format::Json => println!("{}", Value::Array(facts.iter().map(fact_json).collect())),
        _ => {
            for fact in facts {
                println!("{}", fact.to_line());
            }
        }
    }
}

pub fn print_timeline(timeline: &Timeline, format: Format) {
    match format {
        Format::Json => {
            let entries: Vec<Value> = timeline
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "version": e.version_id.as_str(),
                        "start": format_timestamp(&e.start),
                        "facts": e.facts.iter().map(fact_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            println!("{}", Value::Array(entries));
        }
        _ => {
            for entry in &timeline.entries {
                println!("# {}\t{}\t{}", entry.version_id, format_timestamp(&entry.start), entry.facts.len());
                for fact in &entry.facts {
                    println!("{}", fact.to_line());
                }
            }
        }
    }
}

pub fn print_affected(affected: &[AffectedDataset], format: Format) {
    match format {
        Format::Json => {
            let items: Vec<Value> = affected
                .iter()
                .map(|a| {
                    json!({
                        "dataset": a.dataset_id.as_str(),
                        "subjects": a.subjects.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                        "schema_objects": a.schema_objects.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                        "change_sets": a.change_sets.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            println!("{}", Value::Array(items));
        }
        _ => {
            for a in affected {
                for s in &a.subjects {
                    println!("{}\tsubject\t{s}", a.dataset_id);
                }
                for s in &a.schema_objects {
                    println!("{}\tschema\t{s}", a.dataset_id);
                }
                for p in &a.change_sets {
                    println!("{}\tchange-set\t{}", a.dataset_id, p.display());
                }
            }
        }
    }
}

fn change_json(change: &LowLevelChange) -> Value {
    let mut v = json!({ "op": change.op.as_str(), "subject": change.subject.as_str() });
    match &change.payload {
        Payload::Schema(object) => v["schema_object"] = json!(object.to_line()),
        _ => v["facts"] = Value::Array(change.facts().iter().map(fact_json).collect()),
    }
    v
}

pub fn change_set_json(cs: &ChangeSet) -> Value {
    json!({
        "dataset": cs.dataset_id.as_str(),
        "from": cs.from_version.as_str(),
        "to": cs.to_version.as_str(),
        "low_level": cs.low_level.iter().map(change_json).collect::<Vec<_>>(),
        "high_level": cs.high_level.iter().map(|h| json!({
            "name": h.name,
            "context": h.context.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
            "constituents": h.constituents.iter().map(change_json).collect::<Vec<_>>(),
            "annotation": h.annotation,
        })).collect::<Vec<_>>(),
    })
}
