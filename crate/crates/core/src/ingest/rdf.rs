use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::ingest::Triple;
use crate::model::{
    DataType, Fact, Identifier, Object, Range, RecordSet, SchemaObject, SchemaVersion,
    SourceConstruct, RDFS_DOMAIN, RDFS_RANGE, RDFS_RESOURCE, RDF_TYPE,
};

/// Groups triples by subject into records and derives the schema: every
/// predicate becomes a property, every object of a type assertion a class.
/// `rdfs:domain` / `rdfs:range` assertions about a predicate fill in its
/// domain and range; without a range assertion the range is the literal
/// datatype when all objects share one, and `rdfs:Resource` otherwise.
pub fn map_rdf(triples: &[Triple], dataset: &Identifier) -> Result<(SchemaVersion, RecordSet)> {
    let facts: BTreeSet<Fact> = triples
        .iter()
        .map(|t| Fact::new(t.subject.clone(), t.predicate.clone(), t.object.clone()))
        .collect();

    let mut domains: BTreeMap<&Identifier, BTreeSet<&Identifier>> = BTreeMap::new();
    let mut ranges: BTreeMap<&Identifier, BTreeSet<&Identifier>> = BTreeMap::new();
    let mut object_types: BTreeMap<&Identifier, BTreeSet<Option<DataType>>> = BTreeMap::new();
    let mut classes: BTreeSet<&Identifier> = BTreeSet::new();
    for fact in &facts {
        let predicate = fact.predicate();
        object_types.entry(predicate).or_default().insert(match fact.object() {
            Object::Literal(lit) => Some(lit.datatype()),
            Object::Ref(_) => None,
        });
        if let Object::Ref(target) = fact.object() {
            match predicate.as_str() {
                RDF_TYPE => {
                    classes.insert(target);
                }
                RDFS_DOMAIN => {
                    domains.entry(&fact.subject).or_default().insert(target);
                }
                RDFS_RANGE => {
                    ranges.entry(&fact.subject).or_default().insert(target);
                }
                _ => {}
            }
        }
    }

    let resource = Identifier::uri(RDFS_RESOURCE)?;
    let mut objects = Vec::new();
    for (predicate, kinds) in &object_types {
        // Several assertions: the smallest identifier wins, deterministically.
        let range = match ranges.get(predicate).and_then(|r| r.first()) {
            Some(target) => match DataType::from_xsd_iri(target.as_str()) {
                Some(dt) => Range::Datatype(dt),
                None => Range::Class((*target).clone()),
            },
            None => match kinds.iter().collect::<Vec<_>>()[..] {
                [Some(dt)] => Range::Datatype(*dt),
                _ => Range::Class(resource.clone()),
            },
        };
        let domain = domains.get(predicate).and_then(|d| d.first()).map(|d| (*d).clone());
        objects.push(SchemaObject::property((*predicate).clone(), domain, range, SourceConstruct::RdfProperty));
    }
    objects.extend(
        classes
            .into_iter()
            .filter(|c| !object_types.contains_key(c))
            .map(|c| SchemaObject::class(c.clone(), SourceConstruct::RdfClass)),
    );
    Ok((SchemaVersion::new(dataset, objects)?, RecordSet::from_facts(facts)))
}
