use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sha256_hex, DataType, Identifier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemaKind {
    Class,
    Property,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceConstruct {
    Table,
    Column,
    Dimension,
    Measure,
    Attribute,
    RdfClass,
    RdfProperty,
}

impl SourceConstruct {
    const ALL: [SourceConstruct; 7] = [
        SourceConstruct::Table,
        SourceConstruct::Column,
        SourceConstruct::Dimension,
        SourceConstruct::Measure,
        SourceConstruct::Attribute,
        SourceConstruct::RdfClass,
        SourceConstruct::RdfProperty,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceConstruct::Table => "table",
            SourceConstruct::Column => "column",
            SourceConstruct::Dimension => "dimension",
            SourceConstruct::Measure => "measure",
            SourceConstruct::Attribute => "attribute",
            SourceConstruct::RdfClass => "rdf-class",
            SourceConstruct::RdfProperty => "rdf-property",
        }
    }
}

impl FromStr for SourceConstruct {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SourceConstruct::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::ValueSyntax {
                lexical: s.into(),
                datatype: "source construct".into(),
            })
    }
}

/// Range of a property: a class or a literal datatype.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Range {
    Class(Identifier),
    Datatype(DataType),
}

impl fmt::Display for Range {
    /// Datatypes print as `@tag`; identifiers never start with `@`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Range::Class(id) => write!(f, "{id}"),
            Range::Datatype(dt) => write!(f, "@{dt}"),
        }
    }
}

impl FromStr for Range {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix('@') {
            Some(tag) => Ok(Range::Datatype(tag.parse()?)),
            None => Ok(Range::Class(Identifier::parse(s)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaObject {
    pub id: Identifier,
    pub kind: SchemaKind,
    pub domain_class: Option<Identifier>,
    pub range: Option<Range>,
    pub source_construct: SourceConstruct,
}

impl SchemaObject {
    pub fn class(id: Identifier, source_construct: SourceConstruct) -> Self {
        Self {
            id,
            kind: SchemaKind::Class,
            domain_class: None,
            range: None,
            source_construct,
        }
    }

    pub fn property(
        id: Identifier,
        domain_class: Option<Identifier>,
        range: Range,
        source_construct: SourceConstruct,
    ) -> Self {
        Self {
            id,
            kind: SchemaKind::Property,
            domain_class,
            range: Some(range),
            source_construct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            SchemaKind::Class => self.domain_class.is_none() && self.range.is_none(),
            SchemaKind::Property => self.range.is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "schema object {} violates its kind constraints",
                self.id
            )))
        }
    }

    /// `id TAB kind TAB source TAB domain TAB range`, absent fields as `-`.
    pub fn to_line(&self) -> String {
        let kind = match self.kind {
            SchemaKind::Class => "class",
            SchemaKind::Property => "property",
        };
        let domain = self.domain_class.as_ref().map_or("-".to_string(), |d| d.to_string());
        let range = self.range.as_ref().map_or("-".to_string(), |r| r.to_string());
        format!(
            "{}\t{kind}\t{}\t{domain}\t{range}",
            self.id,
            self.source_construct.as_str()
        )
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, kind, source, domain, range] = fields[..] else {
            return Err(Error::Parse {
                line_no,
                message: "expected 5 tab-separated schema fields".into(),
            });
        };
        let kind = match kind {
            "class" => SchemaKind::Class,
            "property" => SchemaKind::Property,
            other => {
                return Err(Error::Parse {
                    line_no,
                    message: format!("unknown schema kind `{other}`"),
                })
            }
        };
        let object = SchemaObject {
            id: Identifier::parse(id)?,
            kind,
            domain_class: (domain != "-").then(|| Identifier::parse(domain)).transpose()?,
            range: (range != "-").then(|| range.parse()).transpose()?,
            source_construct: source.parse()?,
        };
        object.validate()?;
        Ok(object)
    }
}

/// A set of schema objects with unique ids. The version id is derived from
/// the dataset and the content, so equal schemas share an id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaVersion {
    id: Identifier,
    objects: BTreeMap<Identifier, SchemaObject>,
}

impl SchemaVersion {
    pub fn new(dataset: &Identifier, objects: impl IntoIterator<Item = SchemaObject>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for object in objects {
            object.validate()?;
            if let Some(prev) = map.get(&object.id) {
                if prev != &object {
                    return Err(Error::InvalidConfig(format!(
                        "two schema objects share the id {}",
                        object.id
                    )));
                }
            }
            map.insert(object.id.clone(), object);
        }
        let hash = sha256_hex(&schema_bytes(&map));
        let id = Identifier::uri(&format!("{dataset}/schema-version/{}", &hash[..16]))?;
        Ok(Self { id, objects: map })
    }

    pub fn id(&self) -> &Identifier {
        &self.id
    }

    pub fn get(&self, id: &Identifier) -> Option<&SchemaObject> {
        self.objects.get(id)
    }

    pub fn objects(&self) -> impl Iterator<Item = &SchemaObject> {
        self.objects.values()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = &SchemaObject> {
        self.objects.values().filter(|o| o.kind == SchemaKind::Class)
    }

    pub fn properties(&self) -> impl Iterator<Item = &SchemaObject> {
        self.objects.values().filter(|o| o.kind == SchemaKind::Property)
    }

    pub fn content_hash(&self) -> String {
        sha256_hex(&self.to_schema_file())
    }

    pub fn to_schema_file(&self) -> Vec<u8> {
        schema_bytes(&self.objects)
    }

    pub fn parse_schema_file(dataset: &Identifier, text: &str) -> Result<Self> {
        let objects = text
            .lines()
            .enumerate()
            .map(|(i, line)| SchemaObject::parse_line(line, i + 1))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dataset, objects)
    }
}

fn schema_bytes(objects: &BTreeMap<Identifier, SchemaObject>) -> Vec<u8> {
    let mut lines: Vec<String> = objects.values().map(SchemaObject::to_line).collect();
    lines.sort_unstable();
    lines.into_iter().flat_map(|l| (l + "\n").into_bytes()).collect()
}
