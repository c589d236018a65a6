use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Identifier;

const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// The six literal datatypes the archive understands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataType {
    Integer,
    Decimal,
    Boolean,
    String,
    Datetime,
    UriRef,
}

impl DataType {
    pub const ALL: [DataType; 6] = [
        DataType::Integer,
        DataType::Decimal,
        DataType::Boolean,
        DataType::String,
        DataType::Datetime,
        DataType::UriRef,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DataType::Integer => "integer",
            DataType::Decimal => "decimal",
            DataType::Boolean => "boolean",
            DataType::String => "string",
            DataType::Datetime => "datetime",
            DataType::UriRef => "uri-ref",
        }
    }

    pub fn xsd_iri(self) -> String {
        let local = match self {
            DataType::Integer => "integer",
            DataType::Decimal => "decimal",
            DataType::Boolean => "boolean",
            DataType::String => "string",
            DataType::Datetime => "dateTime",
            DataType::UriRef => "anyURI",
        };
        format!("{XSD}{local}")
    }

    /// Maps an XML Schema datatype IRI onto a tag. `int` and `long` fold
    /// into `integer`.
    pub fn from_xsd_iri(iri: &str) -> Option<DataType> {
        Some(match iri.strip_prefix(XSD)? {
            "integer" | "int" | "long" => DataType::Integer,
            "decimal" => DataType::Decimal,
            "boolean" => DataType::Boolean,
            "string" => DataType::String,
            "dateTime" => DataType::Datetime,
            "anyURI" => DataType::UriRef,
            _ => return None,
        })
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DataType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DataType::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| Error::ValueSyntax {
                lexical: s.to_string(),
                datatype: "datatype tag".into(),
            })
    }
}

fn syntax(lexical: &str, datatype: DataType) -> Error {
    Error::ValueSyntax {
        lexical: lexical.to_string(),
        datatype: datatype.tag().to_string(),
    }
}

/// Normalizes a lexical form under its datatype so that equal values compare
/// equal as strings.
pub fn canonicalize_value(lexical: &str, datatype: DataType) -> Result<String> {
    match datatype {
        DataType::Integer => canonical_integer(lexical).ok_or_else(|| syntax(lexical, datatype)),
        DataType::Decimal => canonical_decimal(lexical).ok_or_else(|| syntax(lexical, datatype)),
        DataType::Boolean => match lexical.trim() {
            t if t.eq_ignore_ascii_case("true") || t == "1" => Ok("true".into()),
            f if f.eq_ignore_ascii_case("false") || f == "0" => Ok("false".into()),
            _ => Err(syntax(lexical, datatype)),
        },
        DataType::String => Ok(lexical.to_string()),
        DataType::Datetime => canonical_datetime(lexical).ok_or_else(|| syntax(lexical, datatype)),
        DataType::UriRef => {
            if lexical.is_empty() || lexical.chars().any(char::is_whitespace) {
                Err(syntax(lexical, datatype))
            } else {
                Ok(lexical.to_string())
            }
        }
    }
}

fn split_sign(s: &str) -> (bool, &str) {
    match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    }
}

fn canonical_integer(lexical: &str) -> Option<String> {
    let (negative, digits) = split_sign(lexical.trim());
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = digits.trim_start_matches('0');
    Some(match (digits.is_empty(), negative) {
        (true, _) => "0".to_string(),
        (false, true) => format!("-{digits}"),
        (false, false) => digits.to_string(),
    })
}

fn canonical_decimal(lexical: &str) -> Option<String> {
    let (negative, body) = split_sign(lexical.trim());
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let int = match int.trim_start_matches('0') {
        "" => "0",
        rest => rest,
    };
    let frac = frac.trim_end_matches('0');
    let magnitude = if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    };
    Some(if negative && magnitude != "0" {
        format!("-{magnitude}")
    } else {
        magnitude
    })
}

fn canonical_datetime(lexical: &str) -> Option<String> {
    let s = lexical.trim();
    let utc = match DateTime::parse_from_rfc3339(s) {
        Ok(dt) => dt.with_timezone(&Utc),
        // Values without an offset are taken as UTC.
        Err(_) => NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
            .ok()?
            .and_utc(),
    };
    Some(format_timestamp(&utc))
}

/// UTC ISO-8601 with a `Z` suffix; fractional seconds only when present.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Parses an ISO-8601 timestamp into UTC.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    let canonical = canonical_datetime(s).ok_or_else(|| syntax(s, DataType::Datetime))?;
    DateTime::parse_from_rfc3339(&canonical)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|_| syntax(s, DataType::Datetime))
}

/// A canonicalized literal. Construction always normalizes, so two literals
/// denoting the same value are structurally equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: DataType,
}

impl Literal {
    pub fn new(lexical: &str, datatype: DataType) -> Result<Self> {
        Ok(Self {
            lexical: canonicalize_value(lexical, datatype)?,
            datatype,
        })
    }

    pub fn string(s: impl Into<String>) -> Self {
        Self {
            lexical: s.into(),
            datatype: DataType::String,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> DataType {
        self.datatype
    }
}

/// The object position of a fact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Literal(Literal),
    Ref(Identifier),
}

impl Object {
    pub fn literal(lexical: &str, datatype: DataType) -> Result<Self> {
        Literal::new(lexical, datatype).map(Object::Literal)
    }

    pub fn as_ref_id(&self) -> Option<&Identifier> {
        match self {
            Object::Ref(id) => Some(id),
            Object::Literal(_) => None,
        }
    }
}
