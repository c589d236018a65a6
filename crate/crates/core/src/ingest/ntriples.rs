//! Line-oriented reader and writer for the N-Triples subset the archive
//! accepts: IRIs, `_:label` blank nodes, plain and datatyped literals.
//! Language tags and quads are rejected.

use crate::error::{Error, Result};
use crate::model::{DataType, Identifier, Literal, Object, Scheme, Scope, BLANK_PREFIX};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Identifier,
    pub predicate: Identifier,
    pub object: Object,
}

pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>> {
    let mut triples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut cursor = Cursor::new(line, i + 1);
        cursor.skip_ws();
        if cursor.at_end() || cursor.peek() == Some('#') {
            continue;
        }
        triples.push(cursor.triple()?);
    }
    Ok(triples)
}

/// Skolemizes a blank-node label into an opaque identifier.
pub fn skolemize(label: &str) -> Result<Identifier> {
    Ok(Identifier::new(Scheme::Opaque, format!("{BLANK_PREFIX}{label}"), Scope::VersionSpecific)?
        .with_meta("blank-node", label))
}

struct Cursor<'a> {
    line: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        Self { line, pos: 0, line_no }
    }

    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.line.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line_no: self.line_no,
            message: message.into(),
        }
    }

    fn unsupported(&self, construct: &str) -> Error {
        Error::UnsupportedConstruct {
            line_no: self.line_no,
            construct: construct.to_string(),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(found) if found == c => Ok(()),
            Some(found) => Err(self.err(format!("expected `{c}`, found `{found}`"))),
            None => Err(self.err(format!("expected `{c}`, found end of line"))),
        }
    }

    fn triple(&mut self) -> Result<Triple> {
        let subject = match self.peek() {
            Some('<') => self.iri()?,
            Some('_') => self.blank()?,
            Some('"') => return Err(self.err("literal in subject position")),
            _ => return Err(self.err("expected subject")),
        };
        self.skip_ws();
        let predicate = match self.peek() {
            Some('<') => self.iri()?,
            _ => return Err(self.err("predicate must be an IRI")),
        };
        self.skip_ws();
        let object = match self.peek() {
            Some('<') => Object::Ref(self.iri()?),
            Some('_') => Object::Ref(self.blank()?),
            Some('"') => Object::Literal(self.literal()?),
            _ => return Err(self.err("expected object")),
        };
        self.skip_ws();
        match self.peek() {
            Some('.') => {
                self.bump();
            }
            Some('<' | '_' | '"') => return Err(self.unsupported("quad (graph term)")),
            _ => return Err(self.err("expected `.`")),
        }
        self.skip_ws();
        if !self.at_end() && self.peek() != Some('#') {
            return Err(self.err("trailing content after `.`"));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    fn iri(&mut self) -> Result<Identifier> {
        self.expect('<')?;
        let mut iri = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => iri.push(self.uchar()?),
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err(self.err(format!("illegal character `{c}` in IRI")))
                }
                Some(c) => iri.push(c),
                None => return Err(self.err("unterminated IRI")),
            }
        }
        if iri.is_empty() {
            return Err(self.err("empty IRI"));
        }
        Identifier::uri(&iri).map_err(|_| self.err("invalid IRI"))
    }

    fn blank(&mut self) -> Result<Identifier> {
        self.expect('_')?;
        self.expect(':')?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                self.bump();
            } else {
                break;
            }
        }
        // A trailing '.' terminates the statement, not the label.
        let mut label = &self.line[start..self.pos];
        while let Some(stripped) = label.strip_suffix('.') {
            label = stripped;
            self.pos -= 1;
        }
        if label.is_empty() {
            return Err(self.err("empty blank node label"));
        }
        skolemize(label).map_err(|_| self.err("invalid blank node label"))
    }

    fn uchar(&mut self) -> Result<char> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.err("invalid escape in IRI")),
        };
        self.hex_char(width)
    }

    fn hex_char(&mut self, width: usize) -> Result<char> {
        let digits = self.rest().get(..width).ok_or_else(|| self.err("truncated \\u escape"))?;
        let code = u32::from_str_radix(digits, 16).map_err(|_| self.err("invalid \\u escape"))?;
        self.pos += width;
        char::from_u32(code).ok_or_else(|| self.err("escape is not a Unicode scalar value"))
    }

    fn literal(&mut self) -> Result<Literal> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => lexical.push(match self.bump() {
                    Some('t') => '\t',
                    Some('b') => '\u{8}',
                    Some('n') => '\n',
                    Some('r') => '\r',
                    Some('f') => '\u{c}',
                    Some('"') => '"',
                    Some('\'') => '\'',
                    Some('\\') => '\\',
                    Some('u') => self.hex_char(4)?,
                    Some('U') => self.hex_char(8)?,
                    _ => return Err(self.err("invalid string escape")),
                }),
                Some(c) => lexical.push(c),
                None => return Err(self.err("unterminated literal")),
            }
        }
        let datatype = match self.peek() {
            Some('@') => return Err(self.unsupported("language-tagged literal")),
            Some('^') => {
                self.expect('^')?;
                self.expect('^')?;
                let iri = self.iri()?;
                DataType::from_xsd_iri(iri.as_str())
                    .ok_or_else(|| self.unsupported(&format!("datatype <{iri}>")))?
            }
            _ => DataType::String,
        };
        Literal::new(&lexical, datatype).map_err(|e| self.err(e.to_string()))
    }
}

fn write_term(out: &mut String, id: &Identifier) {
    if id.as_str().starts_with(BLANK_PREFIX) {
        out.push_str(id.as_str());
    } else {
        out.push('<');
        for c in id.as_str().chars() {
            match c {
                '>' | '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                    out.push_str(&format!("\\u{:04X}", c as u32))
                }
                _ => out.push(c),
            }
        }
        out.push('>');
    }
}

/// Serializes one triple as an N-Triples line (no trailing newline).
pub fn format_triple(subject: &Identifier, predicate: &Identifier, object: &Object) -> String {
    let mut out = String::new();
    write_term(&mut out, subject);
    out.push(' ');
    write_term(&mut out, predicate);
    out.push(' ');
    match object {
        Object::Ref(id) => write_term(&mut out, id),
        Object::Literal(lit) => {
            out.push('"');
            for c in lit.lexical().chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    _ => out.push(c),
                }
            }
            out.push('"');
            if lit.datatype() != DataType::String {
                out.push_str("^^<");
                out.push_str(&lit.datatype().xsd_iri());
                out.push('>');
            }
        }
    }
    out.push_str(" .");
    out
}
