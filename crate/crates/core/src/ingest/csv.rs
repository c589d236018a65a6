use crate::error::{Error, Result};

/// One parsed data row, with its 1-based line number in the source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvRow {
    pub line_no: usize,
    pub cells: Vec<String>,
}

impl CsvRow {
    /// Empty cells are nulls.
    pub fn cell(&self, i: usize) -> Option<&str> {
        self.cells.get(i).map(String::as_str).filter(|c| !c.is_empty())
    }
}

/// Parses RFC-4180 CSV whose header must equal `header` exactly. Returns the
/// data rows; every row must have `header.len()` cells.
pub fn parse_csv<S: AsRef<str>>(text: &str, header: &[S]) -> Result<Vec<CsvRow>> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let expected: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    let found_names: Vec<&str> = found.iter().collect();
    if text.trim().is_empty() || found_names != expected {
        return Err(Error::ConfigMismatch(format!(
            "CSV header {found_names:?} does not match configured columns {expected:?}"
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line_no = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != expected.len() {
            return Err(Error::Parse {
                line_no,
                message: format!("expected {} cells, found {}", expected.len(), record.len()),
            });
        }
        rows.push(CsvRow {
            line_no,
            cells: record.iter().map(str::to_string).collect(),
        });
    }
    Ok(rows)
}

fn csv_error(e: ::csv::Error, fallback_line: usize) -> Error {
    let line_no = e.position().map_or(fallback_line, |p| p.line() as usize);
    Error::Parse {
        line_no,
        message: e.to_string(),
    }
}

/// Writes rows as CSV with `\n` line endings, quoting only where needed.
pub fn write_csv<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> String {
    let mut writer = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    // Writing into a Vec cannot fail.
    writer.write_record(&header).expect("in-memory write");
    for row in rows {
        writer.write_record(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("input was UTF-8")
}
