use std::fs::File;

use std::path::Path;

use super::{Dictionary, Relation, Value};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Tab,
}

impl Delimiter {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("tab") => Delimiter::Tab,
            _ => Delimiter::Comma,
        }
    }

    fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }
}

/// Reads a headed CSV/TSV file into a deduplicated relation.
///
/// The delimiter is inferred from the extension unless given. Returns the
/// relation and the number of duplicate rows dropped.
pub fn load_relation(
    path: &Path,
    name: &str,
    delimiter: Option<Delimiter>,
    dict: &mut Dictionary,
) -> Result<(Relation, usize), Error> {
    let delim = delimiter.unwrap_or_else(|| Delimiter::from_path(path));
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim.byte())
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let header = reader.headers().map_err(|e| Error::Io(format!("{}: {e}", path.display())))?.clone();
    let columns: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
        return Err(Error::Schema(format!("{}: empty header", path.display())));
    }
    let mut tuples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if rec.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                i + 2,
                rec.len(),
                columns.len()
            )));
        }
        tuples.push(rec.iter().map(|f| dict.intern(f.trim())).collect::<Vec<Value>>());
    }
    Relation::with_duplicates(name, columns, tuples)
}

/// Writes a relation with a header row, rendering values through `label`.
pub fn write_relation(r: &Relation, path: &Path, label: impl Fn(Value) -> String) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(Delimiter::from_path(path).byte())
        .from_writer(file);
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    w.write_record(r.columns()).map_err(io)?;
    for t in r.tuples() {
        w.write_record(t.iter().map(|v| label(*v))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}
