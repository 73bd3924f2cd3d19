//! Delimiter-separated input tables with a header row.

use std::fs::File;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header lacks column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}: line {line}: {message}")]
    InvalidValue {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl TableError {
    /// True when the underlying cause is a file that does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(self, TableError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}

/// How a delimited file is split into fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableFormat {
    pub delimiter: u8,
    /// Honour `"` quoting. Off for tab-separated task dumps, which carry raw quotes.
    pub quoting: bool,
}

impl TableFormat {
    pub const TSV: TableFormat = TableFormat {
        delimiter: b'\t',
        quoting: false,
    };
    pub const CSV: TableFormat = TableFormat {
        delimiter: b',',
        quoting: true,
    };

    /// Tab unless the file name ends in `.csv`.
    pub fn for_path(path: &Path) -> TableFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TableFormat::CSV,
            _ => TableFormat::TSV,
        }
    }
}

impl Default for TableFormat {
    fn default() -> Self {
        TableFormat::TSV
    }
}

/// One data row with its 1-based line number in the source file.
#[derive(Debug, Clone)]
pub struct Row {
    pub line: u64,
    pub fields: Vec<String>,
}

/// A fully read table, with the positions of the requested columns resolved.
#[derive(Debug)]
pub struct Table {
    pub path: PathBuf,
    pub columns: Vec<usize>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn field<'a>(&self, row: &'a Row, column: usize) -> &'a str {
        &row.fields[self.columns[column]]
    }

    pub fn invalid(&self, row: &Row, message: impl Into<String>) -> TableError {
        TableError::InvalidValue {
            path: self.path.clone(),
            line: row.line,
            message: message.into(),
        }
    }
}

/// Read `path`, requiring every name in `required` to be present in the header.
/// A row whose field count differs from the header aborts the read.
pub fn read_table(path: &Path, format: TableFormat, required: &[&str]) -> Result<Table, TableError> {
    let file = File::open(path).map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .quoting(format.quoting)
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let csv_err = |source| TableError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();

    let mut columns = Vec::with_capacity(required.len());
    for name in required {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TableError::MissingColumn {
                path: path.to_path_buf(),
                column: (*name).to_string(),
            })?;
        columns.push(idx);
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(TableError::MalformedRow {
                path: path.to_path_buf(),
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(Row {
            line,
            fields: record.iter().map(str::to_string).collect(),
        });
    }

    Ok(Table {
        path: path.to_path_buf(),
        columns,
        rows,
    })
}
