//! Fixed-precision CSV emission, header validation and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SIMILARITY_PLACES: usize = 6;
pub const AII_PLACES: usize = 4;
pub const ENTROPY_PLACES: usize = 6;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: header is `{found}`, expected `{expected}`")]
    HeaderMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: record {record} has {found} fields, header has {expected}")]
    RowWidth {
        path: PathBuf,
        record: usize,
        expected: usize,
        found: usize,
    },
}

impl OutputError {
    pub fn is_not_found(&self) -> bool {
        match self {
            OutputError::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            OutputError::Csv { source, .. } => {
                matches!(source.kind(), csv::ErrorKind::Io(e) if e.kind() == std::io::ErrorKind::NotFound)
            }
            _ => false,
        }
    }
}

/// `value` with exactly `places` decimals. Negative zero prints without a sign.
pub fn fixed(value: f64, places: usize) -> String {
    let s = format!("{value:.places$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// Write a comma-separated file with the given header.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Check that `path` starts with exactly `header` and that every record has
/// the same width. Returns the number of data records.
pub fn validate_csv(path: &Path, header: &[&str]) -> Result<usize, OutputError> {
    let err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(err)?;
    let found: Vec<String> = r.headers().map_err(err)?.iter().map(str::to_string).collect();
    if found != header {
        return Err(OutputError::HeaderMismatch {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found.join(","),
        });
    }
    let mut n = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(err)?;
        if rec.len() != header.len() {
            return Err(OutputError::RowWidth {
                path: path.to_path_buf(),
                record: i + 1,
                expected: header.len(),
                found: rec.len(),
            });
        }
        n += 1;
    }
    Ok(n)
}

/// Read a CSV emitted by this crate into header-keyed rows.
pub fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>, OutputError> {
    let err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let header: Vec<String> = r.headers().map_err(err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(err)?;
        rows.push(header.iter().cloned().zip(rec.iter().map(str::to_string)).collect());
    }
    Ok(rows)
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String, OutputError> {
    let mut f = fs::File::open(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf).map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Record of one command run: configuration echo, sizes, threshold and
/// content hashes of everything read and written.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub sizes: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Input name to SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        Manifest {
            command: command.to_string(),
            ..Manifest::default()
        }
    }

    pub fn hash_input(&mut self, name: &str, path: &Path) -> Result<(), OutputError> {
        self.inputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn hash_output(&mut self, path: &Path) -> Result<(), OutputError> {
        let name = path
            .file_name()
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.outputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn file_name(&self) -> String {
        format!("manifest-{}.json", self.command)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, OutputError> {
        let path = dir.join(self.file_name());
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        fs::write(&path, json).map_err(|source| OutputError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_places_and_negative_zero() {
        assert_eq!(fixed(0.6, 4), "0.6000");
        assert_eq!(fixed(0.9746318461970762, 6), "0.974632");
        assert_eq!(fixed(-0.0000001, 6), "0.000000");
        assert_eq!(fixed(-0.25, 2), "-0.25");
    }

    #[test]
    fn validate_catches_header_drift() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, &["a", "b"], vec![vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(validate_csv(&p, &["a", "b"]).unwrap(), 1);
        assert!(matches!(validate_csv(&p, &["a", "c"]), Err(OutputError::HeaderMismatch { .. })));
        fs::write(&p, "a,b\n1\n").unwrap();
        assert!(matches!(validate_csv(&p, &["a", "b"]), Err(OutputError::RowWidth { record: 1, .. })));
    }

    #[test]
    fn sha256_known_value() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
