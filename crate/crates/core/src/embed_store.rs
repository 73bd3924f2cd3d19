//! Embedding matrices, their on-disk format, and the hashed reference encoder.
//!
//! File layout (all integers little-endian):
//!
//! | offset | size        | field                     |
//! |--------|-------------|---------------------------|
//! | 0      | 4           | magic `AIEM`              |
//! | 4      | 4           | version, `u32` = 1        |
//! | 8      | 4           | dim, `u32`                |
//! | 12     | 8           | count, `u64`              |
//! | 20     | count*dim*4 | row-major `f32` payload   |
//!
//! Row ids live in a UTF-8 sidecar `<path>.ids`, one id per line, aligned with rows.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use thiserror::Error;

use crate::text::sentences;

pub const MAGIC: [u8; 4] = *b"AIEM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
/// Largest tolerated deviation of a stored row norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not an embedding file (bad magic)")]
    BadMagic(PathBuf),
    #[error("{path}: unsupported format version {found}")]
    VersionMismatch { path: PathBuf, found: u32 },
    #[error("{path}: header declares {header} rows but the id sidecar has {sidecar}")]
    CountMismatch {
        path: PathBuf,
        header: u64,
        sidecar: usize,
    },
    #[error("{path}: payload is {actual} bytes, header implies {expected}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("row {row} column {col} is not finite")]
    NonFiniteValue { row: usize, col: usize },
    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid id {0:?}: ids must be nonempty and single-line")]
    InvalidId(String),
    #[error("{values} values do not fill {rows} rows of dimension {dim}")]
    ShapeMismatch { rows: usize, dim: usize, values: usize },
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("text has no alphanumeric tokens")]
    EmptyText,
    #[error("hashed features cancel to a zero vector")]
    DegenerateEmbedding,
    #[error("encoder dimension {0} is below the minimum of 8")]
    DimTooSmall(usize),
}

/// Id-aligned, L2-normalized rows of `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    /// Validate ids and values, then normalize every row to unit length.
    pub fn new(ids: Vec<String>, dim: usize, mut data: Vec<f32>) -> Result<EmbeddingMatrix, EmbedError> {
        check_shape(&ids, dim, &data)?;
        for (row, chunk) in data.chunks_exact_mut(dim).enumerate() {
            let norm = l2_norm(chunk);
            if norm == 0.0 {
                return Err(EmbedError::ZeroRow { row });
            }
            if norm != 1.0 {
                for v in chunk.iter_mut() {
                    *v = (f64::from(*v) / norm) as f32;
                }
            }
        }
        Ok(EmbeddingMatrix { ids, dim, data })
    }

    /// Like [`EmbeddingMatrix::new`], but rows already within [`NORM_TOLERANCE`]
    /// of unit length keep their exact bits.
    pub fn from_normalized(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<EmbeddingMatrix, EmbedError> {
        check_shape(&ids, dim, &data)?;
        let m = EmbeddingMatrix { ids, dim, data };
        if m.first_unnormalized_row().is_some() {
            return EmbeddingMatrix::new(m.ids, m.dim, m.data);
        }
        Ok(m)
    }

    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f32>>) -> Result<EmbeddingMatrix, EmbedError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(EmbedError::ShapeMismatch {
                rows: rows.len(),
                dim,
                values: rows.iter().map(Vec::len).sum(),
            });
        }
        EmbeddingMatrix::new(ids, dim, rows.concat())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Rows for `ids`, in that order. Fails on the first id that is absent.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<EmbeddingMatrix, String> {
        let index: std::collections::HashMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        let mut out_ids = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let &i = index.get(id).ok_or_else(|| id.to_string())?;
            data.extend_from_slice(self.row(i));
            out_ids.push(id.to_string());
        }
        Ok(EmbeddingMatrix {
            ids: out_ids,
            dim: self.dim,
            data,
        })
    }

    fn first_unnormalized_row(&self) -> Option<usize> {
        self.data
            .chunks_exact(self.dim)
            .position(|r| (l2_norm(r) - 1.0).abs() > NORM_TOLERANCE)
    }
}

fn check_shape(ids: &[String], dim: usize, data: &[f32]) -> Result<(), EmbedError> {
    if dim == 0 {
        return Err(EmbedError::ZeroDim);
    }
    if data.len() != ids.len() * dim {
        return Err(EmbedError::ShapeMismatch {
            rows: ids.len(),
            dim,
            values: data.len(),
        });
    }
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if id.is_empty() || id.contains(['\n', '\r']) {
            return Err(EmbedError::InvalidId(id.clone()));
        }
        if !seen.insert(id.as_str()) {
            return Err(EmbedError::DuplicateId(id.clone()));
        }
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(EmbedError::NonFiniteValue {
            row: i / dim,
            col: i % dim,
        });
    }
    Ok(())
}

pub(crate) fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<(), EmbedError> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| EmbedError::Io { path: p, source }
    };

    let file = fs::File::create(path).map_err(io(path))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&(matrix.dim as u32).to_le_bytes());
    header.extend_from_slice(&(matrix.len() as u64).to_le_bytes());
    w.write_all(&header).map_err(io(path))?;
    for v in &matrix.data {
        w.write_all(&v.to_le_bytes()).map_err(io(path))?;
    }
    w.flush().map_err(io(path))?;

    let ids_path = sidecar_path(path);
    let mut sidecar = String::new();
    for id in &matrix.ids {
        sidecar.push_str(id);
        sidecar.push('\n');
    }
    fs::write(&ids_path, sidecar).map_err(io(&ids_path))?;
    Ok(())
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix, EmbedError> {
    let bytes = fs::read(path).map_err(|source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < HEADER_LEN || bytes[0..4] != MAGIC {
        return Err(EmbedError::BadMagic(path.to_path_buf()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(EmbedError::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
        });
    }
    let dim = u32_at(8) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());

    let ids_path = sidecar_path(path);
    let sidecar = fs::read_to_string(&ids_path).map_err(|source| EmbedError::Io {
        path: ids_path.clone(),
        source,
    })?;
    let ids: Vec<String> = sidecar.lines().map(str::to_string).collect();
    if ids.len() as u64 != count {
        return Err(EmbedError::CountMismatch {
            path: path.to_path_buf(),
            header: count,
            sidecar: ids.len(),
        });
    }

    let expected = count * dim as u64 * 4;
    let actual = (bytes.len() - HEADER_LEN) as u64;
    if actual != expected {
        return Err(EmbedError::Truncated {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();

    check_shape(&ids, dim, &data)?;
    let matrix = EmbeddingMatrix { ids, dim, data };
    if let Some(row) = matrix.first_unnormalized_row() {
        warn!(
            "{}: row {row} (and possibly others) deviates from unit norm; renormalizing",
            path.display()
        );
        return EmbeddingMatrix::new(matrix.ids, matrix.dim, matrix.data);
    }
    Ok(matrix)
}

/// Settings for the hashed unigram + bigram encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub dim: usize,
    pub use_bigrams: bool,
    pub hash_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            dim: 256,
            use_bigrams: true,
            hash_seed: 0,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a with the offset basis XORed by `seed` (seed 0 is plain FNV-1a).
pub fn fnv1a64(bytes: &[u8], seed: u64) -> u64 {
    bytes.iter().fold(FNV_OFFSET ^ seed, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Deterministic stand-in for a sentence encoder.
///
/// Every unigram and every bigram of adjacent tokens inside one sentence
/// (joined by a single space) is hashed with [`fnv1a64`]. The bucket is
/// `hash % dim`, the sign is `+1` when bit 63 is clear and `-1` otherwise.
/// The accumulated vector is L2-normalized.
pub fn reference_embed(text: &str, config: &EncoderConfig) -> Result<Vec<f32>, EmbedError> {
    if config.dim < 8 {
        return Err(EmbedError::DimTooSmall(config.dim));
    }
    let sentences = sentences(text);
    if sentences.is_empty() {
        return Err(EmbedError::EmptyText);
    }

    let mut acc = vec![0f64; config.dim];
    let mut add = |feature: &str| {
        let h = fnv1a64(feature.as_bytes(), config.hash_seed);
        let bucket = (h % config.dim as u64) as usize;
        acc[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    };
    for sentence in &sentences {
        for token in sentence {
            add(token);
        }
        if config.use_bigrams {
            for pair in sentence.windows(2) {
                add(&format!("{} {}", pair[0], pair[1]));
            }
        }
    }

    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(EmbedError::DegenerateEmbedding);
    }
    Ok(acc.iter().map(|v| (v / norm) as f32).collect())
}

/// Encode `(id, text)` pairs into a matrix with the reference encoder.
pub fn encode_all<I, S, T>(items: I, config: &EncoderConfig) -> Result<EmbeddingMatrix, EmbedError>
where
    I: IntoIterator<Item = (S, T)>,
    S: Into<String>,
    T: AsRef<str>,
{
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (id, text) in items {
        ids.push(id.into());
        data.extend(reference_embed(text.as_ref(), config)?);
    }
    EmbeddingMatrix::from_normalized(ids, config.dim, data)
}
