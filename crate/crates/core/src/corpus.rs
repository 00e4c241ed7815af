//! Timestamped documents, their tokens, and the embedding matrix that rides along.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

const EMBEDDING_MAGIC: &[u8; 4] = b"EVT1";
const EMBEDDING_VERSION: u32 = 1;
const EMBEDDING_HEADER_LEN: usize = 4 + 4 + 8 + 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub text: String,
    pub tokens: Vec<String>,
}

/// Documents in canonical `(timestamp, id)` order plus the token vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corpus {
    documents: Vec<Document>,
    /// Token at each vocabulary index, in first-occurrence order.
    vocabulary: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Sorts the documents canonically and builds the vocabulary.
    pub fn from_documents(mut documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        documents.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));

        let mut vocabulary = Vec::new();
        let mut index = HashMap::new();
        for doc in &documents {
            for token in &doc.tokens {
                if !index.contains_key(token) {
                    index.insert(token.clone(), vocabulary.len());
                    vocabulary.push(token.clone());
                }
            }
        }
        Ok(Corpus {
            documents,
            vocabulary,
            index,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        // ids are unique but not sorted; a linear scan is fine for sidecar loading
        self.documents.iter().position(|d| d.id == id)
    }

    pub fn timestamp_range(&self) -> Option<(i64, i64)> {
        let first = self.documents.first()?.timestamp;
        let last = self.documents.last()?.timestamp;
        Some((first, last))
    }
}

/// Splits text into lowercase word tokens.
///
/// Words follow Unicode word boundaries. Tokens shorter than two characters,
/// tokens made only of digits, and stopwords are dropped. Order and
/// duplicates are kept.
pub fn tokenize(text: &str, stopwords: Option<&HashSet<String>>) -> Vec<String> {
    text.unicode_words()
        .map(str::to_lowercase)
        .filter(|w| w.chars().count() >= 2)
        .filter(|w| !w.chars().all(|c| c.is_ascii_digit() || c.is_numeric()))
        .filter(|w| stopwords.is_none_or(|s| !s.contains(w)))
        .collect()
}

#[derive(Deserialize)]
struct RawDocument {
    id: String,
    timestamp: serde_json::Value,
    text: String,
}

fn parse_timestamp(value: &serde_json::Value) -> Option<i64> {
    match value {
        serde_json::Value::Number(n) => n.as_i64(),
        serde_json::Value::String(s) => chrono::DateTime::parse_from_rfc3339(s)
            .ok()
            .map(|dt| dt.timestamp()),
        _ => None,
    }
}

/// Parses JSON-lines corpus text. Blank lines are skipped.
pub fn parse_corpus<R: BufRead>(reader: R, stopwords: Option<&HashSet<String>>) -> Result<Corpus> {
    let mut documents = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if raw.id.is_empty() {
            return Err(Error::MalformedLine {
                line: line_no,
                message: "empty id".into(),
            });
        }
        let timestamp = parse_timestamp(&raw.timestamp).ok_or_else(|| Error::Timestamp {
            line: line_no,
            value: raw.timestamp.to_string(),
        })?;
        let tokens = tokenize(&raw.text, stopwords);
        documents.push(Document {
            id: raw.id,
            timestamp,
            text: raw.text,
            tokens,
        });
    }
    Corpus::from_documents(documents)
}

pub fn load_corpus(path: &Path, stopwords: Option<&HashSet<String>>) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), stopwords)
}

/// Writes documents as JSON lines (id, integer timestamp, text).
pub fn write_corpus<W: Write>(mut out: W, documents: &[Document]) -> std::io::Result<()> {
    for doc in documents {
        let line = serde_json::json!({
            "id": doc.id,
            "timestamp": doc.timestamp,
            "text": doc.text,
        });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Dense row-major `rows x dim` matrix of f32 document embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmbeddingFormat("dimension must be at least 1".into()));
        }
        if values.len() != rows * dim {
            return Err(Error::EmbeddingFormat(format!(
                "expected {} values, got {}",
                rows * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(EmbeddingMatrix { rows, dim, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// Default companion path for an embedding file: `<path>.ids`.
pub fn sidecar_path(embeddings: &Path) -> PathBuf {
    let mut s = embeddings.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

/// Encodes the `EVT1` binary layout.
pub fn encode_embeddings(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let mut buf = Vec::with_capacity(EMBEDDING_HEADER_LEN + matrix.values.len() * 4);
    buf.extend_from_slice(EMBEDDING_MAGIC);
    buf.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    buf.extend_from_slice(&(matrix.rows as u64).to_le_bytes());
    buf.extend_from_slice(&(matrix.dim as u32).to_le_bytes());
    for v in &matrix.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

/// Decodes the `EVT1` layout, keeping file row order.
///
/// Non-finite values are reported with their file row.
pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < EMBEDDING_HEADER_LEN {
        return Err(Error::EmbeddingFormat("truncated header".into()));
    }
    if &bytes[0..4] != EMBEDDING_MAGIC {
        return Err(Error::EmbeddingFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != EMBEDDING_VERSION {
        return Err(Error::EmbeddingFormat(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let payload = &bytes[EMBEDDING_HEADER_LEN..];
    let expected = rows
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::EmbeddingFormat("header sizes overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::EmbeddingFormat(format!(
            "payload is {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(rows, dim, values)
}

pub fn write_embeddings(path: &Path, ids: &[String], matrix: &EmbeddingMatrix) -> Result<()> {
    if ids.len() != matrix.rows {
        return Err(Error::LengthMismatch(ids.len(), matrix.rows));
    }
    fs::write(path, encode_embeddings(matrix)).map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    let mut text = String::new();
    for id in ids {
        text.push_str(id);
        text.push('\n');
    }
    fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

/// Loads an embedding file and its id sidecar, re-permuting rows to corpus order.
pub fn load_embeddings(path: &Path, sidecar: &Path, corpus: &Corpus) -> Result<EmbeddingMatrix> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let ids_text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let ids: Vec<String> = ids_text
        .lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .filter(|l| !l.is_empty())
        .collect();
    let file_matrix = decode_embeddings(&bytes)?;
    align_rows(&file_matrix, &ids, corpus)
}

/// Reorders file rows (labelled by `ids`) into corpus order.
pub fn align_rows(file_matrix: &EmbeddingMatrix, ids: &[String], corpus: &Corpus) -> Result<EmbeddingMatrix> {
    if ids.len() != file_matrix.rows {
        return Err(Error::EmbeddingFormat(format!(
            "sidecar lists {} ids for {} rows",
            ids.len(),
            file_matrix.rows
        )));
    }
    if file_matrix.rows != corpus.len() {
        return Err(Error::RowCountMismatch {
            rows: file_matrix.rows,
            documents: corpus.len(),
        });
    }
    let positions: HashMap<&str, usize> = corpus
        .documents()
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    let dim = file_matrix.dim;
    let mut values = vec![0f32; file_matrix.values.len()];
    let mut filled = vec![false; corpus.len()];
    for (file_row, id) in ids.iter().enumerate() {
        let target = *positions
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownSidecarId(id.clone()))?;
        if std::mem::replace(&mut filled[target], true) {
            return Err(Error::DuplicateId(id.clone()));
        }
        values[target * dim..(target + 1) * dim].copy_from_slice(file_matrix.row(file_row));
    }
    EmbeddingMatrix::new(corpus.len(), dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_from(lines: &str) -> Result<Corpus> {
        parse_corpus(lines.as_bytes(), None)
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("", None).is_empty());
        assert_eq!(tokenize("Deep Learning, 2020!", None), vec!["deep", "learning"]);
        assert_eq!(tokenize("a b cd", None), vec!["cd"]);
        let stop: HashSet<String> = ["the".to_string()].into();
        assert_eq!(tokenize("The cat the hat", Some(&stop)), vec!["cat", "hat"]);
        assert_eq!(tokenize("Ünïcode ÉTÉ", None), vec!["ünïcode", "été"]);
    }

    #[test]
    fn loads_three_documents_in_time_order() {
        let c = corpus_from(
            r#"{"id":"b","timestamp":30,"text":"gamma delta"}
{"id":"a","timestamp":10,"text":"alpha beta"}
{"id":"c","timestamp":"1970-01-01T00:00:20Z","text":"beta gamma","extra":1}
"#,
        )
        .unwrap();
        let ids: Vec<_> = c.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "c", "b"]);
        assert_eq!(c.vocabulary(), ["alpha", "beta", "gamma", "delta"]);
        assert_eq!(c.token_index("gamma"), Some(2));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let err = corpus_from(
            "{\"id\":\"d1\",\"timestamp\":1,\"text\":\"x\"}\n{\"id\":\"d1\",\"timestamp\":2,\"text\":\"y\"}\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "d1"));
    }

    #[test]
    fn malformed_line_names_line_number() {
        let err = corpus_from("{\"id\":\"a\",\"timestamp\":1,\"text\":\"x\"}\nnot json\n").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 2, .. }));
        let err = corpus_from("{\"id\":\"a\",\"timestamp\":\"yesterday\",\"text\":\"x\"}\n").unwrap_err();
        assert!(matches!(err, Error::Timestamp { line: 1, .. }));
        let err = corpus_from("{\"id\":\"a\",\"timestamp\":1.5,\"text\":\"x\"}\n").unwrap_err();
        assert!(matches!(err, Error::Timestamp { line: 1, .. }));
    }

    #[test]
    fn nan_is_reported_with_its_row() {
        let mut values = vec![0.5f32; 10 * 16];
        values[5 * 16 + 12] = f32::NAN;
        let bytes = encode_embeddings(&EmbeddingMatrix {
            rows: 10,
            dim: 16,
            values,
        });
        let err = decode_embeddings(&bytes).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 5, col: 12 }));
    }

    #[test]
    fn header_layout_is_bit_exact() {
        let m = EmbeddingMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let bytes = encode_embeddings(&m);
        assert_eq!(&bytes[..4], b"EVT1");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[3, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 24);
        assert_eq!(decode_embeddings(&bytes).unwrap(), m);
    }

    #[test]
    fn sidecar_errors_are_distinct() {
        let c = corpus_from(
            "{\"id\":\"a\",\"timestamp\":1,\"text\":\"xx\"}\n{\"id\":\"b\",\"timestamp\":2,\"text\":\"yy\"}\n",
        )
        .unwrap();
        let m = EmbeddingMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        let swapped = align_rows(&m, &["b".into(), "a".into()], &c).unwrap();
        assert_eq!(swapped.values(), &[2.0, 1.0]);

        let err = align_rows(&m, &["a".into(), "zz".into()], &c).unwrap_err();
        assert!(matches!(err, Error::UnknownSidecarId(ref id) if id == "zz"));

        let three = EmbeddingMatrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let err = align_rows(&three, &["a".into(), "b".into(), "c".into()], &c).unwrap_err();
        assert!(matches!(err, Error::RowCountMismatch { rows: 3, documents: 2 }));
    }
}
