//! Word vectors, bi-gram and document embeddings, cosine similarity.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::fnv1a64;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("cannot read {0}")]
    Io(String),
    #[error("embedding file has no vectors")]
    Empty,
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: bad number {token:?}")]
    BadNumber { line: usize, token: String },
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingBackend {
    /// Vectors from a file; unknown words map to the zero vector.
    File,
    /// Unknown words map to a deterministic pseudo-random unit vector.
    Hash,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    backend: EmbeddingBackend,
    /// Multiplier applied to generated hash vectors.
    hash_scale: f64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl EmbeddingModel {
    pub fn from_vectors(vectors: HashMap<String, Vec<f64>>) -> Result<Self, EmbeddingError> {
        let dim = vectors.values().next().map(Vec::len).ok_or(EmbeddingError::Empty)?;
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        if let Some(v) = vectors.values().find(|v| v.len() != dim) {
            return Err(EmbeddingError::LengthMismatch(dim, v.len()));
        }
        Ok(Self { dim, vectors, backend: EmbeddingBackend::File, hash_scale: 1.0 })
    }

    /// Hermetic model where every word gets a hash-seeded unit vector.
    pub fn hashed(dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        Ok(Self { dim, vectors: HashMap::new(), backend: EmbeddingBackend::Hash, hash_scale: 1.0 })
    }

    /// Parses `word v1 ... vd` lines; an `N d` header line is skipped.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (n, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            if n == 0 && rest.len() == 1 && word.parse::<u64>().is_ok() && rest[0].parse::<u64>().is_ok() {
                continue;
            }
            let values = rest
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| EmbeddingError::BadNumber { line: n + 1, token: t.to_string() }))
                .collect::<Result<Vec<_>, _>>()?;
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected || expected == 0 {
                return Err(EmbeddingError::DimensionMismatch { line: n + 1, expected, found: values.len() });
            }
            vectors.insert(word.to_string(), values);
        }
        Self::from_vectors(vectors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EmbeddingError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> EmbeddingBackend {
        self.backend
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vectors.len()
    }

    /// Same model with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let vectors = self
            .vectors
            .iter()
            .map(|(w, v)| (w.clone(), v.iter().map(|x| x * factor).collect()))
            .collect();
        Self { vectors, hash_scale: self.hash_scale * factor, ..*self }
    }

    fn hash_vector(&self, word: &str) -> Vec<f64> {
        let mut state = fnv1a64(word.as_bytes());
        let raw: Vec<f64> = (0..self.dim)
            .map(|_| (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
            .collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            let mut v = vec![0.0; self.dim];
            v[0] = self.hash_scale;
            return v;
        }
        raw.into_iter().map(|x| x / norm * self.hash_scale).collect()
    }

    /// Vector for `word`. The empty string is always the zero vector.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        if word.is_empty() {
            return vec![0.0; self.dim];
        }
        match (self.vectors.get(word), self.backend) {
            (Some(v), _) => v.clone(),
            (None, EmbeddingBackend::File) => vec![0.0; self.dim],
            (None, EmbeddingBackend::Hash) => self.hash_vector(word),
        }
    }

    fn mean_of<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for w in words {
            for (s, x) in sum.iter_mut().zip(self.lookup(w)) {
                *s += x;
            }
            n += 1;
        }
        if n > 0 {
            sum.iter_mut().for_each(|s| *s /= n as f64);
        }
        sum
    }

    /// Element-wise mean of the two word vectors.
    pub fn embed_bigram(&self, first: &str, second: &str) -> Vec<f64> {
        self.mean_of([first, second])
    }

    /// Element-wise mean over all words; zero vector for an empty document.
    pub fn embed_document<S: AsRef<str>>(&self, words: &[S]) -> Vec<f64> {
        self.mean_of(words.iter().map(AsRef::as_ref))
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}
