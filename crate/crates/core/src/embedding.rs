//! Externally supplied text embeddings and angular similarity.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Submission};
use crate::error::{Error, Result};

/// Unit-normalized embedding vectors keyed by event id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    /// Normalizes and stores `vector` under `id`.
    pub fn insert(&mut self, id: impl Into<String>, mut vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::InconsistentDimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::DegenerateEmbedding(id));
        }
        // already-unit vectors are kept bit-exact so stored tables round-trip
        if (norm - 1.0).abs() > 1e-12 {
            vector.iter_mut().for_each(|x| *x /= norm);
        }
        if self.vectors.insert(id.clone(), vector).is_some() {
            return Err(Error::DuplicateId(id));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Ids of the corpus that have no vector, in corpus order.
    pub fn missing<'a>(&self, corpus: &'a Corpus) -> Vec<&'a str> {
        corpus.ids().filter(|id| !self.contains(id)).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for (id, v) in &self.vectors {
            serde_json::to_writer(
                &mut out,
                &Record {
                    id: id.clone(),
                    vector: v.clone(),
                },
            )?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Reads `{"id": ..., "vector": [...]}` lines. The first record fixes the dimension.
pub fn load_embeddings<R: BufRead>(source: R) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        table
            .get_or_insert_with(|| EmbeddingTable::new(rec.vector.len()))
            .insert(rec.id, rec.vector)?;
    }
    table.ok_or(Error::EmptyCorpus)
}

/// `1 - angle / pi` for two unit vectors.
pub fn angular_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InconsistentDimension {
            expected: u.len(),
            found: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(1.0 - dot.clamp(-1.0, 1.0).acos() / std::f64::consts::PI)
}

/// Which part of a submission is sent to the embedding provider.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextMode {
    #[default]
    TitleAndBody,
    TitleOnly,
}

pub fn submission_text(s: &Submission, mode: TextMode) -> String {
    match mode {
        TextMode::TitleAndBody if !s.body.trim().is_empty() => format!("{}\n{}", s.title, s.body),
        _ => s.title.clone(),
    }
}

/// A source of sentence embeddings; one output vector per input text, same order.
pub trait EmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Embeds every submission of `corpus` through `provider`.
pub fn embed_corpus<P: EmbeddingProvider + ?Sized>(
    provider: &P,
    corpus: &Corpus,
    mode: TextMode,
) -> Result<EmbeddingTable> {
    let texts: Vec<String> = corpus
        .submissions()
        .iter()
        .map(|s| submission_text(s, mode))
        .collect();
    let vectors = provider.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Solver(format!(
            "embedding provider returned {} vectors for {} texts",
            vectors.len(),
            texts.len()
        )));
    }
    let dim = vectors.first().map_or(0, Vec::len);
    let mut table = EmbeddingTable::new(dim);
    for (s, v) in corpus.submissions().iter().zip(vectors) {
        table.insert(s.id.clone(), v)?;
    }
    Ok(table)
}
