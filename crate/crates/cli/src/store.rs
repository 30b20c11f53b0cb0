//! Content-addressed on-disk store of ingested corpora and extracted maps.
//!
//! ```text
//! <root>/corpora/<id>/submissions.jsonl
//! <root>/corpora/<id>/meta.json
//! <root>/corpora/<id>/embeddings.jsonl
//! <root>/maps/<map id>.json
//! ```
//!
//! A corpus id is a prefix of the SHA-256 of its canonical submissions file,
//! so ingesting the same content twice yields the same id.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use narrative_atlas::corpus::{load_submissions, LoadOptions};
use narrative_atlas::embedding::load_embeddings;
use narrative_atlas::{Corpus, EmbeddingTable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

pub const ID_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityCount {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub id: String,
    pub sha256: String,
    pub records: usize,
    /// Descending by count, then by name.
    pub communities: Vec<CommunityCount>,
}

/// Listing entry for one stored corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    #[serde(flatten)]
    pub meta: CorpusMeta,
    pub has_embeddings: bool,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Accepts only ids the store itself could have produced.
fn check_id(id: &str) -> AppResult<()> {
    if id.len() == ID_LEN
        && id
            .bytes()
            .all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
    {
        Ok(())
    } else {
        Err(AppError::invalid(format!("malformed id `{id}`")))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

pub fn community_counts(corpora: &BTreeMap<String, Corpus>) -> Vec<CommunityCount> {
    let mut counts: Vec<CommunityCount> = corpora
        .values()
        .map(|c| CommunityCount {
            name: c.community().to_string(),
            count: c.len(),
        })
        .collect();
    counts.sort_by(|a, b| b.count.cmp(&a.count).then(a.name.cmp(&b.name)));
    counts
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn corpus_dir(&self, id: &str) -> PathBuf {
        self.root.join("corpora").join(id)
    }

    fn map_path(&self, id: &str) -> PathBuf {
        self.root.join("maps").join(format!("{id}.json"))
    }

    /// Persists the corpora; returns the metadata and whether the content was new.
    pub fn ingest(&self, corpora: &BTreeMap<String, Corpus>) -> AppResult<(CorpusMeta, bool)> {
        let mut bytes = Vec::new();
        for corpus in corpora.values() {
            corpus.write_jsonl(&mut bytes)?;
        }
        if bytes.is_empty() {
            return Err(AppError::from(narrative_atlas::Error::EmptyCorpus));
        }
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let meta = CorpusMeta {
            id: sha256[..ID_LEN].to_string(),
            sha256,
            records: corpora.values().map(Corpus::len).sum(),
            communities: community_counts(corpora),
        };
        let dir = self.corpus_dir(&meta.id);
        if dir.join("meta.json").is_file() {
            return Ok((self.meta(&meta.id)?, false));
        }
        fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        write_atomic(&dir.join("submissions.jsonl"), &bytes)?;
        let json = serde_json::to_vec_pretty(&meta).map_err(narrative_atlas::Error::from)?;
        write_atomic(&dir.join("meta.json"), &json)?;
        Ok((meta, true))
    }

    pub fn meta(&self, id: &str) -> AppResult<CorpusMeta> {
        check_id(id)?;
        let path = self.corpus_dir(id).join("meta.json");
        let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => AppError::not_found(format!("unknown corpus `{id}`")),
            _ => AppError::io(&path, e),
        })?;
        Ok(serde_json::from_str(&text).map_err(narrative_atlas::Error::from)?)
    }

    /// Every stored corpus, ordered by id.
    pub fn list(&self) -> AppResult<Vec<CorpusSummary>> {
        let dir = self.root.join("corpora");
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(AppError::io(&dir, e)),
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| check_id(id).is_ok())
            .collect();
        ids.sort();
        ids.into_iter()
            .map(|id| {
                Ok(CorpusSummary {
                    has_embeddings: self.corpus_dir(&id).join("embeddings.jsonl").is_file(),
                    meta: self.meta(&id)?,
                })
            })
            .collect()
    }

    pub fn load_corpora(&self, id: &str) -> AppResult<BTreeMap<String, Corpus>> {
        self.meta(id)?;
        let path = self.corpus_dir(id).join("submissions.jsonl");
        let file = fs::File::open(&path).map_err(|e| AppError::io(&path, e))?;
        let strict = LoadOptions {
            max_malformed_fraction: 0.0,
        };
        Ok(load_submissions(BufReader::new(file), strict)?.corpora)
    }

    /// Keeps the vectors of the corpus's events; returns how many matched.
    pub fn import_embeddings(&self, id: &str, table: &EmbeddingTable) -> AppResult<usize> {
        let corpora = self.load_corpora(id)?;
        let mut kept = EmbeddingTable::new(table.dim());
        for corpus in corpora.values() {
            for event in corpus.ids() {
                if let Some(v) = table.get(event) {
                    kept.insert(event, v.to_vec())?;
                }
            }
        }
        if kept.is_empty() {
            return Err(AppError::new(
                crate::error::Kind::Unprocessable,
                format!("no embedding matches an event of corpus `{id}`"),
            ));
        }
        let mut bytes = Vec::new();
        kept.write_jsonl(&mut bytes)?;
        write_atomic(&self.corpus_dir(id).join("embeddings.jsonl"), &bytes)?;
        Ok(kept.len())
    }

    pub fn load_embeddings(&self, id: &str) -> AppResult<EmbeddingTable> {
        self.meta(id)?;
        let path = self.corpus_dir(id).join("embeddings.jsonl");
        let file = fs::File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                AppError::not_found(format!("corpus `{id}` has no embeddings; run embed-import"))
            }
            _ => AppError::io(&path, e),
        })?;
        Ok(load_embeddings(BufReader::new(file))?)
    }

    pub fn save_map(&self, id: &str, document: &str) -> AppResult<PathBuf> {
        check_id(id)?;
        let dir = self.root.join("maps");
        fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        let path = self.map_path(id);
        write_atomic(&path, document.as_bytes())?;
        Ok(path)
    }

    pub fn load_map(&self, id: &str) -> AppResult<String> {
        check_id(id)?;
        let path = self.map_path(id);
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => AppError::not_found(format!("unknown map `{id}`")),
            _ => AppError::io(&path, e),
        })
    }
}
