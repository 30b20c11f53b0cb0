//! Command-line and HTTP front ends over a local corpus store.

pub mod error;
pub mod service;
pub mod store;

use narrative_atlas::pipeline::Telemetry;
use narrative_atlas::{extract, ExtractionConfig, NarrativeMap};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use error::{AppError, AppResult, Kind};
pub use store::Store;

pub const STORE_ENV: &str = "NARRATIVE_ATLAS_STORE";

/// Extraction parameters plus the stored corpus they apply to.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractRequest {
    pub corpus: String,
    pub config: ExtractionConfig,
}

impl ExtractRequest {
    /// Parses `{"corpus": id, ...config fields}`; absent fields take defaults.
    pub fn from_json(bytes: &[u8]) -> AppResult<Self> {
        let mut fields: serde_json::Map<String, serde_json::Value> = serde_json::from_slice(bytes)
            .map_err(|e| AppError::invalid(format!("malformed request: {e}")))?;
        let corpus = match fields.remove("corpus") {
            Some(serde_json::Value::String(id)) => id,
            Some(_) => return Err(AppError::invalid("`corpus` must be a string")),
            None => return Err(AppError::invalid("missing field `corpus`")),
        };
        let config = serde_json::from_value(serde_json::Value::Object(fields))
            .map_err(|e| AppError::invalid(format!("invalid config: {e}")))?;
        Ok(ExtractRequest { corpus, config })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractResponse {
    pub map_id: String,
    pub corpus: String,
    /// Effective configuration, defaults resolved.
    pub config: ExtractionConfig,
    pub map: NarrativeMap,
    pub telemetry: Telemetry,
}

/// Id of the map produced from `corpus` under `config`.
pub fn map_id(corpus: &str, config: &ExtractionConfig) -> String {
    let mut h = Sha256::new();
    h.update(corpus.as_bytes());
    h.update([0]);
    h.update(config.fingerprint().as_bytes());
    hex::encode(h.finalize())[..store::ID_LEN].to_string()
}

pub fn run_extraction(store: &Store, request: &ExtractRequest) -> AppResult<ExtractResponse> {
    request.config.validate()?;
    let corpora = store.load_corpora(&request.corpus)?;
    let embeddings = store.load_embeddings(&request.corpus)?;
    let x = extract(&request.config, &corpora, &embeddings)?;
    Ok(ExtractResponse {
        map_id: map_id(&request.corpus, &request.config),
        corpus: request.corpus.clone(),
        config: request.config.clone(),
        map: x.map,
        telemetry: x.telemetry,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_document<T: Serialize>(value: &T) -> AppResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(narrative_atlas::Error::from)?;
    s.push('\n');
    Ok(s)
}
