//! Extraction of community-accepted narrative maps.
//!
//! A corpus of timestamped, community-scored posts is turned into a directed
//! acyclic graph of events by solving a linear program that maximizes the
//! weakest active edge, where edge strength combines topical coherence with
//! community acceptance. The solution is rounded into a [`NarrativeMap`] with a
//! main route, storylines and representative landmarks.
//!
//! The stages are exposed individually ([`corpus`], [`embedding`],
//! [`clustering`], [`strength`], [`lp`], [`mapgraph`]) and composed by
//! [`pipeline::extract`].

pub mod clustering;
pub mod corpus;
pub mod embedding;
mod error;
mod fingerprint;
pub mod lp;
pub mod mapgraph;
pub mod pipeline;
pub mod strength;
pub mod synth;

pub use corpus::{Corpus, Submission};
pub use embedding::EmbeddingTable;
pub use error::{Error, Result, Stage};
pub use mapgraph::NarrativeMap;
pub use pipeline::{extract, ExtractionConfig};
