//! End-to-end extraction under one validated configuration.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clustering::{default_num_clusters, soft_cluster};
use crate::corpus::{filter_corpus, Corpus, Filter};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result, Stage, StageExt};
use crate::fingerprint::{sha256_hex, Fingerprint};
use crate::lp::{build_model, concentrate, verify_solution, LpParams, VerifyReport};
use crate::mapgraph::{build_map, MapInputs, MapParams, NarrativeMap, RouteCriterion};
use crate::strength::{build_strength_graph, SuccessorLimit};

/// Number of soft clusters: a fixed count or the size-based default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ClusterCount {
    #[default]
    Auto,
    Fixed(usize),
}

impl ClusterCount {
    pub fn resolve(self, num_events: usize) -> usize {
        match self {
            ClusterCount::Auto => default_num_clusters(num_events),
            ClusterCount::Fixed(k) => k,
        }
    }
}

impl std::str::FromStr for ClusterCount {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(ClusterCount::Auto),
            n => n
                .parse()
                .map(ClusterCount::Fixed)
                .map_err(|_| format!("expected a count or `auto`, found `{n}`")),
        }
    }
}

impl Serialize for ClusterCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ClusterCount::Auto => s.serialize_str("auto"),
            ClusterCount::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(k) => Ok(ClusterCount::Fixed(k)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Case-insensitive keyword; `None` keeps every submission.
    pub keyword: Option<String>,
    /// Inclusive window bounds in epoch seconds.
    pub from: Option<i64>,
    pub to: Option<i64>,
    /// Community to extract from; the largest one when unset.
    pub community: Option<String>,
    pub k: usize,
    pub mincover: f64,
    pub minscore: f64,
    pub num_clusters: ClusterCount,
    pub seed: u64,
    pub temperature: f64,
    pub max_successors: SuccessorLimit,
    pub tau: f64,
    pub main_route: RouteCriterion,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        let lp = LpParams::default();
        ExtractionConfig {
            keyword: None,
            from: None,
            to: None,
            community: None,
            k: lp.k,
            mincover: lp.mincover,
            minscore: lp.minscore,
            num_clusters: ClusterCount::Auto,
            seed: 0,
            temperature: 0.1,
            max_successors: SuccessorLimit::default(),
            tau: 0.5,
            main_route: RouteCriterion::Bottleneck,
        }
    }
}

impl ExtractionConfig {
    pub fn lp_params(&self) -> LpParams {
        LpParams {
            k: self.k,
            mincover: self.mincover,
            minscore: self.minscore,
        }
    }

    pub fn filter(&self) -> Filter {
        let window = match (self.from, self.to) {
            (None, None) => None,
            (from, to) => Some((from.unwrap_or(i64::MIN), to.unwrap_or(i64::MAX))),
        };
        Filter {
            keyword: self.keyword.clone().unwrap_or_default(),
            window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lp_params().validate()?;
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::OutOfRange {
                name: "tau",
                value: self.tau,
            });
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::OutOfRange {
                name: "temperature",
                value: self.temperature,
            });
        }
        if let ClusterCount::Fixed(k) = self.num_clusters {
            if k < 2 {
                return Err(Error::OutOfRange {
                    name: "num_clusters",
                    value: k as f64,
                });
            }
        }
        if self.max_successors == SuccessorLimit::Top(0) {
            return Err(Error::OutOfRange {
                name: "max_successors",
                value: 0.0,
            });
        }
        if let (Some(start), Some(end)) = (self.from, self.to) {
            if start > end {
                return Err(Error::InvalidWindow { start, end });
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// Per-run measurements kept apart from the map so exports stay reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub stage_millis: BTreeMap<String, f64>,
    pub events: usize,
    pub candidate_edges: usize,
    pub lp_variables: usize,
    pub lp_constraints: usize,
    pub commitments_tried: usize,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub map: NarrativeMap,
    pub telemetry: Telemetry,
}

/// Picks the configured community (or the largest) and applies the filters.
pub fn select_corpus(
    config: &ExtractionConfig,
    corpora: &BTreeMap<String, Corpus>,
) -> Result<Corpus> {
    let corpus = match &config.community {
        Some(name) => corpora
            .get(name)
            .ok_or_else(|| Error::UnknownCommunity(name.clone())),
        None => corpora
            .values()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b.community().cmp(a.community())))
            .ok_or(Error::EmptyCorpus),
    }
    .stage(Stage::Corpus)?;
    filter_corpus(corpus, &config.filter()).stage(Stage::Corpus)
}

/// Hash of the filtered corpus and the embeddings it uses.
pub fn input_fingerprint(corpus: &Corpus, embeddings: &EmbeddingTable) -> Result<String> {
    let mut bytes = Vec::new();
    corpus.write_jsonl(&mut bytes)?;
    let mut fp = Fingerprint::new("extraction-input/v1");
    fp.bytes(&bytes).u64(embeddings.dim() as u64);
    for id in corpus.ids() {
        fp.str(id);
        if let Some(v) = embeddings.get(id) {
            v.iter().for_each(|x| {
                fp.f64(*x);
            });
        }
    }
    Ok(fp.finish())
}

/// Runs every stage from corpus selection to the assembled map.
pub fn extract(
    config: &ExtractionConfig,
    corpora: &BTreeMap<String, Corpus>,
    embeddings: &EmbeddingTable,
) -> Result<Extraction> {
    config.validate()?;
    let mut telemetry = Telemetry::default();
    let mut clock = Instant::now();
    let mut lap = |telemetry: &mut Telemetry, stage: Stage| {
        let now = Instant::now();
        telemetry
            .stage_millis
            .insert(stage.to_string(), (now - clock).as_secs_f64() * 1e3);
        clock = now;
    };

    let corpus = select_corpus(config, corpora)?;
    telemetry.events = corpus.len();
    lap(&mut telemetry, Stage::Corpus);

    let missing: Vec<String> = embeddings
        .missing(&corpus)
        .into_iter()
        .map(String::from)
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnembeddedEvents(missing).at(Stage::Embedding));
    }
    let input_hash = input_fingerprint(&corpus, embeddings).stage(Stage::Embedding)?;
    lap(&mut telemetry, Stage::Embedding);

    let ids: Vec<String> = corpus.ids().map(String::from).collect();
    let num_clusters = config.num_clusters.resolve(ids.len());
    let memberships = soft_cluster(
        embeddings,
        &ids,
        num_clusters,
        config.seed,
        config.temperature,
    )
    .stage(Stage::Clustering)?;
    lap(&mut telemetry, Stage::Clustering);

    let graph = build_strength_graph(&corpus, embeddings, &memberships, config.max_successors)
        .stage(Stage::Strength)?;
    telemetry.candidate_edges = graph.edges.len();
    lap(&mut telemetry, Stage::Strength);

    let model = build_model(
        &graph,
        &memberships,
        corpus.percentiles(),
        config.lp_params(),
    )
    .stage(Stage::Lp)?;
    telemetry.lp_variables = model.num_variables();
    telemetry.lp_constraints = model.num_constraints();
    let concentrated = concentrate(&model, config.tau).stage(Stage::Lp)?;
    telemetry.commitments_tried = concentrated.commitments_tried;
    let solution = concentrated
        .solution
        .clone()
        .require_optimal()
        .stage(Stage::Lp)?;
    let max_violation = match verify_solution(&concentrated.model, &solution).stage(Stage::Lp)? {
        VerifyReport::Checked { max_violation, .. } => max_violation,
        VerifyReport::NotApplicable => f64::NAN,
    };
    lap(&mut telemetry, Stage::Lp);

    let mut map = build_map(MapInputs {
        corpus: &corpus,
        graph: &graph,
        model: &concentrated.model,
        solution: &solution,
        relaxation_objective: concentrated.relaxation_objective,
        max_violation,
        params: MapParams {
            k: config.k,
            mincover: config.mincover,
            minscore: config.minscore,
            seed: config.seed,
            tau: config.tau,
            num_clusters,
            temperature: config.temperature,
            max_successors: config.max_successors,
            main_route: config.main_route,
        },
    })
    .stage(Stage::Map)?;
    map.provenance.config_hash = config.fingerprint();
    map.provenance.input_hash = input_hash;
    lap(&mut telemetry, Stage::Map);
    Ok(Extraction { map, telemetry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Submission;
    use crate::lp::InfeasibleClass;

    #[test]
    fn defaults() {
        let c = ExtractionConfig::default();
        assert_eq!((c.k, c.mincover, c.minscore), (8, 0.5, 0.85));
        assert_eq!(c.num_clusters, ClusterCount::Auto);
        assert_eq!(c.max_successors, SuccessorLimit::Top(20));
        assert_eq!(c.tau, 0.5);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_parses_partial_documents() {
        let c: ExtractionConfig = serde_json::from_str(
            r#"{"minscore": 0.6, "num_clusters": 4, "max_successors": "all"}"#,
        )
        .unwrap();
        assert_eq!(c.minscore, 0.6);
        assert_eq!(c.num_clusters, ClusterCount::Fixed(4));
        assert_eq!(c.max_successors, SuccessorLimit::All);
        assert_eq!(c.k, 8);
        assert!(serde_json::from_str::<ExtractionConfig>(r#"{"kk": 3}"#).is_err());
        assert!(serde_json::from_str::<ExtractionConfig>(r#"{"num_clusters": "many"}"#).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let bad = |f: fn(&mut ExtractionConfig)| {
            let mut c = ExtractionConfig::default();
            f(&mut c);
            c.validate().unwrap_err().to_string()
        };
        assert_eq!(bad(|c| c.minscore = 1.5), "minscore out of range: 1.5");
        assert_eq!(bad(|c| c.mincover = -0.1), "mincover out of range: -0.1");
        assert_eq!(bad(|c| c.tau = 0.0), "tau out of range: 0");
        assert!(bad(|c| c.k = 1).contains("K = 1"));
        assert!(bad(|c| {
            c.from = Some(10);
            c.to = Some(5)
        })
        .contains("invalid window"));
    }

    #[test]
    fn window_bounds_default_open() {
        let c = ExtractionConfig {
            from: Some(100),
            ..ExtractionConfig::default()
        };
        assert_eq!(c.filter().window, Some((100, i64::MAX)));
        assert_eq!(ExtractionConfig::default().filter().window, None);
    }

    fn corpora(
        n: usize,
        score: impl Fn(usize) -> i64,
    ) -> (BTreeMap<String, Corpus>, EmbeddingTable) {
        let subs = (0..n)
            .map(|i| Submission {
                id: format!("p{i:02}"),
                community: "c".into(),
                title: format!("post {i}"),
                body: String::new(),
                created_at: i as i64,
                score: score(i),
                upvote_ratio: 0.9,
            })
            .collect();
        let mut table = EmbeddingTable::new(2);
        for i in 0..n {
            let a = i as f64 * 0.05;
            table
                .insert(format!("p{i:02}"), vec![a.cos(), a.sin()])
                .unwrap();
        }
        let mut map = BTreeMap::new();
        map.insert("c".into(), Corpus::new("c", subs).unwrap());
        (map, table)
    }

    #[test]
    fn missing_embeddings_are_listed_at_once() {
        let (c, _) = corpora(4, |i| i as i64);
        let table = EmbeddingTable::new(2);
        let err = extract(&ExtractionConfig::default(), &c, &table).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Embedding));
        assert_eq!(
            err.to_string(),
            "embedding: unembedded event(s): p00, p01, p02, p03"
        );
    }

    #[test]
    fn uniformly_low_percentiles_are_acceptance_infeasible() {
        // eight events: percentiles run from 1/16 to 15/16, so the start and
        // end alone cannot average 0.85; with every percentile below 0.99 the
        // acceptance row has no positive term
        let (c, t) = corpora(8, |i| i as i64);
        let config = ExtractionConfig {
            minscore: 0.99,
            mincover: 0.0,
            k: 2,
            ..ExtractionConfig::default()
        };
        let err = extract(&config, &c, &t).unwrap_err();
        assert!(matches!(
            err.root(),
            Error::Infeasible(InfeasibleClass::Acceptance)
        ));
        assert_eq!(err.to_string(), "lp: acceptance constraint infeasible");
    }

    #[test]
    fn unknown_community() {
        let (c, t) = corpora(4, |i| i as i64);
        let config = ExtractionConfig {
            community: Some("nope".into()),
            ..ExtractionConfig::default()
        };
        assert_eq!(
            extract(&config, &c, &t).unwrap_err().to_string(),
            "corpus: unknown community `nope`"
        );
    }
}
