//! Pairwise coherence, community acceptance and combined edge strength.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_similarity, MembershipMatrix};
use crate::corpus::Corpus;
use crate::embedding::{angular_similarity, EmbeddingTable};
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

/// Geometric mean of angular and cluster similarity.
pub fn coherence(angular: f64, cluster_sim: f64) -> f64 {
    (angular * cluster_sim).sqrt()
}

/// Product of the geometric means of score percentiles and upvote ratios.
pub fn acceptance(sp_i: f64, sp_j: f64, ur_i: f64, ur_j: f64) -> f64 {
    (sp_i * sp_j).sqrt() * (ur_i * ur_j).sqrt()
}

/// Per-event inputs looked up by id.
pub struct EventFactors<'a> {
    pub corpus: &'a Corpus,
    pub table: &'a EmbeddingTable,
    pub memberships: &'a MembershipMatrix,
}

impl EventFactors<'_> {
    pub fn coherence(&self, a: &str, b: &str) -> Result<f64> {
        let vec = |id: &str| {
            self.table
                .get(id)
                .ok_or_else(|| Error::UnembeddedEvents(vec![id.to_string()]))
        };
        let row = |id: &str| {
            self.memberships
                .get(id)
                .ok_or_else(|| Error::UnclusteredEvent(id.to_string()))
        };
        let angular = angular_similarity(vec(a)?, vec(b)?)?;
        let clusters = cluster_similarity(row(a)?, row(b)?)?;
        Ok(coherence(angular, clusters))
    }

    pub fn acceptance(&self, a: &str, b: &str) -> Result<f64> {
        let stats = |id: &str| {
            let s = self
                .corpus
                .get(id)
                .ok_or_else(|| Error::UnscoredEvent(id.to_string()))?;
            let p = self.corpus.score_percentile(id).expect("indexed");
            Ok::<_, Error>((p, s.upvote_ratio))
        };
        let (sp_a, ur_a) = stats(a)?;
        let (sp_b, ur_b) = stats(b)?;
        Ok(acceptance(sp_a, sp_b, ur_a, ur_b))
    }
}

/// How many temporal successors each event keeps as candidate edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuccessorLimit {
    All,
    Top(usize),
}

impl Default for SuccessorLimit {
    fn default() -> Self {
        SuccessorLimit::Top(20)
    }
}

impl Serialize for SuccessorLimit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SuccessorLimit::All => s.serialize_str("all"),
            SuccessorLimit::Top(m) => s.serialize_u64(*m as u64),
        }
    }
}

impl<'de> Deserialize<'de> for SuccessorLimit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(m) => Ok(SuccessorLimit::Top(m)),
            Raw::Word(w) if w == "all" => Ok(SuccessorLimit::All),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a count or \"all\", found `{w}`"
            ))),
        }
    }
}

impl std::str::FromStr for SuccessorLimit {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(SuccessorLimit::All),
            n => n
                .parse()
                .map(SuccessorLimit::Top)
                .map_err(|_| format!("expected a count or `all`, found `{n}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateEdge {
    /// Index into [`StrengthGraph::event_ids`]; always below `target`.
    pub source: usize,
    pub target: usize,
    pub coherence: f64,
    pub acceptance: f64,
    pub strength: f64,
}

/// Temporally forward candidate edges over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthGraph {
    pub event_ids: Vec<String>,
    pub edges: Vec<CandidateEdge>,
    pub fingerprint: String,
}

impl StrengthGraph {
    pub fn num_events(&self) -> usize {
        self.event_ids.len()
    }

    pub fn edge(&self, source: usize, target: usize) -> Option<&CandidateEdge> {
        self.edges
            .binary_search_by(|e| (e.source, e.target).cmp(&(source, target)))
            .ok()
            .map(|i| &self.edges[i])
    }

    /// Tab-separated `id_i, id_j, coherence, acceptance, strength` with a header row.
    pub fn edge_table(&self) -> String {
        let mut out = String::from("id_i\tid_j\tcoherence\tacceptance\tstrength\n");
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                self.event_ids[e.source],
                self.event_ids[e.target],
                e.coherence,
                e.acceptance,
                e.strength
            );
        }
        out
    }
}

/// Builds candidate edges from every event to its strongest temporal successors.
pub fn build_strength_graph(
    corpus: &Corpus,
    table: &EmbeddingTable,
    memberships: &MembershipMatrix,
    limit: SuccessorLimit,
) -> Result<StrengthGraph> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::InsufficientEvents(n));
    }
    if limit == SuccessorLimit::Top(0) {
        return Err(Error::OutOfRange {
            name: "max_successors",
            value: 0.0,
        });
    }
    let missing: Vec<String> = table
        .missing(corpus)
        .into_iter()
        .map(String::from)
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnembeddedEvents(missing));
    }
    let factors = EventFactors {
        corpus,
        table,
        memberships,
    };
    let ids: Vec<String> = corpus.ids().map(String::from).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        let mut out = Vec::with_capacity(n - i - 1);
        for j in i + 1..n {
            let coherence = factors.coherence(&ids[i], &ids[j])?;
            let acceptance = factors.acceptance(&ids[i], &ids[j])?;
            out.push(CandidateEdge {
                source: i,
                target: j,
                coherence,
                acceptance,
                strength: coherence * acceptance,
            });
        }
        if let SuccessorLimit::Top(m) = limit {
            if out.len() > m {
                out.sort_by(|a, b| {
                    b.strength
                        .total_cmp(&a.strength)
                        .then(a.target.cmp(&b.target))
                });
                out.truncate(m);
                out.sort_by_key(|e| e.target);
            }
        }
        edges.extend(out);
    }

    let mut fp = Fingerprint::new("strength-graph/v1");
    match limit {
        SuccessorLimit::All => fp.u64(u64::MAX),
        SuccessorLimit::Top(m) => fp.u64(m as u64),
    };
    for (id, s) in ids.iter().zip(corpus.submissions()) {
        fp.str(id)
            .f64(corpus.score_percentile(id).expect("indexed"))
            .f64(s.upvote_ratio);
        table.get(id).expect("checked").iter().for_each(|x| {
            fp.f64(*x);
        });
        if let Some(row) = memberships.get(id) {
            row.iter().for_each(|x| {
                fp.f64(*x);
            });
        }
    }
    Ok(StrengthGraph {
        event_ids: ids,
        edges,
        fingerprint: fp.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Submission;

    fn corpus(spec: &[(&str, i64, f64)]) -> Corpus {
        let subs = spec
            .iter()
            .enumerate()
            .map(|(t, (id, score, ur))| Submission {
                id: id.to_string(),
                community: "c".into(),
                title: format!("title {id}"),
                body: String::new(),
                created_at: t as i64,
                score: *score,
                upvote_ratio: *ur,
            })
            .collect();
        Corpus::new("c", subs).unwrap()
    }

    #[test]
    fn factor_examples() {
        assert_eq!(coherence(1.0, 1.0), 1.0);
        assert!((coherence(0.5, 0.6887) - 0.5868).abs() < 1e-4);
        assert_eq!(coherence(0.0, 0.9), 0.0);
        assert!((acceptance(0.81, 0.64, 0.9, 0.4) - 0.432).abs() < 1e-12);
        assert_eq!(acceptance(1.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(acceptance(0.7, 0.6, 0.9, 0.0), 0.0);
    }

    fn fixture(n: usize) -> (Corpus, EmbeddingTable, MembershipMatrix) {
        let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        let spec: Vec<(&str, i64, f64)> = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as i64 * 3 % 5, 0.5 + 0.1 * (i % 5) as f64))
            .collect();
        let c = corpus(&spec);
        let mut t = EmbeddingTable::new(2);
        let mut rows = Vec::new();
        for (i, id) in names.iter().enumerate() {
            let a = i as f64 * 0.4;
            t.insert(id.clone(), vec![a.cos(), a.sin()]).unwrap();
            let p = 0.1 + 0.8 * (i as f64 / n as f64);
            rows.push(vec![p, 1.0 - p]);
        }
        let m = MembershipMatrix::from_rows(names, rows).unwrap();
        (c, t, m)
    }

    #[test]
    fn exhaustive_edges_on_three_events() {
        let (c, t, m) = fixture(3);
        let g = build_strength_graph(&c, &t, &m, SuccessorLimit::All).unwrap();
        let pairs: Vec<_> = g.edges.iter().map(|e| (e.source, e.target)).collect();
        assert_eq!(pairs, [(0, 1), (0, 2), (1, 2)]);
        for e in &g.edges {
            assert_eq!(e.strength, e.coherence * e.acceptance);
        }
    }

    #[test]
    fn two_event_edge_matches_hand_product() {
        let c = corpus(&[("a", 1, 0.9), ("b", 5, 0.4)]);
        let mut t = EmbeddingTable::new(2);
        t.insert("a", vec![1.0, 0.0]).unwrap();
        t.insert("b", vec![0.0, 1.0]).unwrap();
        let m = MembershipMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        )
        .unwrap();
        let g = build_strength_graph(&c, &t, &m, SuccessorLimit::All).unwrap();
        assert_eq!(g.edges.len(), 1);
        let e = g.edges[0];
        // angular 0.5; JSD([.5,.5],[1,0]) = 1.5 - 0.75 log2(3); percentiles 0.25 / 0.75
        let cluster_sim = 1.0 - (1.5 - 0.75 * 3f64.log2());
        let expected_coh = (0.5 * cluster_sim).sqrt();
        let expected_acc = (0.25f64 * 0.75).sqrt() * (0.9f64 * 0.4).sqrt();
        assert!(
            (e.coherence - expected_coh).abs() < 1e-12,
            "{}",
            e.coherence
        );
        assert!((e.acceptance - expected_acc).abs() < 1e-12);
        assert!((e.strength - expected_coh * expected_acc).abs() < 1e-12);
    }

    #[test]
    fn one_event_is_insufficient() {
        let (c, t, m) = fixture(1);
        assert!(matches!(
            build_strength_graph(&c, &t, &m, SuccessorLimit::All),
            Err(Error::InsufficientEvents(1))
        ));
    }

    #[test]
    fn missing_embeddings_are_listed_together() {
        let (c, _, m) = fixture(4);
        let mut t = EmbeddingTable::new(2);
        t.insert("e1", vec![1.0, 0.0]).unwrap();
        t.insert("e2", vec![1.0, 0.0]).unwrap();
        let err = build_strength_graph(&c, &t, &m, SuccessorLimit::All).unwrap_err();
        assert!(matches!(err, Error::UnembeddedEvents(ref ids) if ids == &["e0", "e3"]));
    }

    #[test]
    fn pruning_keeps_strongest_and_is_monotone() {
        let (c, t, m) = fixture(9);
        let all = build_strength_graph(&c, &t, &m, SuccessorLimit::All).unwrap();
        let mut previous: Vec<(usize, usize)> = Vec::new();
        for limit in 1..=8 {
            let g = build_strength_graph(&c, &t, &m, SuccessorLimit::Top(limit)).unwrap();
            let pairs: Vec<_> = g.edges.iter().map(|e| (e.source, e.target)).collect();
            assert!(previous.iter().all(|p| pairs.contains(p)));
            for i in 0..9 {
                let kept: Vec<_> = g.edges.iter().filter(|e| e.source == i).collect();
                assert_eq!(kept.len(), limit.min(8 - i));
                let weakest_kept = kept
                    .iter()
                    .map(|e| e.strength)
                    .fold(f64::INFINITY, f64::min);
                let dropped_best = all
                    .edges
                    .iter()
                    .filter(|e| e.source == i && !pairs.contains(&(e.source, e.target)))
                    .map(|e| e.strength)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(weakest_kept >= dropped_best);
            }
            previous = pairs;
        }
        assert!(build_strength_graph(&c, &t, &m, SuccessorLimit::Top(0)).is_err());
    }

    #[test]
    fn factors_are_symmetric() {
        let (c, t, m) = fixture(5);
        let f = EventFactors {
            corpus: &c,
            table: &t,
            memberships: &m,
        };
        for a in c.ids() {
            for b in c.ids() {
                assert_eq!(f.coherence(a, b).unwrap(), f.coherence(b, a).unwrap());
                assert_eq!(f.acceptance(a, b).unwrap(), f.acceptance(b, a).unwrap());
            }
        }
        assert!(matches!(
            f.acceptance("e0", "zz"),
            Err(Error::UnscoredEvent(_))
        ));
    }

    #[test]
    fn successor_limit_parsing() {
        assert_eq!(
            "all".parse::<SuccessorLimit>().unwrap(),
            SuccessorLimit::All
        );
        assert_eq!(
            "7".parse::<SuccessorLimit>().unwrap(),
            SuccessorLimit::Top(7)
        );
        assert!("x".parse::<SuccessorLimit>().is_err());
        let json = serde_json::to_string(&SuccessorLimit::All).unwrap();
        assert_eq!(
            serde_json::from_str::<SuccessorLimit>(&json).unwrap(),
            SuccessorLimit::All
        );
        assert_eq!(
            serde_json::from_str::<SuccessorLimit>("20").unwrap(),
            SuccessorLimit::Top(20)
        );
    }
}
