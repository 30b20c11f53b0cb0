//! Synthetic corpora with planted storylines, and scoring of how well an
//! extracted map recovers them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Submission};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::mapgraph::NarrativeMap;

/// How a community received a planted chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceProfile {
    /// Scores in [500, 1000], upvote ratios in [0.85, 1].
    Accepted,
    /// Scores in [50, 500], upvote ratios in [0.5, 0.85].
    Neutral,
    /// Scores in [0, 50], upvote ratios in [0.2, 0.5].
    Rejected,
}

impl AcceptanceProfile {
    fn draw(self, rng: &mut ChaCha8Rng) -> (i64, f64) {
        let (scores, ratios) = match self {
            AcceptanceProfile::Accepted => ((500, 1000), (0.85, 1.0)),
            AcceptanceProfile::Neutral => ((50, 500), (0.5, 0.85)),
            AcceptanceProfile::Rejected => ((0, 50), (0.2, 0.5)),
        };
        let score = rng.random_range(scores.0..=scores.1);
        let ratio = rng.random_range(ratios.0..=ratios.1);
        (score, (ratio * 1000.0_f64).round() / 1000.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub chain_lengths: Vec<usize>,
    /// One profile per chain.
    pub profiles: Vec<AcceptanceProfile>,
    /// Per-coordinate standard deviation of the noise added to chain anchors.
    pub noise_sigma: f64,
    /// Unrelated events scattered over the time span, with random directions.
    pub distractors: usize,
    pub dim: usize,
    pub seed: u64,
    pub community: String,
}

impl PlantedSpec {
    pub fn new(
        chain_lengths: &[usize],
        profiles: &[AcceptanceProfile],
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        PlantedSpec {
            chain_lengths: chain_lengths.to_vec(),
            profiles: profiles.to_vec(),
            noise_sigma,
            distractors: 0,
            dim: 32,
            seed,
            community: "planted".into(),
        }
    }

    pub fn with_distractors(mut self, n: usize) -> Self {
        self.distractors = n;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        if self.chain_lengths.is_empty() {
            return bad("at least one chain is required".into());
        }
        if let Some(l) = self.chain_lengths.iter().find(|&&l| l < 2) {
            return bad(format!("chain length {l} is below 2"));
        }
        if self.profiles.len() != self.chain_lengths.len() {
            return bad(format!(
                "{} profiles for {} chains",
                self.profiles.len(),
                self.chain_lengths.len()
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {}", self.noise_sigma));
        }
        if self.dim < 2 {
            return bad(format!("dimension {}", self.dim));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub embeddings: EmbeddingTable,
    /// Ordered event ids per chain; shared endpoints appear in every chain.
    pub planted: Vec<Vec<String>>,
    /// Start and end events shared by all chains (empty for a single chain).
    pub shared: Vec<String>,
    pub spec: PlantedSpec,
}

impl PlantedCorpus {
    pub fn write_corpus<W: Write>(&self, out: W) -> Result<()> {
        self.corpus.write_jsonl(out)
    }

    pub fn write_embeddings<W: Write>(&self, out: W) -> Result<()> {
        self.embeddings.write_jsonl(out)
    }

    /// Chains containing `id`.
    pub fn chains_of(&self, id: &str) -> Vec<usize> {
        (0..self.planted.len())
            .filter(|&c| self.planted[c].iter().any(|e| e == id))
            .collect()
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn perturb(rng: &mut ChaCha8Rng, anchor: &[f64], sigma: f64) -> Vec<f64> {
    anchor
        .iter()
        .map(|a| {
            let z: f64 = StandardNormal.sample(rng);
            a + sigma * z
        })
        .collect()
}

const T0: i64 = 1_600_000_000;
const SLOT: i64 = 3600;

/// Builds a corpus whose chains are separated in embedding space and
/// interleaved in time.
pub fn generate_planted_corpus(spec: &PlantedSpec) -> Result<PlantedCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let num_chains = spec.chain_lengths.len();
    let anchors: Vec<Vec<f64>> = (0..num_chains)
        .map(|_| unit_gaussian(&mut rng, spec.dim))
        .collect();
    let shared_ends = num_chains > 1;
    let offset = i64::from(shared_ends);

    let mut subs = Vec::new();
    let mut vectors = Vec::new();
    let mut planted = vec![Vec::new(); num_chains];
    let mut push = |subs: &mut Vec<Submission>,
                    id: String,
                    title: String,
                    t: i64,
                    profile: AcceptanceProfile,
                    v: Vec<f64>,
                    rng: &mut ChaCha8Rng| {
        let (score, upvote_ratio) = profile.draw(rng);
        subs.push(Submission {
            id: id.clone(),
            community: spec.community.clone(),
            title,
            body: String::new(),
            created_at: t,
            score,
            upvote_ratio,
        });
        vectors.push((id, v));
    };

    let mean_anchor: Vec<f64> = (0..spec.dim)
        .map(|d| anchors.iter().map(|a| a[d]).sum::<f64>())
        .collect();
    if shared_ends {
        let v = perturb(&mut rng, &mean_anchor, spec.noise_sigma);
        push(
            &mut subs,
            "start".into(),
            "Shared opening event".into(),
            T0,
            AcceptanceProfile::Accepted,
            v,
            &mut rng,
        );
    }
    let mut last_slot = 0;
    let longest = *spec.chain_lengths.iter().max().expect("validated");
    for j in 0..longest {
        for c in 0..num_chains {
            if j >= spec.chain_lengths[c] {
                continue;
            }
            let slot = offset + (j * num_chains + c) as i64;
            last_slot = last_slot.max(slot);
            let jitter = if slot == 0 {
                0
            } else {
                rng.random_range(0..SLOT / 2)
            };
            let id = format!("c{c}e{j:02}");
            let v = perturb(&mut rng, &anchors[c], spec.noise_sigma);
            let title = format!("Storyline {c}, development {j}");
            push(
                &mut subs,
                id.clone(),
                title,
                T0 + slot * SLOT + jitter,
                spec.profiles[c],
                v,
                &mut rng,
            );
            planted[c].push(id);
        }
    }
    let mut shared = Vec::new();
    if shared_ends {
        let t_end = T0 + (last_slot + 1) * SLOT;
        let v = perturb(&mut rng, &mean_anchor, spec.noise_sigma);
        push(
            &mut subs,
            "end".into(),
            "Shared closing event".into(),
            t_end,
            AcceptanceProfile::Accepted,
            v,
            &mut rng,
        );
        for chain in &mut planted {
            chain.insert(0, "start".into());
            chain.push("end".into());
        }
        shared = vec!["start".to_string(), "end".to_string()];
    }
    let (t_first, t_last) = (
        T0,
        subs.iter().map(|s| s.created_at).max().expect("nonempty"),
    );
    for i in 0..spec.distractors {
        let t = rng.random_range(t_first + 1..t_last);
        let v = unit_gaussian(&mut rng, spec.dim);
        push(
            &mut subs,
            format!("d{i:03}"),
            format!("Unrelated post {i}"),
            t,
            AcceptanceProfile::Neutral,
            v,
            &mut rng,
        );
    }

    let mut embeddings = EmbeddingTable::new(spec.dim);
    for (id, v) in vectors {
        embeddings.insert(id, v)?;
    }
    Ok(PlantedCorpus {
        corpus: Corpus::new(spec.community.clone(), subs)?,
        embeddings,
        planted,
        shared,
        spec: spec.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    /// Planted consecutive pairs joined in the map by a path of at most two edges.
    pub adjacency_recall: f64,
    /// Map edges joining two events of one chain, in order, at most two steps apart.
    pub adjacency_precision: f64,
    /// Landmarks that are planted events (1 when there are none).
    pub landmark_hit_rate: f64,
    /// Share of main-route events belonging to the best-represented chain.
    pub main_route_purity: f64,
    pub majority_chain: Option<usize>,
}

fn check_ids(map: &NarrativeMap, planted: &PlantedCorpus) -> Result<()> {
    match map
        .nodes
        .iter()
        .find(|n| planted.corpus.get(&n.id).is_none())
    {
        Some(n) => Err(Error::ForeignMap(n.id.clone())),
        None => Ok(()),
    }
}

fn route_counts(map: &NarrativeMap, planted: &PlantedCorpus) -> Vec<usize> {
    let mut counts = vec![0; planted.planted.len()];
    for id in &map.main_route {
        for c in planted.chains_of(id) {
            counts[c] += 1;
        }
    }
    counts
}

/// Fraction of main-route events that belong to `chain` (shared events count).
pub fn purity_toward(map: &NarrativeMap, planted: &PlantedCorpus, chain: usize) -> Result<f64> {
    check_ids(map, planted)?;
    if map.main_route.is_empty() {
        return Ok(0.0);
    }
    let counts = route_counts(map, planted);
    Ok(counts.get(chain).copied().unwrap_or(0) as f64 / map.main_route.len() as f64)
}

pub fn evaluate_recovery(map: &NarrativeMap, planted: &PlantedCorpus) -> Result<RecoveryMetrics> {
    check_ids(map, planted)?;
    let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in &map.edges {
        succ.entry(e.source.as_str())
            .or_default()
            .push(e.target.as_str());
    }
    let within_two = |a: &str, b: &str| {
        succ.get(a).is_some_and(|next| {
            next.iter()
                .any(|&x| x == b || succ.get(x).is_some_and(|n2| n2.contains(&b)))
        })
    };
    let pairs: BTreeSet<(&str, &str)> = planted
        .planted
        .iter()
        .flat_map(|c| c.windows(2).map(|w| (w[0].as_str(), w[1].as_str())))
        .collect();
    let found = pairs.iter().filter(|(a, b)| within_two(a, b)).count();
    let adjacency_recall = if pairs.is_empty() {
        1.0
    } else {
        found as f64 / pairs.len() as f64
    };

    let mut position: BTreeMap<(&str, usize), usize> = BTreeMap::new();
    for (c, chain) in planted.planted.iter().enumerate() {
        for (k, id) in chain.iter().enumerate() {
            position.insert((id.as_str(), c), k);
        }
    }
    let consistent = map
        .edges
        .iter()
        .filter(|e| {
            (0..planted.planted.len()).any(|c| {
                match (
                    position.get(&(e.source.as_str(), c)),
                    position.get(&(e.target.as_str(), c)),
                ) {
                    (Some(&i), Some(&j)) => j > i && j - i <= 2,
                    _ => false,
                }
            })
        })
        .count();
    let adjacency_precision = if map.edges.is_empty() {
        1.0
    } else {
        consistent as f64 / map.edges.len() as f64
    };

    let landmark_hit_rate = if map.landmarks.is_empty() {
        1.0
    } else {
        let hits = map
            .landmarks
            .iter()
            .filter(|id| !planted.chains_of(id).is_empty())
            .count();
        hits as f64 / map.landmarks.len() as f64
    };

    let counts = route_counts(map, planted);
    let majority_chain = (!map.main_route.is_empty())
        .then(|| (0..counts.len()).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))))
        .flatten();
    let main_route_purity = match majority_chain {
        Some(c) => counts[c] as f64 / map.main_route.len() as f64,
        None => 0.0,
    };
    Ok(RecoveryMetrics {
        adjacency_recall,
        adjacency_precision,
        landmark_hit_rate,
        main_route_purity,
        majority_chain,
    })
}
