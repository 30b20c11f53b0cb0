//! Soft cluster memberships and the divergence-based similarity built on them.
//!
//! Clusters come from spherical k-means (cosine assignment, k-means++ seeding)
//! and every event receives a softmax distribution over centroids.

use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 300;
const TOLERANCE: f64 = 1e-6;
const SUM_TOLERANCE: f64 = 1e-6;

/// Per-event probability distributions over clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    num_clusters: usize,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    centroids: Vec<Vec<f64>>,
    seed: u64,
}

impl MembershipMatrix {
    /// Assembles a matrix from explicit rows. Rows must be valid distributions.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_clusters = rows.first().map_or(0, Vec::len);
        for row in &rows {
            check_distribution(row)?;
            if row.len() != num_clusters {
                return Err(Error::InvalidDistribution("ragged membership rows".into()));
            }
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(MembershipMatrix {
            num_clusters,
            ids,
            rows,
            index,
            centroids: Vec::new(),
            seed: 0,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.rows[i].as_slice())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `ceil(sqrt(n / 2))`, clamped to `[2, 12]` and never above `n`.
pub fn default_num_clusters(num_events: usize) -> usize {
    let k = ((num_events as f64) / 2.0).sqrt().ceil() as usize;
    k.clamp(2, 12).min(num_events.max(1))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = dot(&v, &v).sqrt();
    if norm <= f64::EPSILON || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Spherical k-means followed by temperature-scaled softmax memberships.
pub fn soft_cluster(
    table: &EmbeddingTable,
    ids: &[String],
    num_clusters: usize,
    seed: u64,
    temperature: f64,
) -> Result<MembershipMatrix> {
    if num_clusters < 2 || num_clusters > ids.len() {
        return Err(Error::InvalidClusterCount {
            requested: num_clusters,
            events: ids.len(),
        });
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::OutOfRange {
            name: "temperature",
            value: temperature,
        });
    }
    let points: Vec<&[f64]> = ids
        .iter()
        .map(|id| {
            table
                .get(id)
                .ok_or_else(|| Error::UnembeddedEvents(vec![id.clone()]))
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(&points, num_clusters, &mut rng);

    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; table.dim()]; num_clusters];
        for p in &points {
            let k = nearest(p, &centroids);
            sums[k].iter_mut().zip(p.iter()).for_each(|(s, x)| *s += x);
        }
        let mut shift = 0.0f64;
        for (c, sum) in centroids.iter_mut().zip(sums) {
            // empty or cancelling clusters keep their previous centroid
            if let Some(next) = normalized(sum) {
                let d = c
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>();
                shift = shift.max(d.sqrt());
                *c = next;
            }
        }
        if shift < TOLERANCE {
            break;
        }
    }

    let rows = points
        .iter()
        .map(|p| {
            let logits: Vec<f64> = centroids.iter().map(|c| dot(p, c) / temperature).collect();
            softmax(&logits)
        })
        .collect();
    let index = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    Ok(MembershipMatrix {
        num_clusters,
        ids: ids.to_vec(),
        rows,
        index,
        centroids,
        seed,
    })
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (k, c) in centroids.iter().enumerate() {
        let d = dot(p, c);
        if d > best_dot {
            best = k;
            best_dot = d;
        }
    }
    best
}

fn plus_plus_init(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    while centroids.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                let d = centroids
                    .iter()
                    .map(|c| (1.0 - dot(p, c)).max(0.0))
                    .fold(f64::INFINITY, f64::min);
                d * d
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            weights
                .iter()
                .position(|&w| {
                    r -= w;
                    r < 0.0
                })
                .unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].to_vec());
    }
    centroids
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty distribution".into()));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidDistribution(
            "negative or non-finite component".into(),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "components sum to {sum}"
        )));
    }
    Ok(())
}

fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, mi)| pi * (pi / mi).log2())
        .sum()
}

/// Base-2 Jensen–Shannon divergence, in `[0, 1]`.
pub fn jensen_shannon_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidDistribution(format!(
            "length mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let jsd = 0.5 * kl_to_mixture(p, &m) + 0.5 * kl_to_mixture(q, &m);
    Ok(jsd.clamp(0.0, 1.0))
}

/// `1 - JSD(p, q)`.
pub fn cluster_similarity(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(1.0 - jensen_shannon_divergence(p, q)?)
}

/// Geometric mean of the two events' membership in cluster `k`.
pub fn edge_membership(p_i: &[f64], p_j: &[f64], k: usize) -> Result<f64> {
    let num_clusters = p_i.len().min(p_j.len());
    if k >= num_clusters {
        return Err(Error::InvalidClusterIndex {
            index: k,
            num_clusters,
        });
    }
    Ok((p_i[k] * p_j[k]).sqrt())
}
