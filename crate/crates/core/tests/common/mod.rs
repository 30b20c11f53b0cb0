//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use narrative_atlas::clustering::edge_membership;
use narrative_atlas::lp::{LpModel, LpParams, ModelEdge};
use narrative_atlas::mapgraph::{Dag, DagEdge, DagNode};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hazen percentile by counting: `(#below + (#equal + 1) / 2 - 0.5) / n`.
pub fn hazen(scores: &[i64]) -> Vec<f64> {
    let n = scores.len() as f64;
    scores
        .iter()
        .map(|s| {
            let below = scores.iter().filter(|t| *t < s).count() as f64;
            let equal = scores.iter().filter(|t| *t == s).count() as f64;
            (below + (equal + 1.0) / 2.0 - 0.5) / n
        })
        .collect()
}

pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| x * (x / y).log2())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    (kl(p, &m) + kl(q, &m)) / 2.0
}

pub fn angular(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    1.0 - (dot / (nu * nv)).clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

/// Best integral objective over 0/1 edge subsets satisfying every constraint
/// family; `None` when no subset is feasible.
///
/// Events are set to 1 exactly when an incident edge is chosen (start and end
/// always), which is the only choice compatible with the flow rows.
pub fn brute_force_integral(model: &LpModel) -> Option<f64> {
    let m = model.edges.len();
    assert!(m <= 20, "brute force over {m} edges");
    let n = model.num_events;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << m) {
        let chosen: Vec<usize> = (0..m).filter(|e| mask & (1 << e) != 0).collect();
        let mut inflow = vec![0usize; n];
        let mut outflow = vec![0usize; n];
        for &e in &chosen {
            outflow[model.edges[e].source] += 1;
            inflow[model.edges[e].target] += 1;
        }
        let event = |v: usize| -> usize {
            usize::from(v == model.start || v == model.end || inflow[v] + outflow[v] > 0)
        };
        let flow_ok = (0..n).all(|v| {
            (v == model.start || inflow[v] == event(v))
                && (v == model.end || outflow[v] == event(v))
        });
        if !flow_ok {
            continue;
        }
        if chosen.len() + 1 < model.params.k {
            continue;
        }
        if model.num_clusters > 0 {
            let mean: f64 = (0..model.num_clusters)
                .map(|k| {
                    chosen
                        .iter()
                        .map(|&e| model.edges[e].membership[k])
                        .sum::<f64>()
                        .min(1.0)
                })
                .sum::<f64>()
                / model.num_clusters as f64;
            if mean + 1e-12 < model.params.mincover {
                continue;
            }
        }
        let acceptance: f64 = (0..n)
            .map(|v| (model.percentiles[v] - model.params.minscore) * event(v) as f64)
            .sum();
        if acceptance < -1e-12 {
            continue;
        }
        if model.commitments.keys().any(|e| !chosen.contains(e)) {
            continue;
        }
        let value = chosen
            .iter()
            .map(|&e| model.edges[e].strength)
            .fold(1.0, f64::min);
        best = Some(best.map_or(value, |b: f64| b.max(value)));
    }
    best
}

fn random_distribution(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random program over `n` events; `chain_only` keeps just the `i -> i+1` edges.
pub fn random_model(
    rng: &mut ChaCha8Rng,
    n: usize,
    chain_only: bool,
    mincover: f64,
    minscore: f64,
) -> LpModel {
    let clusters = rng.random_range(2..=3usize);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(rng, clusters)).collect();
    let percentiles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if chain_only && j != i + 1 {
                continue;
            }
            edges.push(ModelEdge {
                source: i,
                target: j,
                strength: rng.random_range(0.05..1.0),
                membership: (0..clusters)
                    .map(|k| edge_membership(&rows[i], &rows[j], k).unwrap())
                    .collect(),
            });
        }
    }
    let k = rng.random_range(2..=n.min(4));
    LpModel::new(
        n,
        edges,
        clusters,
        percentiles,
        LpParams {
            k,
            mincover,
            minscore,
        },
    )
    .unwrap()
}

pub fn dag_from(times: &[i64], edges: &[(usize, usize, f64)]) -> Dag {
    let nodes = times
        .iter()
        .enumerate()
        .map(|(i, &t)| DagNode {
            id: format!("v{i:02}"),
            created_at: t,
            acceptance: 0.5,
        })
        .collect();
    let edges = edges
        .iter()
        .map(|&(source, target, strength)| DagEdge {
            source,
            target,
            strength,
        })
        .collect();
    Dag::new(nodes, edges).unwrap()
}

/// Random forward DAG in which every non-end node has a successor, so the
/// start always reaches the end.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Dag {
    let mut edges = Vec::new();
    for i in 0..n {
        let mut any = false;
        for j in i + 1..n {
            if rng.random_bool(density) {
                // strengths on a coarse grid so ties occur
                edges.push((i, j, rng.random_range(1..=20) as f64 / 20.0));
                any = true;
            }
        }
        if !any && i + 1 < n {
            let j = rng.random_range(i + 1..n);
            edges.push((i, j, rng.random_range(1..=20) as f64 / 20.0));
        }
    }
    let times: Vec<i64> = (0..n as i64).map(|i| i * 10).collect();
    dag_from(&times, &edges)
}

/// Every start -> end path, by depth-first enumeration.
pub fn all_routes(dag: &Dag) -> Vec<Vec<usize>> {
    fn walk(dag: &Dag, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == dag.end() {
            out.push(path.clone());
            return;
        }
        for &k in dag.out_edges(v) {
            path.push(dag.edges()[k].target);
            walk(dag, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(dag, &mut vec![dag.start()], &mut out);
    out
}

pub fn route_bottleneck(dag: &Dag, route: &[usize]) -> f64 {
    route
        .windows(2)
        .map(|w| dag.edge(w[0], w[1]).unwrap().strength)
        .fold(f64::INFINITY, f64::min)
}

/// Minimum number of vertex-disjoint paths covering every node, by
/// exhaustive choice of at most one successor per node.
pub fn brute_min_path_cover(dag: &Dag) -> usize {
    fn search(dag: &Dag, v: usize, taken: &mut Vec<bool>, used: usize, best: &mut usize) {
        let n = dag.len();
        if v == n {
            *best = (*best).max(used);
            return;
        }
        // upper bound: every remaining node contributes at most one link
        if used + (n - v) <= *best {
            return;
        }
        search(dag, v + 1, taken, used, best);
        for &k in dag.out_edges(v) {
            let t = dag.edges()[k].target;
            if !taken[t] {
                taken[t] = true;
                search(dag, v + 1, taken, used + 1, best);
                taken[t] = false;
            }
        }
    }
    let mut best = 0;
    search(dag, 0, &mut vec![false; dag.len()], 0, &mut best);
    dag.len() - best
}

/// Largest number of storylines whose time span contains one node timestamp.
pub fn storyline_width(dag: &Dag, storylines: &[Vec<usize>]) -> usize {
    dag.nodes()
        .iter()
        .map(|node| {
            storylines
                .iter()
                .filter(|s| {
                    let a = dag.nodes()[s[0]].created_at;
                    let b = dag.nodes()[*s.last().unwrap()].created_at;
                    a <= node.created_at && node.created_at <= b
                })
                .count()
        })
        .max()
        .unwrap_or(0)
}
