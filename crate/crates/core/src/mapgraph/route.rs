use serde::{Deserialize, Serialize};

use super::dag::Dag;
use crate::error::{Error, Result};

/// Which start -> end path counts as the main route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteCriterion {
    /// Maximize the weakest edge, then the strength product.
    #[default]
    Bottleneck,
    /// Maximize the strength product.
    Product,
}

impl std::str::FromStr for RouteCriterion {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bottleneck" => Ok(RouteCriterion::Bottleneck),
            "product" => Ok(RouteCriterion::Product),
            other => Err(format!("unknown main-route criterion `{other}`")),
        }
    }
}

const PRODUCT_TIE: f64 = 1e-12;

/// Largest achievable minimum edge strength over start -> end paths.
pub fn max_bottleneck(dag: &Dag) -> Option<f64> {
    let mut best = vec![None::<f64>; dag.len()];
    best[dag.start()] = Some(f64::INFINITY);
    for v in 0..dag.len() {
        let Some(b) = best[v] else { continue };
        for &k in dag.out_edges(v) {
            let e = dag.edges()[k];
            let cand = b.min(e.strength);
            if best[e.target].is_none_or(|cur| cand > cur) {
                best[e.target] = Some(cand);
            }
        }
    }
    best[dag.end()].filter(|_| dag.len() > 1)
}

/// The main route as node indices from start to end.
///
/// Ties on the criterion go to the larger product, then to the path whose
/// id sequence is lexicographically smallest.
pub fn main_route(dag: &Dag, criterion: RouteCriterion) -> Result<Vec<usize>> {
    if dag.len() == 1 {
        return Ok(vec![0]);
    }
    let floor = match criterion {
        RouteCriterion::Bottleneck => max_bottleneck(dag).ok_or(Error::NoMainRoute)?,
        RouteCriterion::Product => f64::NEG_INFINITY,
    };
    // log-product of the best suffix from each node to the end, and its next hop
    let n = dag.len();
    let mut score = vec![None::<f64>; n];
    let mut next = vec![usize::MAX; n];
    score[n - 1] = Some(0.0);
    for v in (0..n - 1).rev() {
        for &k in dag.out_edges(v) {
            let e = dag.edges()[k];
            if e.strength < floor {
                continue;
            }
            let Some(rest) = score[e.target] else {
                continue;
            };
            let cand = e.strength.ln() + rest;
            let better = match score[v] {
                None => true,
                Some(cur) if cand > cur + PRODUCT_TIE => true,
                Some(cur) if cand >= cur - PRODUCT_TIE => {
                    dag.nodes()[e.target].id < dag.nodes()[next[v]].id
                }
                _ => false,
            };
            if better {
                score[v] = Some(cand);
                next[v] = e.target;
            }
        }
    }
    if score[0].is_none() {
        return Err(Error::NoMainRoute);
    }
    let mut route = vec![0];
    let mut v = 0;
    while v != n - 1 {
        v = next[v];
        route.push(v);
    }
    Ok(route)
}

/// Weakest edge strength along a path of node indices.
pub fn path_bottleneck(dag: &Dag, path: &[usize]) -> f64 {
    path.windows(2)
        .map(|w| {
            dag.edge(w[0], w[1])
                .map_or(f64::NEG_INFINITY, |e| e.strength)
        })
        .fold(f64::INFINITY, f64::min)
}
