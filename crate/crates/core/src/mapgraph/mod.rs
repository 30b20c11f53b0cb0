//! Turning a solved program into a narrative map.
//!
//! [`round_solution`] thresholds and repairs the fractional solution,
//! [`main_route`], [`decompose_storylines`] and [`representative_landmarks`]
//! add structure, and [`build_map`] assembles the exported [`NarrativeMap`].

mod dag;
mod export;
mod landmark;
mod round;
mod route;
mod storyline;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lp::{LpModel, LpSolution};
use crate::strength::{StrengthGraph, SuccessorLimit};

pub use dag::{Dag, DagEdge, DagNode};
pub use export::{to_dot, to_json};
pub use landmark::{representative_landmarks, widest_time, width_at};
pub use round::{round_solution, RoundingInput, Skeleton};
pub use route::{main_route, max_bottleneck, path_bottleneck, RouteCriterion};
pub use storyline::decompose_storylines;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapNode {
    pub id: String,
    pub title: String,
    pub created_at: i64,
    pub score: i64,
    pub upvote_ratio: f64,
    pub score_percentile: f64,
    pub storyline_id: usize,
    pub is_representative_landmark: bool,
    pub on_main_route: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEdge {
    pub source: String,
    pub target: String,
    pub coherence: f64,
    pub acceptance: f64,
    pub strength: f64,
    pub on_main_route: bool,
    /// Value of the edge variable in the solved program.
    pub lp_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storyline {
    pub id: usize,
    pub events: Vec<String>,
    /// Mean over the storyline's own edges; absent for single-event storylines.
    pub mean_strength: Option<f64>,
    pub mean_acceptance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub per_cluster: Vec<f64>,
    pub mean: f64,
}

/// Realized presence of each cluster: the capped sum of edge memberships.
pub fn coverage_report<'a>(
    memberships: impl IntoIterator<Item = &'a [f64]>,
    num_clusters: usize,
) -> Coverage {
    let mut per_cluster = vec![0.0; num_clusters];
    for m in memberships {
        for (c, v) in per_cluster.iter_mut().zip(m) {
            *c += v;
        }
    }
    per_cluster.iter_mut().for_each(|c| *c = f64::min(*c, 1.0));
    let mean = if num_clusters == 0 {
        0.0
    } else {
        per_cluster.iter().sum::<f64>() / num_clusters as f64
    };
    Coverage { per_cluster, mean }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub avg_score_percentile: f64,
    /// `minscore` minus the final average, when repair could not close the gap.
    pub acceptance_shortfall: Option<f64>,
    pub removed_by_repair: Vec<String>,
    pub cluster_coverage: Coverage,
    /// Objective of the program the map was rounded from.
    pub lp_objective: f64,
    /// Objective before any rounding commitments.
    pub relaxation_objective: f64,
    pub rounded_min_strength: f64,
    pub main_route_bottleneck: f64,
    pub commitments: usize,
    pub candidate_edges: usize,
    pub lp_variables: usize,
    pub lp_constraints: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub k: usize,
    pub mincover: f64,
    pub minscore: f64,
    pub seed: u64,
    pub tau: f64,
    pub num_clusters: usize,
    pub temperature: f64,
    pub max_successors: SuccessorLimit,
    pub main_route: RouteCriterion,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub input_hash: String,
    pub graph_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeMap {
    pub schema_version: u32,
    pub community: String,
    pub nodes: Vec<MapNode>,
    pub edges: Vec<MapEdge>,
    pub main_route: Vec<String>,
    pub storylines: Vec<Storyline>,
    pub landmarks: Vec<String>,
    pub diagnostics: Diagnostics,
    pub params: MapParams,
    pub provenance: Provenance,
}

impl NarrativeMap {
    pub fn node(&self, id: &str) -> Option<&MapNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn has_edge(&self, source: &str, target: &str) -> bool {
        self.edges
            .iter()
            .any(|e| e.source == source && e.target == target)
    }
}

/// Everything [`build_map`] reads.
pub struct MapInputs<'a> {
    pub corpus: &'a Corpus,
    pub graph: &'a StrengthGraph,
    /// The program as finally solved, including rounding commitments.
    pub model: &'a LpModel,
    pub solution: &'a LpSolution,
    pub relaxation_objective: f64,
    pub max_violation: f64,
    pub params: MapParams,
}

/// Rounds the solution and assembles the exported map document.
pub fn build_map(inputs: MapInputs<'_>) -> Result<NarrativeMap> {
    let MapInputs {
        corpus,
        graph,
        model,
        solution,
        relaxation_objective,
        max_violation,
        params,
    } = inputs;
    let subs: Vec<_> = graph
        .event_ids
        .iter()
        .map(|id| {
            corpus
                .get(id)
                .ok_or_else(|| Error::UnscoredEvent(id.clone()))
        })
        .collect::<Result<_>>()?;
    let percentiles: Vec<f64> = graph
        .event_ids
        .iter()
        .map(|id| corpus.score_percentile(id).expect("present"))
        .collect();
    let nodes = subs
        .iter()
        .zip(&percentiles)
        .map(|(s, p)| DagNode {
            id: s.id.clone(),
            created_at: s.created_at,
            acceptance: p * s.upvote_ratio,
        })
        .collect();
    let skeleton = round_solution(RoundingInput {
        graph,
        edge_values: &solution.edges,
        nodes,
        percentiles: &percentiles,
        tau: params.tau,
        minscore: params.minscore,
        criterion: params.main_route,
    })?;
    let dag = &skeleton.dag;
    let storylines = decompose_storylines(dag, &skeleton.main_route);
    let landmarks = representative_landmarks(dag, &storylines);

    let mut storyline_of = vec![0; dag.len()];
    for (sid, s) in storylines.iter().enumerate() {
        s.iter().for_each(|&v| storyline_of[v] = sid);
    }
    let mut on_route = vec![false; dag.len()];
    skeleton.main_route.iter().for_each(|&v| on_route[v] = true);
    let route_edge = |s: usize, t: usize| skeleton.main_route.windows(2).any(|w| w == [s, t]);

    let map_nodes = (0..dag.len())
        .map(|v| {
            let g = skeleton.events[v];
            let s = subs[g];
            MapNode {
                id: s.id.clone(),
                title: s.title.clone(),
                created_at: s.created_at,
                score: s.score,
                upvote_ratio: s.upvote_ratio,
                score_percentile: percentiles[g],
                storyline_id: storyline_of[v],
                is_representative_landmark: landmarks.contains(&v),
                on_main_route: on_route[v],
            }
        })
        .collect();
    let map_edges: Vec<MapEdge> = dag
        .edges()
        .iter()
        .zip(&skeleton.edges)
        .map(|(e, &g)| {
            let c = &graph.edges[g];
            MapEdge {
                source: dag.nodes()[e.source].id.clone(),
                target: dag.nodes()[e.target].id.clone(),
                coherence: c.coherence,
                acceptance: c.acceptance,
                strength: c.strength,
                on_main_route: route_edge(e.source, e.target),
                lp_value: solution.edges[g],
            }
        })
        .collect();
    let id = |v: usize| dag.nodes()[v].id.clone();
    let storylines = storylines
        .iter()
        .enumerate()
        .map(|(sid, s)| {
            let hops: Vec<&crate::strength::CandidateEdge> = s
                .windows(2)
                .map(|w| {
                    graph
                        .edge(skeleton.events[w[0]], skeleton.events[w[1]])
                        .expect("storyline edges are map edges")
                })
                .collect();
            let mean = |f: fn(&crate::strength::CandidateEdge) -> f64| {
                (!hops.is_empty())
                    .then(|| hops.iter().map(|e| f(e)).sum::<f64>() / hops.len() as f64)
            };
            Storyline {
                id: sid,
                events: s.iter().map(|&v| id(v)).collect(),
                mean_strength: mean(|e| e.strength),
                mean_acceptance: mean(|e| e.acceptance),
            }
        })
        .collect();

    let coverage = coverage_report(
        skeleton
            .edges
            .iter()
            .map(|&g| model.edges[g].membership.as_slice()),
        model.num_clusters,
    );
    let rounded_min_strength = map_edges
        .iter()
        .map(|e| e.strength)
        .fold(f64::INFINITY, f64::min);
    let diagnostics = Diagnostics {
        avg_score_percentile: skeleton.avg_percentile,
        acceptance_shortfall: skeleton.shortfall,
        removed_by_repair: skeleton.removed.clone(),
        cluster_coverage: coverage,
        lp_objective: solution.objective,
        relaxation_objective,
        rounded_min_strength,
        main_route_bottleneck: path_bottleneck(dag, &skeleton.main_route),
        commitments: model.commitments.len(),
        candidate_edges: graph.edges.len(),
        lp_variables: model.num_variables(),
        lp_constraints: model.num_constraints(),
        max_violation,
    };
    Ok(NarrativeMap {
        schema_version: SCHEMA_VERSION,
        community: corpus.community().to_string(),
        nodes: map_nodes,
        edges: map_edges,
        main_route: skeleton.main_route.iter().map(|&v| id(v)).collect(),
        storylines,
        landmarks: landmarks.iter().map(|&v| id(v)).collect(),
        diagnostics,
        params,
        provenance: Provenance {
            graph_fingerprint: graph.fingerprint.clone(),
            ..Provenance::default()
        },
    })
}
