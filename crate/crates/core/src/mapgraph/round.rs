use super::dag::{Dag, DagEdge, DagNode};
use super::route::{main_route, RouteCriterion};
use crate::error::{Error, Result};
use crate::strength::StrengthGraph;

const TAU_SLACK: f64 = 1e-9;

pub struct RoundingInput<'a> {
    pub graph: &'a StrengthGraph,
    /// LP edge values aligned with `graph.edges`.
    pub edge_values: &'a [f64],
    /// One node per graph event, in graph order.
    pub nodes: Vec<DagNode>,
    pub percentiles: &'a [f64],
    pub tau: f64,
    pub minscore: f64,
    pub criterion: RouteCriterion,
}

/// The rounded map before presentation.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub dag: Dag,
    /// Graph event index of every skeleton node.
    pub events: Vec<usize>,
    /// Graph edge index of every skeleton edge.
    pub edges: Vec<usize>,
    pub main_route: Vec<usize>,
    pub avg_percentile: f64,
    /// Events removed by acceptance repair, in removal order.
    pub removed: Vec<String>,
    /// How far the average percentile stays below `minscore` when repair runs out of moves.
    pub shortfall: Option<f64>,
}

/// Thresholds the LP edges at `tau`, prunes to start -> end paths, then
/// removes low-percentile events off the main route while the average score
/// percentile is below `minscore`.
pub fn round_solution(input: RoundingInput<'_>) -> Result<Skeleton> {
    let RoundingInput {
        graph,
        edge_values,
        nodes,
        percentiles,
        tau,
        minscore,
        criterion,
    } = input;
    if edge_values.len() != graph.edges.len() || nodes.len() != graph.num_events() {
        return Err(Error::InvalidGraph("rounding inputs are misaligned".into()));
    }
    let kept: Vec<DagEdge> = graph
        .edges
        .iter()
        .zip(edge_values)
        .filter(|(_, &x)| x + TAU_SLACK >= tau)
        .map(|(e, _)| DagEdge {
            source: e.source,
            target: e.target,
            strength: e.strength,
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyMap { tau });
    }
    let full = Dag::new(nodes, kept)?;
    let mut alive = full.through_nodes(&vec![true; full.len()]);
    if !alive[full.end()] {
        return Err(Error::EmptyMap { tau });
    }

    let mut removed = Vec::new();
    let mut shortfall = None;
    let mut avg;
    loop {
        let (sub, old) = full.induced(&alive)?;
        avg = old.iter().map(|&v| percentiles[v]).sum::<f64>() / old.len() as f64;
        if avg + 1e-12 >= minscore {
            break;
        }
        let route = main_route(&sub, criterion)?;
        let mut on_route = vec![false; sub.len()];
        route.iter().for_each(|&v| on_route[v] = true);
        let mut candidates: Vec<usize> = (0..sub.len()).filter(|&v| !on_route[v]).collect();
        candidates.sort_by(|&a, &b| {
            percentiles[old[a]]
                .total_cmp(&percentiles[old[b]])
                .then(sub.nodes()[a].id.cmp(&sub.nodes()[b].id))
        });
        let next = candidates.into_iter().find_map(|v| {
            let mut trial = alive.clone();
            trial[old[v]] = false;
            let trial = full.through_nodes(&trial);
            trial[full.end()].then_some((old[v], trial))
        });
        match next {
            Some((v, trial)) => {
                removed.push(full.nodes()[v].id.clone());
                alive = trial;
            }
            None => {
                shortfall = Some(minscore - avg);
                break;
            }
        }
    }

    let (dag, events) = full.induced(&alive)?;
    let edges = dag
        .edges()
        .iter()
        .map(|e| {
            graph
                .edges
                .binary_search_by(|g| {
                    (g.source, g.target).cmp(&(events[e.source], events[e.target]))
                })
                .expect("kept edges come from the graph")
        })
        .collect();
    let main_route = main_route(&dag, criterion)?;
    Ok(Skeleton {
        dag,
        events,
        edges,
        main_route,
        avg_percentile: avg,
        removed,
        shortfall,
    })
}
