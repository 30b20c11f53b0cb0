//! The narrative extraction linear program.
//!
//! Variables, all in `[0, 1]`:
//!
//! * `minedge`, the weakest strength over active edges (the objective);
//! * `event_i`, the presence of event `i`;
//! * `edge_ij`, the weight of the connection `i -> j`;
//! * `cluster_k`, the presence of cluster `k`.
//!
//! Constraint families:
//!
//! | id | meaning |
//! |----|---------|
//! | C1 | `minedge <= 1 - edge_ij + strength_ij * edge_ij` |
//! | C2 | `edge_ij <= event_i`, `edge_ij <= event_j` |
//! | C3 | unit route flow: inflow and outflow of every non-terminal event equal `event_i` |
//! | C4 | `event_start = event_end = 1` |
//! | C5 | `sum edge_ij >= K - 1` (expected main-route length) |
//! | C6 | `cluster_k <= sum membership_ijk * edge_ij`, `mean cluster_k >= mincover` |
//! | C7 | `sum (percentile_i - minscore) * event_i >= 0` |
//!
//! Edge commitments (`edge_ij >= tau`) are added by [`concentrate`] while
//! rounding and belong to the structure class.

mod solve;
mod text;
mod verify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::{edge_membership, MembershipMatrix};
use crate::error::{Error, Result};
use crate::strength::StrengthGraph;

pub use solve::{concentrate, solve, Concentrated};
pub use text::write_lp_text;
pub use verify::{verify_solution, VerifyReport, FEASIBILITY_TOLERANCE};

/// User-facing parameters of the program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpParams {
    pub k: usize,
    pub mincover: f64,
    pub minscore: f64,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams {
            k: 8,
            mincover: 0.5,
            minscore: 0.85,
        }
    }
}

impl LpParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidK(self.k));
        }
        for (name, value) in [("mincover", self.mincover), ("minscore", self.minscore)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange { name, value });
            }
        }
        Ok(())
    }
}

/// Constraint groups used to explain infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibleClass {
    Structure,
    Coverage,
    Acceptance,
}

impl fmt::Display for InfeasibleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfeasibleClass::Structure => "structure",
            InfeasibleClass::Coverage => "coverage",
            InfeasibleClass::Acceptance => "acceptance",
        })
    }
}

/// A candidate edge as seen by the program.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEdge {
    pub source: usize,
    pub target: usize,
    pub strength: f64,
    /// `membership_ijk` for every cluster `k`.
    pub membership: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub num_events: usize,
    pub start: usize,
    pub end: usize,
    pub edges: Vec<ModelEdge>,
    pub num_clusters: usize,
    pub percentiles: Vec<f64>,
    pub params: LpParams,
    /// Lower bounds on edge variables, keyed by edge index.
    pub commitments: BTreeMap<usize, f64>,
}

impl LpModel {
    /// Builds a model over events `0..num_events`; start is event 0 and end is the last event.
    pub fn new(
        num_events: usize,
        edges: Vec<ModelEdge>,
        num_clusters: usize,
        percentiles: Vec<f64>,
        params: LpParams,
    ) -> Result<Self> {
        params.validate()?;
        if num_events < 2 {
            return Err(Error::InsufficientEvents(num_events));
        }
        if percentiles.len() != num_events {
            return Err(Error::UnscoredEvent(format!(
                "#{}",
                percentiles.len().min(num_events)
            )));
        }
        for e in &edges {
            assert!(
                e.source < e.target && e.target < num_events,
                "edge {}->{} is not temporally forward",
                e.source,
                e.target
            );
            assert_eq!(e.membership.len(), num_clusters, "membership width");
        }
        Ok(LpModel {
            num_events,
            start: 0,
            end: num_events - 1,
            edges,
            num_clusters,
            percentiles,
            params,
            commitments: BTreeMap::new(),
        })
    }

    pub fn num_variables(&self) -> usize {
        1 + self.num_events + self.edges.len() + self.num_clusters
    }

    pub fn num_constraints(&self) -> usize {
        self.rows(true, true).len()
    }

    pub(crate) fn minedge_var(&self) -> usize {
        0
    }

    pub(crate) fn event_var(&self, i: usize) -> usize {
        1 + i
    }

    pub(crate) fn edge_var(&self, e: usize) -> usize {
        1 + self.num_events + e
    }

    pub(crate) fn cluster_var(&self, k: usize) -> usize {
        1 + self.num_events + self.edges.len() + k
    }

    pub(crate) fn var_name(&self, v: usize) -> String {
        let n = self.num_events;
        let m = self.edges.len();
        if v == 0 {
            "minedge".into()
        } else if v <= n {
            format!("event_{}", v - 1)
        } else if v <= n + m {
            let e = &self.edges[v - 1 - n];
            format!("edge_{}_{}", e.source, e.target)
        } else {
            format!("cluster_{}", v - 1 - n - m)
        }
    }

    /// Rows handed to the solver. The endpoint rows of every edge follow from
    /// the flow rows and non-negativity, so they are only verified.
    pub(crate) fn solver_rows(&self, coverage: bool, acceptance: bool) -> Vec<Row> {
        let mut rows = self.rows(coverage, acceptance);
        rows.retain(|r| !r.label.starts_with("C2["));
        rows
    }

    /// Every constraint row. Coverage and acceptance rows can be left out to
    /// locate the source of infeasibility.
    pub(crate) fn rows(&self, coverage: bool, acceptance: bool) -> Vec<Row> {
        let mut rows = Vec::new();
        for (idx, e) in self.edges.iter().enumerate() {
            let x = self.edge_var(idx);
            rows.push(Row {
                label: format!("C1[{}->{}]", e.source, e.target),
                terms: vec![(self.minedge_var(), 1.0), (x, 1.0 - e.strength)],
                cmp: Cmp::Le,
                rhs: 1.0,
            });
            for (end, v) in [("src", e.source), ("dst", e.target)] {
                rows.push(Row {
                    label: format!("C2[{}->{}:{end}]", e.source, e.target),
                    terms: vec![(x, 1.0), (self.event_var(v), -1.0)],
                    cmp: Cmp::Le,
                    rhs: 0.0,
                });
            }
        }
        let mut inflow: Vec<Vec<usize>> = vec![Vec::new(); self.num_events];
        let mut outflow: Vec<Vec<usize>> = vec![Vec::new(); self.num_events];
        for (idx, e) in self.edges.iter().enumerate() {
            outflow[e.source].push(idx);
            inflow[e.target].push(idx);
        }
        for v in 0..self.num_events {
            for (dir, edges, applies) in [
                ("in", &inflow[v], v != self.start),
                ("out", &outflow[v], v != self.end),
            ] {
                if !applies {
                    continue;
                }
                let mut terms: Vec<(usize, f64)> =
                    edges.iter().map(|&e| (self.edge_var(e), 1.0)).collect();
                terms.push((self.event_var(v), -1.0));
                rows.push(Row {
                    label: format!("C3[{v}:{dir}]"),
                    terms,
                    cmp: Cmp::Eq,
                    rhs: 0.0,
                });
            }
        }
        for (name, v) in [("start", self.start), ("end", self.end)] {
            rows.push(Row {
                label: format!("C4[{name}]"),
                terms: vec![(self.event_var(v), 1.0)],
                cmp: Cmp::Eq,
                rhs: 1.0,
            });
        }
        rows.push(Row {
            label: "C5".into(),
            terms: (0..self.edges.len())
                .map(|e| (self.edge_var(e), 1.0))
                .collect(),
            cmp: Cmp::Ge,
            rhs: self.params.k as f64 - 1.0,
        });
        for (&e, &lb) in &self.commitments {
            let edge = &self.edges[e];
            rows.push(Row {
                label: format!("commit[{}->{}]", edge.source, edge.target),
                terms: vec![(self.edge_var(e), 1.0)],
                cmp: Cmp::Ge,
                rhs: lb,
            });
        }
        if coverage {
            for k in 0..self.num_clusters {
                let mut terms = vec![(self.cluster_var(k), 1.0)];
                terms.extend(
                    self.edges
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| e.membership[k] != 0.0)
                        .map(|(idx, e)| (self.edge_var(idx), -e.membership[k])),
                );
                rows.push(Row {
                    label: format!("C6[{k}]"),
                    terms,
                    cmp: Cmp::Le,
                    rhs: 0.0,
                });
            }
            rows.push(Row {
                label: "C6[mean]".into(),
                terms: (0..self.num_clusters)
                    .map(|k| (self.cluster_var(k), 1.0 / self.num_clusters as f64))
                    .collect(),
                cmp: Cmp::Ge,
                rhs: self.params.mincover,
            });
        }
        if acceptance {
            rows.push(Row {
                label: "C7".into(),
                terms: (0..self.num_events)
                    .map(|i| {
                        (
                            self.event_var(i),
                            self.percentiles[i] - self.params.minscore,
                        )
                    })
                    .collect(),
                cmp: Cmp::Ge,
                rhs: 0.0,
            });
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// Builds the program for a strength graph; `percentiles` align with `graph.event_ids`.
pub fn build_model(
    graph: &StrengthGraph,
    memberships: &MembershipMatrix,
    percentiles: &[f64],
    params: LpParams,
) -> Result<LpModel> {
    params.validate()?;
    let n = graph.num_events();
    if n < 2 {
        return Err(Error::InsufficientEvents(n));
    }
    let rows: Vec<&[f64]> = graph
        .event_ids
        .iter()
        .map(|id| {
            memberships
                .get(id)
                .ok_or_else(|| Error::UnclusteredEvent(id.clone()))
        })
        .collect::<Result<_>>()?;
    let num_clusters = memberships.num_clusters();
    let edges = graph
        .edges
        .iter()
        .map(|e| {
            let membership = (0..num_clusters)
                .map(|k| edge_membership(rows[e.source], rows[e.target], k))
                .collect::<Result<_>>()?;
            Ok(ModelEdge {
                source: e.source,
                target: e.target,
                strength: e.strength,
                membership,
            })
        })
        .collect::<Result<_>>()?;
    LpModel::new(n, edges, num_clusters, percentiles.to_vec(), params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "class")]
pub enum LpStatus {
    Optimal,
    Infeasible(InfeasibleClass),
    Unbounded,
}

/// Variable values of a solved program, aligned with the model's indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub minedge: f64,
    pub events: Vec<f64>,
    pub edges: Vec<f64>,
    pub clusters: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn without_values(status: LpStatus) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            minedge: f64::NAN,
            events: Vec::new(),
            edges: Vec::new(),
            clusters: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Converts a non-optimal status into the matching error.
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible(class) => Err(Error::Infeasible(class)),
            LpStatus::Unbounded => Err(Error::Solver("unbounded program".into())),
        }
    }
}
