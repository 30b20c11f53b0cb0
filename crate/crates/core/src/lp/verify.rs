//! Re-evaluates a solution against the model semantics, without going
//! through the constraint rows handed to the solver.

use super::{LpModel, LpSolution, LpStatus};
use crate::error::{Error, Result};

pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyReport {
    /// The solution has no values to check (infeasible or unbounded status).
    NotApplicable,
    Checked {
        max_violation: f64,
        /// Constraint with the largest violation, if any is positive.
        worst: Option<String>,
    },
}

struct Tally {
    max: f64,
    worst: Option<String>,
}

impl Tally {
    fn le(&mut self, lhs: f64, rhs: f64, label: impl FnOnce() -> String) {
        let v = lhs - rhs;
        if v > self.max {
            self.max = v;
            self.worst = Some(label());
        }
    }

    fn eq(&mut self, lhs: f64, rhs: f64, label: impl FnOnce() -> String) {
        let v = (lhs - rhs).abs();
        if v > self.max {
            self.max = v;
            self.worst = Some(label());
        }
    }
}

/// Largest violation over bounds and every constraint family.
pub fn verify_solution(model: &LpModel, solution: &LpSolution) -> Result<VerifyReport> {
    if solution.status != LpStatus::Optimal {
        return Ok(VerifyReport::NotApplicable);
    }
    let n = model.num_events;
    if solution.events.len() != n
        || solution.edges.len() != model.edges.len()
        || solution.clusters.len() != model.num_clusters
    {
        return Err(Error::SolverInconsistency {
            constraint: "shape".into(),
            violation: f64::INFINITY,
        });
    }
    let mut t = Tally {
        max: 0.0,
        worst: None,
    };
    let x = &solution.edges;
    let ev = &solution.events;

    let all_values = std::iter::once(("minedge".to_string(), solution.minedge))
        .chain(
            ev.iter()
                .enumerate()
                .map(|(i, v)| (format!("event_{i}"), *v)),
        )
        .chain(x.iter().enumerate().map(|(e, v)| (format!("edge#{e}"), *v)))
        .chain(
            solution
                .clusters
                .iter()
                .enumerate()
                .map(|(k, v)| (format!("cluster_{k}"), *v)),
        );
    for (name, v) in all_values {
        if v.is_nan() {
            return Err(Error::SolverInconsistency {
                constraint: format!("bounds[{name}]"),
                violation: f64::NAN,
            });
        }
        t.le(-v, 0.0, || format!("bounds[{name}]"));
        t.le(v, 1.0, || format!("bounds[{name}]"));
    }

    let mut inflow = vec![0.0; n];
    let mut outflow = vec![0.0; n];
    let mut coverage = vec![0.0; model.num_clusters];
    for (e, edge) in model.edges.iter().enumerate() {
        let (i, j) = (edge.source, edge.target);
        t.le(solution.minedge, 1.0 - x[e] + edge.strength * x[e], || {
            format!("C1[{i}->{j}]")
        });
        t.le(x[e], ev[i], || format!("C2[{i}->{j}:src]"));
        t.le(x[e], ev[j], || format!("C2[{i}->{j}:dst]"));
        outflow[i] += x[e];
        inflow[j] += x[e];
        for (k, m) in edge.membership.iter().enumerate() {
            coverage[k] += m * x[e];
        }
        if let Some(lb) = model.commitments.get(&e) {
            t.le(*lb, x[e], || format!("commit[{i}->{j}]"));
        }
    }
    for v in 0..n {
        if v != model.start {
            t.eq(inflow[v], ev[v], || format!("C3[{v}:in]"));
        }
        if v != model.end {
            t.eq(outflow[v], ev[v], || format!("C3[{v}:out]"));
        }
    }
    t.eq(ev[model.start], 1.0, || "C4[start]".into());
    t.eq(ev[model.end], 1.0, || "C4[end]".into());
    t.le(model.params.k as f64 - 1.0, x.iter().sum(), || "C5".into());
    for (k, c) in solution.clusters.iter().enumerate() {
        t.le(*c, coverage[k], || format!("C6[{k}]"));
    }
    if model.num_clusters > 0 {
        let mean = solution.clusters.iter().sum::<f64>() / model.num_clusters as f64;
        t.le(model.params.mincover, mean, || "C6[mean]".into());
    }
    let acceptance: f64 = (0..n)
        .map(|i| (model.percentiles[i] - model.params.minscore) * ev[i])
        .sum();
    t.le(0.0, acceptance, || "C7".into());

    if t.max > FEASIBILITY_TOLERANCE {
        return Err(Error::SolverInconsistency {
            constraint: t.worst.unwrap_or_default(),
            violation: t.max,
        });
    }
    Ok(VerifyReport::Checked {
        max_violation: t.max,
        worst: t.worst,
    })
}
