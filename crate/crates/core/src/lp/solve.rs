use microlp::{ComparisonOp, OptimizationDirection, Problem, Solution, SolveOutcome, Variable};

use super::{
    verify_solution, Cmp, InfeasibleClass, LpModel, LpSolution, LpStatus, Row, VerifyReport,
    FEASIBILITY_TOLERANCE,
};
use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

fn op(cmp: Cmp) -> ComparisonOp {
    match cmp {
        Cmp::Le => ComparisonOp::Le,
        Cmp::Ge => ComparisonOp::Ge,
        Cmp::Eq => ComparisonOp::Eq,
    }
}

fn problem(model: &LpModel, rows: &[Row]) -> (Problem, Vec<Variable>) {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = (0..model.num_variables())
        .map(|v| {
            let objective = if v == model.minedge_var() { 1.0 } else { 0.0 };
            p.add_var(objective, (0.0, 1.0))
        })
        .collect();
    for row in rows {
        let terms: Vec<(Variable, f64)> = row.terms.iter().map(|&(v, c)| (vars[v], c)).collect();
        p.add_constraint(terms.as_slice(), op(row.cmp), row.rhs);
    }
    (p, vars)
}

enum Attempt {
    Solved(Solution),
    Infeasible,
    Unbounded,
}

fn settle(outcome: std::result::Result<SolveOutcome, microlp::Error>) -> Result<Attempt> {
    match outcome {
        Ok(outcome) => outcome
            .into_solution()
            .map(Attempt::Solved)
            .map_err(|_| Error::Solver("solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(Attempt::Infeasible),
        Err(microlp::Error::Unbounded) => Ok(Attempt::Unbounded),
        Err(e) => Err(Error::Solver(e.to_string())),
    }
}

fn run(model: &LpModel, rows: &[Row]) -> Result<(Attempt, Vec<Variable>)> {
    let (p, vars) = problem(model, rows);
    Ok((settle(p.solve())?, vars))
}

fn extract(model: &LpModel, solution: &Solution, vars: &[Variable]) -> LpSolution {
    let value = |v: usize| solution.var_value(vars[v]).clamp(0.0, 1.0);
    LpSolution {
        status: LpStatus::Optimal,
        objective: solution.objective(),
        minedge: value(model.minedge_var()),
        events: (0..model.num_events)
            .map(|i| value(model.event_var(i)))
            .collect(),
        edges: (0..model.edges.len())
            .map(|e| value(model.edge_var(e)))
            .collect(),
        clusters: (0..model.num_clusters)
            .map(|k| value(model.cluster_var(k)))
            .collect(),
    }
}

/// Names the first constraint group, in structure → coverage → acceptance
/// order, whose addition makes the program infeasible.
fn diagnose(model: &LpModel) -> Result<InfeasibleClass> {
    for (class, coverage, acceptance) in [
        (InfeasibleClass::Structure, false, false),
        (InfeasibleClass::Coverage, true, false),
    ] {
        if let (Attempt::Infeasible, _) = run(model, &model.solver_rows(coverage, acceptance))? {
            return Ok(class);
        }
    }
    Ok(InfeasibleClass::Acceptance)
}

/// Solves the relaxation exactly. Infeasibility is reported through the status.
pub fn solve(model: &LpModel) -> Result<LpSolution> {
    Ok(solve_warm(model)?.0)
}

fn violation(model: &LpModel, solution: &LpSolution) -> Result<f64> {
    match verify_solution(model, solution) {
        Ok(VerifyReport::Checked { max_violation, .. }) => Ok(max_violation),
        Ok(VerifyReport::NotApplicable) => Ok(0.0),
        Err(Error::SolverInconsistency { violation, .. }) if !violation.is_nan() => Ok(violation),
        Err(e) => Err(e),
    }
}

/// Round-off can leave a vertex off its rows by more than the tolerance.
/// The program restricted to the solution's support has the same optimum, so
/// it is solved cold from scratch and kept when it verifies.
fn polish(model: &LpModel, solution: LpSolution) -> Result<LpSolution> {
    if violation(model, &solution)? <= FEASIBILITY_TOLERANCE {
        return Ok(solution);
    }
    let mut rows = model.solver_rows(true, true);
    rows.extend(
        (0..model.edges.len())
            .filter(|&e| solution.edges[e] <= EPS)
            .map(|e| Row {
                label: format!("support[{e}]"),
                terms: vec![(model.edge_var(e), 1.0)],
                cmp: Cmp::Le,
                rhs: 0.0,
            }),
    );
    if let (Attempt::Solved(s), vars) = run(model, &rows)? {
        let restricted = extract(model, &s, &vars);
        if violation(model, &restricted)? <= FEASIBILITY_TOLERANCE
            && restricted.objective >= solution.objective - FEASIBILITY_TOLERANCE
        {
            return Ok(restricted);
        }
    }
    Ok(solution)
}

/// Solver state a warm re-solve continues from.
type Warm = (Solution, Vec<Variable>);

fn solve_warm(model: &LpModel) -> Result<(LpSolution, Option<Warm>)> {
    match run(model, &model.solver_rows(true, true))? {
        (Attempt::Solved(s), vars) => {
            Ok((polish(model, extract(model, &s, &vars))?, Some((s, vars))))
        }
        (Attempt::Infeasible, _) => Ok((
            LpSolution::without_values(LpStatus::Infeasible(diagnose(model)?)),
            None,
        )),
        (Attempt::Unbounded, _) => Ok((LpSolution::without_values(LpStatus::Unbounded), None)),
    }
}

/// Outcome of [`concentrate`].
#[derive(Debug, Clone)]
pub struct Concentrated {
    /// The input model plus the accepted edge commitments.
    pub model: LpModel,
    pub solution: LpSolution,
    /// Objective of the uncommitted relaxation.
    pub relaxation_objective: f64,
    pub commitments_tried: usize,
}

/// Edge count of the longest start -> end path over edges valued at least
/// `tau`, or `None` when they do not connect.
pub(crate) fn threshold_path_len(model: &LpModel, edges: &[f64], tau: f64) -> Option<usize> {
    let mut longest: Vec<Option<usize>> = vec![None; model.num_events];
    longest[model.start] = Some(0);
    // edges are temporally forward, so one pass in source order suffices
    for e in edge_order(model) {
        let edge = &model.edges[e];
        if let Some(l) = longest[edge.source] {
            if edges[e] + EPS >= tau && longest[edge.target].is_none_or(|t| t < l + 1) {
                longest[edge.target] = Some(l + 1);
            }
        }
    }
    longest[model.end]
}

#[cfg(test)]
pub(crate) fn threshold_connects(model: &LpModel, edges: &[f64], tau: f64) -> bool {
    threshold_path_len(model, edges, tau).is_some()
}

fn edge_order(model: &LpModel) -> Vec<usize> {
    let mut order: Vec<usize> = (0..model.edges.len()).collect();
    order.sort_by_key(|&e| (model.edges[e].source, model.edges[e].target));
    order
}

/// Edges of the strongest start -> end candidate path (largest minimum
/// strength), preferring paths of at least `min_len` edges; ties go to the
/// larger minimum edge value.
fn commit_route(model: &LpModel, edges: &[f64], rejected: &[bool], min_len: usize) -> Vec<usize> {
    let n = model.num_events;
    let layers = min_len.max(1) + 1;
    // best[v][l]: paths reaching v with l edges, l capped at min_len
    let mut best = vec![vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); layers]; n];
    let mut via = vec![vec![None; layers]; n];
    best[model.start][0] = (f64::INFINITY, f64::INFINITY);
    for e in edge_order(model).into_iter().filter(|&e| !rejected[e]) {
        let (s, t) = (model.edges[e].source, model.edges[e].target);
        for l in 0..layers {
            if best[s][l].0 == f64::NEG_INFINITY {
                continue;
            }
            let cand = (
                best[s][l].0.min(model.edges[e].strength),
                best[s][l].1.min(edges[e]),
            );
            let next = (l + 1).min(layers - 1);
            if cand.0 > best[t][next].0 || (cand.0 == best[t][next].0 && cand.1 > best[t][next].1) {
                best[t][next] = cand;
                via[t][next] = Some((e, l));
            }
        }
    }
    let Some(mut l) = (0..layers).rev().find(|&l| via[model.end][l].is_some()) else {
        return Vec::new();
    };
    let mut path = Vec::new();
    let mut v = model.end;
    while let Some((e, prev)) = via[v][l] {
        path.push(e);
        v = model.edges[e].source;
        l = prev;
    }
    path
}

/// Fix-and-resolve rounding support.
///
/// The max-min objective rewards spreading route flow thinly over many edges,
/// which can leave no edge at or above `tau`, or meet the length row with a
/// short strong path plus a thin long one. While the thresholded support has
/// no start -> end path of at least `K - 1` edges, an edge below `tau` is
/// committed to `edge >= tau` and the program is re-solved warm. The edge is
/// the largest open one on the strongest long enough candidate route that
/// avoids withdrawn edges, or the largest fractional edge anywhere once that
/// route has none left to try. A
/// commitment that makes the program infeasible is withdrawn and the edge is
/// not retried.
pub fn concentrate(model: &LpModel, tau: f64) -> Result<Concentrated> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau,
        });
    }
    let mut model = model.clone();
    let (mut solution, warm) = solve_warm(&model)?;
    let relaxation_objective = solution.objective;
    let Some((mut warm, vars)) = warm else {
        return Ok(Concentrated {
            model,
            solution,
            relaxation_objective,
            commitments_tried: 0,
        });
    };
    let mut rejected = vec![false; model.edges.len()];
    let mut tried = 0;
    let min_len = model.params.k.saturating_sub(1);
    while threshold_path_len(&model, &solution.edges, tau).is_none_or(|l| l < min_len) {
        let open = |e: &usize| {
            !rejected[*e] && !model.commitments.contains_key(e) && solution.edges[*e] + EPS < tau
        };
        let largest = |a: &usize, b: &usize| {
            solution.edges[*a]
                .total_cmp(&solution.edges[*b])
                .then(
                    model.edges[*a]
                        .strength
                        .total_cmp(&model.edges[*b].strength),
                )
                .then(b.cmp(a))
        };
        let pick = commit_route(&model, &solution.edges, &rejected, min_len)
            .into_iter()
            .filter(open)
            .max_by(largest)
            .or_else(|| {
                (0..model.edges.len())
                    .filter(|e| open(e) && solution.edges[*e] > EPS)
                    .max_by(largest)
            });
        let Some(e) = pick else { break };
        tried += 1;
        let mut trial = model.clone();
        trial.commitments.insert(e, tau);
        let attempt = match settle(warm.clone().add_constraint(
            [(vars[model.edge_var(e)], 1.0)].as_slice(),
            ComparisonOp::Ge,
            tau,
        )) {
            // a numerically stuck warm start gets one cold solve
            Err(Error::Solver(_)) => run(&trial, &trial.solver_rows(true, true))?.0,
            other => other?,
        };
        match attempt {
            Attempt::Solved(next) => {
                model = trial;
                solution = extract(&model, &next, &vars);
                warm = next;
            }
            Attempt::Infeasible | Attempt::Unbounded => rejected[e] = true,
        }
    }
    let solution = polish(&model, solution)?;
    Ok(Concentrated {
        model,
        solution,
        relaxation_objective,
        commitments_tried: tried,
    })
}
