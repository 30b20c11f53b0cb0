use std::fmt::Write as _;

use super::{Cmp, LpModel};

/// Renders the model in CPLEX LP format for cross-checking with external solvers.
pub fn write_lp_text(model: &LpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ narrative map program: {} events, {} edges, {} clusters, K = {}, mincover = {}, minscore = {}",
        model.num_events,
        model.edges.len(),
        model.num_clusters,
        model.params.k,
        model.params.mincover,
        model.params.minscore
    );
    out.push_str("Maximize\n obj: minedge\nSubject To\n");
    for row in model.rows(true, true) {
        let label: String = row
            .label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let _ = write!(out, " {label}:");
        for (v, c) in &row.terms {
            let sign = if *c < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {sign} {} {}", c.abs(), model.var_name(*v));
        }
        let cmp = match row.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        let _ = writeln!(out, " {cmp} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for v in 0..model.num_variables() {
        let _ = writeln!(out, " 0 <= {} <= 1", model.var_name(v));
    }
    out.push_str("End\n");
    out
}
