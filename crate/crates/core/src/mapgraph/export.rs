use std::fmt::Write as _;

use super::NarrativeMap;
use crate::error::Result;

/// Pretty-printed JSON document with a trailing newline.
pub fn to_json(map: &NarrativeMap) -> Result<String> {
    let mut s = serde_json::to_string_pretty(map)?;
    s.push('\n');
    Ok(s)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn short_title(title: &str) -> String {
    const MAX: usize = 60;
    if title.chars().count() <= MAX {
        title.to_string()
    } else {
        let cut: String = title.chars().take(MAX - 3).collect();
        format!("{}...", cut.trim_end())
    }
}

/// Graphviz rendering: main-route edges dashed blue, landmarks double-bordered.
pub fn to_dot(map: &NarrativeMap) -> String {
    let mut out = String::from("digraph narrative_map {\n  rankdir=TB;\n  node [shape=box];\n");
    for n in &map.nodes {
        let label = format!(
            "{}\nur {:.2} | sp {:.2}",
            short_title(&n.title),
            n.upvote_ratio,
            n.score_percentile
        );
        let _ = write!(out, "  {} [label={}", quote(&n.id), quote(&label));
        if n.is_representative_landmark {
            out.push_str(", peripheries=2");
        }
        out.push_str("];\n");
    }
    for e in &map.edges {
        let _ = write!(
            out,
            "  {} -> {} [label=\"{:.3}\"",
            quote(&e.source),
            quote(&e.target),
            e.strength
        );
        if e.on_main_route {
            out.push_str(", style=dashed, color=blue");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}
