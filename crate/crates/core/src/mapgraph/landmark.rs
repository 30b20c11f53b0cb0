use super::dag::Dag;

/// Number of storylines whose time span contains `t`.
pub fn width_at(dag: &Dag, storylines: &[Vec<usize>], t: i64) -> usize {
    storylines
        .iter()
        .filter(|s| span(dag, s).is_some_and(|(a, b)| a <= t && t <= b))
        .count()
}

fn span(dag: &Dag, storyline: &[usize]) -> Option<(i64, i64)> {
    let first = dag.nodes()[*storyline.first()?].created_at;
    let last = dag.nodes()[*storyline.last()?].created_at;
    Some((first, last))
}

/// Earliest node timestamp of maximum storyline width, with that width.
pub fn widest_time(dag: &Dag, storylines: &[Vec<usize>]) -> Option<(i64, usize)> {
    let mut best: Option<(i64, usize)> = None;
    for node in dag.nodes() {
        let w = width_at(dag, storylines, node.created_at);
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((node.created_at, w));
        }
    }
    best
}

/// One landmark per storyline spanning the widest point, in storyline order.
///
/// Within a storyline the landmark is the event closest in time to the widest
/// point; ties go to the higher acceptance and then the smaller id. Maps with
/// fewer than two storylines have no landmarks.
pub fn representative_landmarks(dag: &Dag, storylines: &[Vec<usize>]) -> Vec<usize> {
    if storylines.len() < 2 {
        return Vec::new();
    }
    let Some((t, _)) = widest_time(dag, storylines) else {
        return Vec::new();
    };
    storylines
        .iter()
        .filter(|s| span(dag, s).is_some_and(|(a, b)| a <= t && t <= b))
        .filter_map(|s| {
            s.iter().copied().min_by(|&a, &b| {
                let (na, nb) = (&dag.nodes()[a], &dag.nodes()[b]);
                na.created_at
                    .abs_diff(t)
                    .cmp(&nb.created_at.abs_diff(t))
                    .then(nb.acceptance.total_cmp(&na.acceptance))
                    .then(na.id.cmp(&nb.id))
            })
        })
        .collect()
}
