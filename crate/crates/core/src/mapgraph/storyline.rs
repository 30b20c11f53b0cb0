use super::dag::Dag;

struct Matcher<'a> {
    adj: &'a [Vec<usize>],
    left_banned: Vec<bool>,
    right_banned: Vec<bool>,
    mate_of_right: Vec<Option<usize>>,
    seen: Vec<bool>,
}

impl Matcher<'_> {
    fn augment(&mut self, u: usize) -> bool {
        for &v in &self.adj[u] {
            if self.right_banned[v] || self.seen[v] {
                continue;
            }
            self.seen[v] = true;
            let free = match self.mate_of_right[v] {
                None => true,
                Some(w) => self.augment(w),
            };
            if free {
                self.mate_of_right[v] = Some(u);
                return true;
            }
        }
        false
    }

    fn run(&mut self) -> usize {
        self.mate_of_right.iter_mut().for_each(|m| *m = None);
        let mut size = 0;
        for u in 0..self.adj.len() {
            if self.left_banned[u] {
                continue;
            }
            self.seen.iter_mut().for_each(|s| *s = false);
            if self.augment(u) {
                size += 1;
            }
        }
        size
    }
}

/// Minimum vertex-disjoint path cover of the DAG.
///
/// Route edges are kept inside one path whenever that does not cost an extra
/// path, greedily in route order. The path through the start node comes first
/// and the rest follow in order of their first node.
pub fn decompose_storylines(dag: &Dag, route: &[usize]) -> Vec<Vec<usize>> {
    let n = dag.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            dag.out_edges(u)
                .iter()
                .map(|&k| dag.edges()[k].target)
                .collect()
        })
        .collect();
    let mut m = Matcher {
        adj: &adj,
        left_banned: vec![false; n],
        right_banned: vec![false; n],
        mate_of_right: vec![None; n],
        seen: vec![false; n],
    };
    let maximum = m.run();
    let mut fixed: Vec<(usize, usize)> = Vec::new();
    for w in route.windows(2) {
        let (u, v) = (w[0], w[1]);
        if dag.edge(u, v).is_none() {
            continue;
        }
        m.left_banned[u] = true;
        m.right_banned[v] = true;
        if fixed.len() + 1 + m.run() == maximum {
            fixed.push((u, v));
        } else {
            m.left_banned[u] = false;
            m.right_banned[v] = false;
        }
    }
    m.run();

    let mut succ = vec![None; n];
    let mut has_pred = vec![false; n];
    for (v, mate) in m.mate_of_right.iter().enumerate() {
        if let Some(u) = *mate {
            succ[u] = Some(v);
            has_pred[v] = true;
        }
    }
    for &(u, v) in &fixed {
        succ[u] = Some(v);
        has_pred[v] = true;
    }
    let mut paths: Vec<Vec<usize>> = (0..n)
        .filter(|&v| !has_pred[v])
        .map(|head| {
            let mut path = vec![head];
            while let Some(next) = succ[*path.last().expect("non-empty")] {
                path.push(next);
            }
            path
        })
        .collect();
    // heads are already in node order; node 0 has no predecessor so its path leads
    paths.sort_by_key(|p| p[0]);
    paths
}

#[cfg(test)]
mod tests {
    use super::super::dag::test_dag;
    use super::*;

    #[test]
    fn diamond_needs_two() {
        let dag = test_dag(4, &[(0, 1, 0.5), (1, 3, 0.5), (0, 2, 0.5), (2, 3, 0.5)]);
        let paths = decompose_storylines(&dag, &[0, 2, 3]);
        assert_eq!(paths, vec![vec![0, 2, 3], vec![1]]);
    }

    #[test]
    fn chain_is_one() {
        let dag = test_dag(4, &[(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (0, 3, 0.5)]);
        assert_eq!(decompose_storylines(&dag, &[0, 3]), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn route_is_not_forced_at_the_cost_of_minimality() {
        // the route 0-2-5 would strand 1, 3 and 4 on separate paths
        let dag = test_dag(
            6,
            &[
                (0, 1, 0.5),
                (1, 2, 0.5),
                (0, 2, 0.5),
                (2, 5, 0.5),
                (2, 3, 0.5),
                (3, 4, 0.5),
                (4, 5, 0.5),
            ],
        );
        let paths = decompose_storylines(&dag, &[0, 2, 5]);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0], vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn paths_partition_nodes() {
        let dag = test_dag(
            7,
            &[
                (0, 1, 0.5),
                (0, 2, 0.5),
                (0, 3, 0.5),
                (1, 6, 0.5),
                (2, 6, 0.5),
                (3, 4, 0.5),
                (4, 6, 0.5),
                (5, 6, 0.5),
                (0, 5, 0.5),
            ],
        );
        let paths = decompose_storylines(&dag, &[0, 3, 4, 6]);
        let mut all: Vec<usize> = paths.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert_eq!(paths[0], vec![0, 3, 4, 6]);
        assert_eq!(paths.len(), 4);
        for p in &paths {
            assert!(p.windows(2).all(|w| dag.edge(w[0], w[1]).is_some()));
        }
    }
}
