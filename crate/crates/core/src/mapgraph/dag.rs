use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DagNode {
    pub id: String,
    pub created_at: i64,
    /// Score percentile times upvote ratio; used to break landmark ties.
    pub acceptance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagEdge {
    pub source: usize,
    pub target: usize,
    pub strength: f64,
}

/// A forward-only graph over nodes listed in the corpus total order.
///
/// Node `0` is the start and the last node is the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    nodes: Vec<DagNode>,
    edges: Vec<DagEdge>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl Dag {
    /// Edges are sorted by `(source, target)`; each must point forward in node order.
    pub fn new(nodes: Vec<DagNode>, mut edges: Vec<DagEdge>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidGraph("no nodes".into()));
        }
        for w in nodes.windows(2) {
            if (w[0].created_at, &w[0].id) >= (w[1].created_at, &w[1].id) {
                return Err(Error::InvalidGraph(format!(
                    "nodes `{}` and `{}` are out of order",
                    w[0].id, w[1].id
                )));
            }
        }
        for e in &edges {
            if e.source >= e.target || e.target >= nodes.len() {
                return Err(Error::InvalidGraph(format!(
                    "edge {} -> {} is not forward",
                    e.source, e.target
                )));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        if edges
            .windows(2)
            .any(|w| (w[0].source, w[0].target) == (w[1].source, w[1].target))
        {
            return Err(Error::InvalidGraph("parallel edges".into()));
        }
        let mut out = vec![Vec::new(); nodes.len()];
        let mut inc = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            out[e.source].push(k);
            inc[e.target].push(k);
        }
        Ok(Dag {
            nodes,
            edges,
            out,
            inc,
        })
    }

    pub fn nodes(&self) -> &[DagNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[DagEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn end(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Indices into [`Dag::edges`] leaving `v`, by ascending target.
    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    pub fn edge(&self, source: usize, target: usize) -> Option<&DagEdge> {
        self.edges
            .binary_search_by(|e| (e.source, e.target).cmp(&(source, target)))
            .ok()
            .map(|k| &self.edges[k])
    }

    /// Nodes on at least one start -> end path, considering only `alive` nodes.
    pub(crate) fn through_nodes(&self, alive: &[bool]) -> Vec<bool> {
        let n = self.len();
        let mut fwd = vec![false; n];
        let mut bwd = vec![false; n];
        fwd[0] = alive[0];
        for v in 0..n {
            if !fwd[v] {
                continue;
            }
            for &k in &self.out[v] {
                let t = self.edges[k].target;
                fwd[t] |= alive[t];
            }
        }
        bwd[n - 1] = alive[n - 1];
        for v in (0..n).rev() {
            if !bwd[v] {
                continue;
            }
            for &k in &self.inc[v] {
                let s = self.edges[k].source;
                bwd[s] |= alive[s];
            }
        }
        (0..n).map(|v| fwd[v] && bwd[v]).collect()
    }

    pub fn connects(&self) -> bool {
        self.through_nodes(&vec![true; self.len()])[self.end()]
    }

    /// Subgraph on the kept nodes, with the old index of every new node.
    pub(crate) fn induced(&self, keep: &[bool]) -> Result<(Dag, Vec<usize>)> {
        let old: Vec<usize> = (0..self.len()).filter(|&v| keep[v]).collect();
        let mut new_of = vec![usize::MAX; self.len()];
        for (i, &v) in old.iter().enumerate() {
            new_of[v] = i;
        }
        let nodes = old.iter().map(|&v| self.nodes[v].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.source] && keep[e.target])
            .map(|e| DagEdge {
                source: new_of[e.source],
                target: new_of[e.target],
                strength: e.strength,
            })
            .collect();
        Ok((Dag::new(nodes, edges)?, old))
    }
}

#[cfg(test)]
pub(crate) fn test_dag(n: usize, edges: &[(usize, usize, f64)]) -> Dag {
    let nodes = (0..n)
        .map(|i| DagNode {
            id: format!("n{i:02}"),
            created_at: 100 * i as i64,
            acceptance: 0.5,
        })
        .collect();
    let edges = edges
        .iter()
        .map(|&(source, target, strength)| DagEdge {
            source,
            target,
            strength,
        })
        .collect();
    Dag::new(nodes, edges).unwrap()
}
