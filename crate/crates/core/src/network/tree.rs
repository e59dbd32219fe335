use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::NetworkGraph;

/// Parent pointer and hop count per node; `root` has neither parent nor depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningTreeLabels {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub distance: Vec<usize>,
}

impl SpanningTreeLabels {
    pub fn children(&self, u: usize) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&v| self.parent[v] == Some(u))
            .collect()
    }

    /// Nodes in the subtree below `u`, `u` included.
    pub fn subtree(&self, u: usize) -> Vec<usize> {
        let mut out = vec![u];
        let mut i = 0;
        while i < out.len() {
            let w = out[i];
            out.extend(self.children(w));
            i += 1;
        }
        out.sort_unstable();
        out
    }
}

/// BFS tree rooted at `root`, visiting neighbors in increasing id order.
pub fn spanning_tree(graph: &NetworkGraph, root: usize) -> SpanningTreeLabels {
    let n = graph.node_count();
    let mut parent = vec![None; n];
    let mut distance = vec![usize::MAX; n];
    distance[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            if distance[v] == usize::MAX {
                distance[v] = distance[u] + 1;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    SpanningTreeLabels {
        root,
        parent,
        distance,
    }
}

/// Local check at `u`: the root claims no parent and depth 0; every other
/// node names a neighbor whose depth is one less.
pub fn verify_node(graph: &NetworkGraph, labels: &SpanningTreeLabels, u: usize) -> bool {
    if u == labels.root {
        return labels.parent[u].is_none() && labels.distance[u] == 0;
    }
    match labels.parent[u] {
        Some(p) => graph.has_edge(u, p) && labels.distance[u] == labels.distance[p] + 1,
        None => false,
    }
}

pub fn verify_spanning_tree(graph: &NetworkGraph, labels: &SpanningTreeLabels) -> Vec<bool> {
    (0..graph.node_count())
        .map(|u| verify_node(graph, labels, u))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfs_on_path() {
        let g = NetworkGraph::path(3);
        let t = spanning_tree(&g, 0);
        assert_eq!(t.parent, vec![None, Some(0), Some(1)]);
        assert_eq!(t.distance, vec![0, 1, 2]);
        assert!(verify_spanning_tree(&g, &t).iter().all(|&b| b));
        assert_eq!(t.subtree(1), vec![1, 2]);
    }

    #[test]
    fn bad_distance_rejected_at_that_node() {
        let g = NetworkGraph::path(3);
        let mut t = spanning_tree(&g, 0);
        t.distance[2] = 5;
        assert_eq!(verify_spanning_tree(&g, &t), vec![true, true, false]);
    }

    #[test]
    fn parent_cycle_rejected() {
        let g = NetworkGraph::path(3);
        let t = SpanningTreeLabels {
            root: 0,
            parent: vec![None, Some(2), Some(1)],
            distance: vec![0, 1, 1],
        };
        assert!(verify_spanning_tree(&g, &t).iter().any(|&b| !b));
    }
}
