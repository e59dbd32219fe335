use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Connected, simple, undirected network with a classical label per node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct NetworkGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    inputs: Vec<Vec<bool>>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    inputs: Vec<Vec<bool>>,
}

impl TryFrom<GraphRepr> for NetworkGraph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        build_network(r.nodes, &r.edges, r.inputs)
    }
}

impl From<NetworkGraph> for GraphRepr {
    fn from(g: NetworkGraph) -> Self {
        GraphRepr {
            nodes: g.node_count,
            edges: g.edges,
            inputs: g.inputs,
        }
    }
}

/// Validates and builds a network. `inputs` may be empty (all labels empty)
/// or have one entry per node.
pub fn build_network(
    n: usize,
    edges: &[(usize, usize)],
    inputs: Vec<Vec<bool>>,
) -> Result<NetworkGraph> {
    if n == 0 {
        return Err(Error::Validation("a network needs at least one node".into()));
    }
    let inputs = if inputs.is_empty() {
        vec![Vec::new(); n]
    } else if inputs.len() == n {
        inputs
    } else {
        return Err(Error::Validation(format!(
            "{} input labels for {n} nodes",
            inputs.len()
        )));
    };
    let mut set = BTreeSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::Validation(format!("edge ({a},{b}) out of range")));
        }
        if a == b {
            return Err(Error::Validation(format!("self-loop at node {a}")));
        }
        if !set.insert((a.min(b), a.max(b))) {
            return Err(Error::Validation(format!("duplicate edge ({a},{b})")));
        }
    }
    let edges: Vec<_> = set.into_iter().collect();
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in &edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    let g = NetworkGraph {
        node_count: n,
        edges,
        inputs,
        adjacency,
    };
    let comps = g.components();
    if comps.len() > 1 {
        return Err(Error::Disconnected { components: comps });
    }
    Ok(g)
}

impl NetworkGraph {
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        build_network(n, &edges, Vec::new()).expect("path graph is connected")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least three nodes");
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        build_network(n, &edges, Vec::new()).expect("cycle graph is connected")
    }

    /// Star with node 0 at the center.
    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        build_network(n, &edges, Vec::new()).expect("star graph is connected")
    }

    /// Same topology with new node labels.
    pub fn with_inputs(&self, inputs: Vec<Vec<bool>>) -> Result<Self> {
        build_network(self.node_count, &self.edges, inputs)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn input(&self, u: usize) -> &[bool] {
        &self.inputs[u]
    }

    pub fn inputs(&self) -> &[Vec<bool>] {
        &self.inputs
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Hop distances from `root` (`usize::MAX` if unreachable).
    pub fn distances_from(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn diameter(&self) -> usize {
        (0..self.node_count)
            .map(|u| self.distances_from(u).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// 2-colorability test by BFS parity.
    pub fn is_bipartite(&self) -> bool {
        let d = self.distances_from(0);
        self.edges.iter().all(|&(a, b)| d[a] % 2 != d[b] % 2)
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.node_count];
        let mut out = Vec::new();
        for s in 0..self.node_count {
            if seen[s] {
                continue;
            }
            let d = self.distances_from(s);
            let comp: Vec<usize> = (0..self.node_count).filter(|&v| d[v] != usize::MAX).collect();
            for &v in &comp {
                seen[v] = true;
            }
            out.push(comp);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_has_diameter_two() {
        let g = build_network(3, &[(0, 1), (1, 2)], Vec::new()).unwrap();
        assert_eq!(g.diameter(), 2);
    }

    #[test]
    fn four_cycle_is_bipartite() {
        let g = NetworkGraph::cycle(4);
        assert!(g.is_bipartite());
        assert!(!NetworkGraph::cycle(3).is_bipartite());
    }

    #[test]
    fn disjoint_edges_are_rejected() {
        match build_network(4, &[(0, 1), (2, 3)], Vec::new()) {
            Err(Error::Disconnected { components }) => {
                assert_eq!(components, vec![vec![0, 1], vec![2, 3]]);
            }
            other => panic!("expected disconnection, got {other:?}"),
        }
    }

    #[test]
    fn malformed_edges() {
        assert!(build_network(2, &[(0, 0)], Vec::new()).is_err());
        assert!(build_network(2, &[(0, 1), (1, 0)], Vec::new()).is_err());
        assert!(build_network(2, &[(0, 2)], Vec::new()).is_err());
        assert!(build_network(0, &[], Vec::new()).is_err());
    }

    #[test]
    fn json_roundtrip_validates() {
        let g = NetworkGraph::path(3);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<NetworkGraph>(&s).unwrap(), g);
        let bad = r#"{"nodes":3,"edges":[[0,1]]}"#;
        assert!(serde_json::from_str::<NetworkGraph>(bad).is_err());
    }
}
