use super::{DynamicsError, Result};

/// Undirected simple graph over followers `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl InteractionGraph {
    /// Edges are stored normalized as `(min, max)` and sorted. Self-loops,
    /// out-of-range endpoints and duplicates (in either orientation) are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut normalized = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(DynamicsError::InvalidGraph(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(DynamicsError::InvalidGraph(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            normalized.push((i.min(j), i.max(j)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(DynamicsError::InvalidGraph(format!("duplicate edge {:?}", w[0])));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &normalized {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        Ok(Self { n, edges: normalized, neighbors })
    }

    pub fn edgeless(n: usize) -> Self {
        Self { n, edges: Vec::new(), neighbors: vec![Vec::new(); n] }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::new(n, edges).expect("complete graph is simple")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_simple() {
        assert!(InteractionGraph::new(3, [(1, 1)]).is_err());
        assert!(InteractionGraph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(InteractionGraph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn normalizes_orientation() {
        let g = InteractionGraph::new(4, [(2, 0), (3, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (1, 3)]);
        assert_eq!(g.neighbors(0), &[2]);
        assert_eq!(g.degree(3), 1);
    }

    #[test]
    fn complete_graph_degrees() {
        let g = InteractionGraph::complete(4);
        assert_eq!(g.edges().len(), 6);
        assert!((0..4).all(|i| g.degree(i) == 3));
    }
}
