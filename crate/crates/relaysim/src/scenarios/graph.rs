//! Random connected weighted graphs for the spanning-tree scenario.

use crate::error::SimResult;
use crate::scenarios::construction_error;
use crate::sim::RngHandle;

/// An undirected graph with distinct positive integer edge weights.
#[derive(Clone, Debug)]
pub struct GraphSpec {
    pub nodes: usize,
    /// `(u, v, weight)` with `u < v`; weights are a permutation of `1..=E`.
    pub edges: Vec<(usize, usize, i64)>,
}

impl GraphSpec {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return false;
        }
        let mut dsu = Dsu::new(self.nodes);
        for (u, v, _) in &self.edges {
            dsu.union(*u, *v);
        }
        (1..self.nodes).all(|v| dsu.find(v) == dsu.find(0))
    }

    pub fn weights_distinct(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.edges.iter().all(|(_, _, w)| seen.insert(*w))
    }

    /// Validation shared by scenario constructors.
    pub fn validate(&self) -> SimResult<()> {
        if self.nodes < 2 {
            return Err(construction_error("graphs must have at least 2 nodes"));
        }
        if !self.is_connected() {
            return Err(construction_error("graph must be connected"));
        }
        if !self.weights_distinct() {
            return Err(construction_error("edge weights must be distinct"));
        }
        for (u, v, _) in &self.edges {
            if u == v || *u >= self.nodes || *v >= self.nodes {
                return Err(construction_error("edge endpoints out of range"));
            }
        }
        Ok(())
    }
}

/// Random connected graph with exactly `edges` edges (clamped to the
/// feasible range): a random spanning tree plus a uniform sample of extra
/// pairs, so connectivity holds for every density. Weights are a random
/// permutation of `1..=E`, so distinctness holds by construction.
pub fn random_connected_graph(nodes: usize, edges: usize, rng: &RngHandle) -> SimResult<GraphSpec> {
    if nodes < 2 {
        return Err(construction_error("need at least 2 nodes"));
    }
    let max_edges = nodes * (nodes - 1) / 2;
    let edges = edges.clamp(nodes - 1, max_edges);

    // Random spanning tree by random attachment over a shuffled label
    // order.
    let mut labels: Vec<usize> = (0..nodes).collect();
    rng.with(|r| {
        use rand::seq::SliceRandom;
        labels.shuffle(r);
    });
    let mut chosen = std::collections::BTreeSet::new();
    for i in 1..nodes {
        let j = rng.int_below(i as u64) as usize;
        let (u, v) = (labels[i], labels[j]);
        chosen.insert((u.min(v), u.max(v)));
    }

    // Fill to the requested density from the shuffled complement.
    let mut spare: Vec<(usize, usize)> = Vec::with_capacity(max_edges - chosen.len());
    for u in 0..nodes {
        for v in (u + 1)..nodes {
            if !chosen.contains(&(u, v)) {
                spare.push((u, v));
            }
        }
    }
    rng.with(|r| {
        use rand::seq::SliceRandom;
        spare.shuffle(r);
    });
    chosen.extend(spare.into_iter().take(edges - chosen.len()));

    let mut weights: Vec<i64> = (1..=edges as i64).collect();
    rng.with(|r| {
        use rand::seq::SliceRandom;
        weights.shuffle(r);
    });

    let graph = GraphSpec {
        nodes,
        edges: chosen
            .into_iter()
            .zip(weights)
            .map(|((u, v), w)| (u, v, w))
            .collect(),
    };
    debug_assert!(graph.is_connected());
    Ok(graph)
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a] = b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_graphs_are_connected_with_distinct_weights() {
        let rng = RngHandle::new(11);
        for n in [2usize, 5, 12, 32] {
            for extra in [0usize, 3, 10] {
                let g = random_connected_graph(n, n - 1 + extra, &rng).unwrap();
                assert_eq!(g.nodes, n);
                assert!(g.is_connected());
                assert!(g.weights_distinct());
                assert!(g.edge_count() >= n - 1);
                g.validate().unwrap();
            }
        }
    }

    #[test]
    fn two_node_graph_is_a_single_edge() {
        let rng = RngHandle::new(5);
        let g = random_connected_graph(2, 1, &rng).unwrap();
        assert_eq!(g.edges, vec![(0, 1, 1)]);
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        assert!(GraphSpec {
            nodes: 1,
            edges: vec![]
        }
        .validate()
        .is_err());
        assert!(GraphSpec {
            nodes: 3,
            edges: vec![(0, 1, 1)]
        }
        .validate()
        .is_err());
        assert!(GraphSpec {
            nodes: 3,
            edges: vec![(0, 1, 1), (1, 2, 1)]
        }
        .validate()
        .is_err());
    }
}
