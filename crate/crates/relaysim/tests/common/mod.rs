//! Shared test oracles, kept independent of the implementation paths they
//! check.

#[allow(dead_code)]
/// Minimum spanning tree by Kruskal's algorithm: sort edges by weight and
/// greedily keep those joining distinct components. With distinct weights
/// the result is the unique MST.
pub fn kruskal_mst(nodes: usize, edges: &[(usize, usize, i64)]) -> Vec<(usize, usize)> {
    let mut sorted: Vec<&(usize, usize, i64)> = edges.iter().collect();
    sorted.sort_by_key(|(_, _, w)| *w);

    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }

    let mut tree = Vec::new();
    for (u, v, _) in sorted {
        let (ru, rv) = (find(&mut parent, *u), find(&mut parent, *v));
        if ru != rv {
            parent[ru] = rv;
            tree.push((*u.min(v), *u.max(v)));
        }
    }
    tree.sort_unstable();
    tree
}

#[allow(dead_code)]
pub fn factorial(n: i64) -> i64 {
    (1..=n).product()
}
