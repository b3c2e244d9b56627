//! Brute-force oracles shared by the integration tests.

use nodal_core::DirectedGraph;

fn find(parent: &mut [usize], x: usize) -> usize {
    if parent[x] != x {
        let root = find(parent, parent[x]);
        parent[x] = root;
    }
    parent[x]
}

/// Every spanning tree as a sorted list of edge indices, by exhaustive search
/// over `(n-1)`-subsets of the edges.
pub fn spanning_trees(g: &DirectedGraph) -> Vec<Vec<usize>> {
    let n = g.n_vertices();
    let e = g.n_edges();
    let size = n - 1;
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..size).collect();
    loop {
        let mut parent: Vec<usize> = (0..n).collect();
        let acyclic = pick.iter().all(|&i| {
            let (a, b) = g.edge(i);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
            ra != rb
        });
        if acyclic {
            out.push(pick.clone());
        }
        let Some(i) = (0..size).rev().find(|&i| pick[i] < e - size + i) else {
            return out;
        };
        pick[i] += 1;
        for j in i + 1..size {
            pick[j] = pick[j - 1] + 1;
        }
    }
}
