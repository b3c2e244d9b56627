//! Oriented simple graphs, the coboundary operator `d: R^V -> R^E` and
//! integer frames of the cycle space `Z = ker d*`.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertex index, 0-based.
pub type Vertex = usize;
/// Edge index into [`DirectedGraph::edges`].
pub type EdgeId = usize;

/// Connected simple graph whose edges carry a preferred orientation `(tail -> head)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    vertex_labels: Option<Vec<String>>,
    edge_labels: Option<Vec<String>>,
    notes: Option<String>,
    lookup: HashMap<(Vertex, Vertex), EdgeId>,
    adjacency: Vec<Vec<(Vertex, EdgeId)>>,
}

/// On-disk JSON form: `{"n": <int>, "edges": [[tail, head], ...]}`.
///
/// Labels and free-form notes are optional and ignored by the algorithms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[Vertex; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl TryFrom<GraphFile> for DirectedGraph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        let edges = file.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut g = DirectedGraph::new(file.n, edges)?;
        if let Some(labels) = &file.vertex_labels {
            if labels.len() != g.n {
                return Err(Error::InvalidGraph(format!(
                    "vertex_labels has {} entries, expected {}",
                    labels.len(),
                    g.n
                )));
            }
        }
        if let Some(labels) = &file.edge_labels {
            if labels.len() != g.edges.len() {
                return Err(Error::InvalidGraph(format!(
                    "edge_labels has {} entries, expected {}",
                    labels.len(),
                    g.edges.len()
                )));
            }
        }
        g.vertex_labels = file.vertex_labels;
        g.edge_labels = file.edge_labels;
        g.notes = file.notes;
        Ok(g)
    }
}

impl From<DirectedGraph> for GraphFile {
    fn from(g: DirectedGraph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges.iter().map(|&(r, s)| [r, s]).collect(),
            vertex_labels: g.vertex_labels,
            edge_labels: g.edge_labels,
            notes: g.notes,
        }
    }
}

fn unordered(r: Vertex, s: Vertex) -> (Vertex, Vertex) {
    if r < s {
        (r, s)
    } else {
        (s, r)
    }
}

impl DirectedGraph {
    /// Validates simplicity and connectivity.
    pub fn new(n: usize, edges: Vec<(Vertex, Vertex)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one vertex".into()));
        }
        let mut lookup = HashMap::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (id, &(r, s)) in edges.iter().enumerate() {
            if r >= n || s >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} = ({r}, {s}) references a vertex outside 0..{n}"
                )));
            }
            if r == s {
                return Err(Error::InvalidGraph(format!("edge {id} is a self-loop at {r}")));
            }
            if let Some(prev) = lookup.insert(unordered(r, s), id) {
                return Err(Error::InvalidGraph(format!(
                    "edges {prev} and {id} join the same pair ({r}, {s})"
                )));
            }
            adjacency[r].push((s, id));
            adjacency[s].push((r, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let g = DirectedGraph {
            n,
            edges,
            vertex_labels: None,
            edge_labels: None,
            notes: None,
            lookup,
            adjacency,
        };
        let reached = g.bfs_order(0).len();
        if reached != n {
            return Err(Error::InvalidGraph(format!(
                "graph is disconnected: {reached} of {n} vertices reachable from vertex 0"
            )));
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> (Vertex, Vertex) {
        self.edges[e]
    }

    /// First Betti number `|E| - |V| + 1`.
    pub fn betti(&self) -> usize {
        self.edges.len() + 1 - self.n
    }

    /// Sorted `(neighbour, edge)` pairs of `v`.
    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn vertex_labels(&self) -> Option<&[String]> {
        self.vertex_labels.as_deref()
    }

    pub fn edge_labels(&self) -> Option<&[String]> {
        self.edge_labels.as_deref()
    }

    pub fn notes(&self) -> Option<&str> {
        self.notes.as_deref()
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = Some(notes.into());
        self
    }

    pub fn has_edge(&self, r: Vertex, s: Vertex) -> bool {
        self.lookup.contains_key(&unordered(r, s))
    }

    /// Stored edge joining `r` and `s`, with `+1` if it is stored as `(r -> s)`
    /// and `-1` if stored as `(s -> r)`.
    pub fn edge_index(&self, r: Vertex, s: Vertex) -> Result<(EdgeId, f64)> {
        let id = *self
            .lookup
            .get(&unordered(r, s))
            .ok_or(Error::NotAnEdge(r, s))?;
        let sign = if self.edges[id] == (r, s) { 1.0 } else { -1.0 };
        Ok((id, sign))
    }

    /// Copy of the graph with edge `e` reversed. Edge numbering is unchanged.
    pub fn flip_edge(&self, e: EdgeId) -> Self {
        let mut edges = self.edges.clone();
        let (r, s) = edges[e];
        edges[e] = (s, r);
        let mut g = DirectedGraph::new(self.n, edges).expect("flipping keeps validity");
        g.vertex_labels = self.vertex_labels.clone();
        g.edge_labels = self.edge_labels.clone();
        g.notes = self.notes.clone();
        g
    }

    fn bfs_order(&self, root: Vertex) -> Vec<Vertex> {
        let mut seen = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// Coboundary `d`: `(dθ)_(r->s) = θ_s - θ_r`, an `|E| x |V|` matrix.
    /// Its transpose is the boundary map `d*`.
    pub fn coboundary(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.edges.len(), self.n);
        for (e, &(r, s)) in self.edges.iter().enumerate() {
            d[(e, r)] = -1.0;
            d[(e, s)] = 1.0;
        }
        d
    }

    /// Applies `d*` to an edge vector without forming the matrix.
    pub fn boundary_of(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (e, &(r, s)) in self.edges.iter().enumerate() {
            out[s] += f[e];
            out[r] -= f[e];
        }
        out
    }
}

/// Rooted spanning tree, stored as parent pointers.
#[derive(Debug, Clone)]
pub struct SpanningTree {
    root: Vertex,
    parent: Vec<Option<(Vertex, EdgeId)>>,
    depth: Vec<usize>,
    in_tree: Vec<bool>,
}

impl SpanningTree {
    /// BFS tree from `root`, visiting neighbours in increasing vertex order.
    pub fn bfs(g: &DirectedGraph, root: Vertex) -> Self {
        let mut parent = vec![None; g.n];
        let mut depth = vec![0; g.n];
        let mut seen = vec![false; g.n];
        let mut in_tree = vec![false; g.n_edges()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, e) in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    depth[w] = depth[v] + 1;
                    in_tree[e] = true;
                    queue.push_back(w);
                }
            }
        }
        SpanningTree { root, parent, depth, in_tree }
    }

    /// Tree grown greedily (Kruskal order) from `order`, then rooted at vertex 0.
    /// Any permutation of the edge ids yields a valid spanning tree.
    pub fn from_edge_order(g: &DirectedGraph, order: &[EdgeId]) -> Self {
        let mut uf: Vec<usize> = (0..g.n).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut chosen = vec![false; g.n_edges()];
        for &e in order {
            let (r, s) = g.edge(e);
            let (a, b) = (find(&mut uf, r), find(&mut uf, s));
            if a != b {
                uf[a] = b;
                chosen[e] = true;
            }
        }
        let mut parent = vec![None; g.n];
        let mut depth = vec![0; g.n];
        let mut seen = vec![false; g.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, e) in g.neighbors(v) {
                if chosen[e] && !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        SpanningTree { root: 0, parent, depth, in_tree: chosen }
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.in_tree[e]
    }

    /// Edges not in the tree, ascending.
    pub fn chords(&self) -> Vec<EdgeId> {
        (0..self.in_tree.len()).filter(|&e| !self.in_tree[e]).collect()
    }

    /// Walks the tree from `from` to `to`, returning `(edge, x, y)` steps
    /// meaning "traverse `edge` from `x` to `y`".
    fn path(&self, from: Vertex, to: Vertex) -> Vec<(EdgeId, Vertex, Vertex)> {
        let (mut a, mut b) = (from, to);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while a != b {
            if self.depth[a] >= self.depth[b] {
                let (p, e) = self.parent[a].expect("non-root vertex has a parent");
                up.push((e, a, p));
                a = p;
            } else {
                let (p, e) = self.parent[b].expect("non-root vertex has a parent");
                down.push((e, p, b));
                b = p;
            }
        }
        down.reverse();
        up.extend(down);
        up
    }
}

/// `|E| x β` matrix whose columns are a basis of the cycle space of `graph`.
#[derive(Debug, Clone)]
pub struct CycleFrame {
    matrix: DMatrix<f64>,
    chords: Vec<EdgeId>,
}

impl CycleFrame {
    /// Fundamental cycles of the BFS tree rooted at vertex 0.
    pub fn fundamental(g: &DirectedGraph) -> Self {
        Self::from_tree(g, &SpanningTree::bfs(g, 0))
    }

    /// One column per chord `(u -> v)`: `+1` on the chord and `±1` along the tree
    /// path back from `v` to `u`, the sign recording agreement with the stored
    /// orientation.
    pub fn from_tree(g: &DirectedGraph, tree: &SpanningTree) -> Self {
        let chords = tree.chords();
        let mut matrix = DMatrix::zeros(g.n_edges(), chords.len());
        for (col, &chord) in chords.iter().enumerate() {
            let (u, v) = g.edge(chord);
            matrix[(chord, col)] = 1.0;
            for (e, x, y) in tree.path(v, u) {
                matrix[(e, col)] = if g.edge(e) == (x, y) { 1.0 } else { -1.0 };
            }
        }
        CycleFrame { matrix, chords }
    }

    /// Wraps a user-supplied frame after checking shape, `d* C = 0` and full column rank.
    pub fn from_matrix(g: &DirectedGraph, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != g.n_edges() {
            return Err(Error::DimensionMismatch { expected: g.n_edges(), got: matrix.nrows() });
        }
        if matrix.ncols() != g.betti() {
            return Err(Error::DimensionMismatch { expected: g.betti(), got: matrix.ncols() });
        }
        let defect = (g.coboundary().transpose() * &matrix).amax();
        if defect > 1e-10 * matrix.amax().max(1.0) {
            return Err(Error::InvalidGraph(format!(
                "frame columns are not cycles (|d* C| = {defect:.3e})"
            )));
        }
        let rank = crate::linalg::numerical_rank(&matrix, 1e-10);
        if rank < matrix.ncols() {
            return Err(Error::RankDeficientFrame { rank, cols: matrix.ncols() });
        }
        Ok(CycleFrame { matrix, chords: Vec::new() })
    }

    /// Builds a frame from the rows of `Cᵀ`, one cycle per row.
    pub fn from_rows(g: &DirectedGraph, rows: &[Vec<f64>]) -> Result<Self> {
        for row in rows {
            if row.len() != g.n_edges() {
                return Err(Error::DimensionMismatch { expected: g.n_edges(), got: row.len() });
            }
        }
        let m = DMatrix::from_fn(g.n_edges(), rows.len(), |e, j| rows[j][e]);
        Self::from_matrix(g, m)
    }

    /// Rows of `Cᵀ`.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.column_iter().map(|c| c.iter().copied().collect()).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn betti(&self) -> usize {
        self.matrix.ncols()
    }

    /// Chord edge of each column when built from a spanning tree.
    pub fn chords(&self) -> &[EdgeId] {
        &self.chords
    }
}

/// Path `0 - 1 - ... - (n-1)` oriented forward.
pub fn path_graph(n: usize) -> DirectedGraph {
    DirectedGraph::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("path graph is valid")
}

/// Cycle `0 -> 1 -> ... -> (n-1) -> 0`, `n >= 3`.
pub fn cycle_graph(n: usize) -> DirectedGraph {
    assert!(n >= 3, "cycle needs at least three vertices");
    DirectedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("cycle graph is valid")
}

/// Complete graph with edges `(i -> j)` for `i < j` in lexicographic order.
pub fn complete_graph(n: usize) -> DirectedGraph {
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    DirectedGraph::new(n, edges).expect("complete graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> DirectedGraph {
        DirectedGraph::new(4, vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn single_edge_coboundary() {
        let g = path_graph(2);
        assert_eq!(g.coboundary(), DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));
    }

    #[test]
    fn triangle_cycle_is_in_kernel_of_boundary() {
        let g = DirectedGraph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let d = g.coboundary();
        for row in d.row_iter() {
            assert_eq!(row.sum(), 0.0);
        }
        // 0 -> 1 -> 2 -> 0 traverses the last edge backwards
        let cycle = [1.0, 1.0, -1.0];
        assert_eq!(g.boundary_of(&cycle), vec![0.0; 3]);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(matches!(DirectedGraph::new(2, vec![(0, 0)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(
            DirectedGraph::new(2, vec![(0, 1), (1, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(DirectedGraph::new(3, vec![(0, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(DirectedGraph::new(2, vec![(0, 2)]), Err(Error::InvalidGraph(_))));
        assert!(DirectedGraph::new(0, vec![]).is_err());
    }

    #[test]
    fn edge_index_reports_orientation() {
        let g = diamond();
        assert_eq!(g.edge_index(0, 1).unwrap(), (0, 1.0));
        assert_eq!(g.edge_index(1, 0).unwrap(), (0, -1.0));
        assert!(matches!(g.edge_index(0, 3), Err(Error::NotAnEdge(0, 3))));
    }

    #[test]
    fn tree_has_empty_frame() {
        let g = DirectedGraph::new(5, vec![(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let c = CycleFrame::fundamental(&g);
        assert_eq!(g.betti(), 0);
        assert_eq!(c.matrix().shape(), (4, 0));
    }

    #[test]
    fn complete_graph_frame_is_annihilated() {
        let g = complete_graph(4);
        let c = CycleFrame::fundamental(&g);
        assert_eq!(c.betti(), 3);
        assert_eq!(g.coboundary().transpose() * c.matrix(), DMatrix::zeros(4, 3));
    }

    #[test]
    fn json_round_trip_keeps_orientation() {
        let g = diamond().flip_edge(2);
        let back = DirectedGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.edge(2), (2, 1));
    }

    #[test]
    fn json_reports_bad_graph() {
        let err = DirectedGraph::from_json(r#"{"n": 2, "edges": [[0, 0]]}"#).unwrap_err();
        assert!(err.to_string().contains("self-loop"));
    }

    #[test]
    fn from_matrix_rejects_non_cycles() {
        let g = diamond();
        let bad = DMatrix::from_column_slice(5, 2, &[1., 0., 0., 0., 0., 0., 0., 1., 0., 0.]);
        assert!(CycleFrame::from_matrix(&g, bad).is_err());
    }
}
