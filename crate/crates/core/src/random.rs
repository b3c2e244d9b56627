//! Random test instances: connected Erdős–Rényi graphs, strictly supported
//! weights, signed Laplacians and generic dense matrices.

use nalgebra::DMatrix;
use rand::Rng;

use crate::graph::DirectedGraph;
use crate::linalg;
use crate::nodal::SupportedMatrix;

/// `G(n, p)` conditioned on connectivity, each edge given a random orientation.
pub fn connected_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> DirectedGraph {
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push(if rng.random_bool(0.5) { (i, j) } else { (j, i) });
                }
            }
        }
        if let Ok(g) = DirectedGraph::new(n, edges) {
            return g;
        }
    }
}

/// Connected graph on `n_min..=n_max` vertices with first Betti number in `betti`.
pub fn graph_with_betti<R: Rng + ?Sized>(
    rng: &mut R,
    n_min: usize,
    n_max: usize,
    betti: std::ops::RangeInclusive<usize>,
) -> DirectedGraph {
    loop {
        let n = rng.random_range(n_min..=n_max);
        let p = rng.random_range(0.15..0.7);
        let g = connected_graph(rng, n, p);
        if betti.contains(&g.betti()) {
            return g;
        }
    }
}

/// `±U[0.5, 2]` on edges, `U[-1, 1]` on the diagonal.
pub fn supported_matrix<R: Rng + ?Sized>(rng: &mut R, g: &DirectedGraph) -> SupportedMatrix {
    let n = g.n_vertices();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = rng.random_range(-1.0..1.0);
    }
    for &(r, s) in g.edges() {
        let magnitude = rng.random_range(0.5..2.0);
        let w = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        h[(r, s)] = w;
        h[(s, r)] = w;
    }
    SupportedMatrix::new(g.clone(), h).expect("weights are bounded away from zero")
}

/// Random connected graph (`n ≤ n_max`, Betti number in `betti`) with random weights.
pub fn instance<R: Rng + ?Sized>(
    rng: &mut R,
    n_max: usize,
    betti: std::ops::RangeInclusive<usize>,
) -> SupportedMatrix {
    let g = graph_with_betti(rng, 3, n_max, betti);
    supported_matrix(rng, &g)
}

/// Symmetric `L` with `±U[0.5, 2]` edge weights and zero row sums, resampled
/// until its kernel is exactly `span(1)`.
pub fn signed_laplacian<R: Rng + ?Sized>(rng: &mut R, g: &DirectedGraph) -> DMatrix<f64> {
    loop {
        let n = g.n_vertices();
        let mut l = DMatrix::zeros(n, n);
        for &(r, s) in g.edges() {
            let magnitude = rng.random_range(0.5..2.0);
            let w = if rng.random_bool(0.5) { magnitude } else { -magnitude };
            l[(r, s)] = w;
            l[(s, r)] = w;
            l[(r, r)] -= w;
            l[(s, s)] -= w;
        }
        if let Ok(i) = linalg::inertia(&l, linalg::DEFAULT_ZERO_TOL) {
            if i.n_zero == 1 {
                return l;
            }
        }
    }
}

/// Symmetric matrix with i.i.d. `N`-ish entries (sum of uniforms).
pub fn symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    linalg::symmetrize(&(&a + a.transpose()))
}

pub fn dense<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `rows x cols` matrix of rank `rank` (generically).
pub fn low_rank<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, rank: usize) -> DMatrix<f64> {
    dense(rng, rows, rank) * dense(rng, rank, cols)
}

/// Random phase vector in `[-π, π)^len`.
pub fn phases<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}
