//! Built-in worked examples. The JSON files under `fixtures/` at the workspace
//! root hold the same data.

use nalgebra::DMatrix;

use crate::graph::{cycle_graph, CycleFrame, DirectedGraph};
use crate::kuramoto::KuramotoSystem;
use crate::nodal::{Instance, SupportedMatrix};

/// Diamond graph: two triangles sharing the edge `1 - 2`, with an indefinite
/// weighting. Every eigenvalue is simple and every eigenvector nonvanishing.
///
/// Frame column 1 is the triangle `1 -> 2 -> 3`, column 2 the triangle
/// `0 -> 1 -> 2`. With this frame and eigenvectors scaled so that the entry at
/// [`DIAMOND_PINNED_VERTEX`] is 1, the intersection forms are [`DIAMOND_FORMS`].
pub fn diamond() -> Instance {
    let g = DirectedGraph::new(4, vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
        .expect("diamond is a valid graph");
    #[rustfmt::skip]
    let h = DMatrix::from_row_slice(4, 4, &[
        -1.0,  2.0,  2.0,  0.0,
         2.0,  2.0, -1.0, -1.0,
         2.0, -1.0, -1.0,  4.0,
         0.0, -1.0,  4.0, -3.0,
    ]);
    let m = SupportedMatrix::new(g.clone(), h).expect("diamond weights are supported");
    let frame = CycleFrame::from_rows(
        &g,
        &[vec![0.0, 0.0, 1.0, -1.0, 1.0], vec![1.0, -1.0, 1.0, 0.0, 0.0]],
    )
    .expect("diamond frame is a cycle basis");
    Instance::with_frame(m, frame).expect("frame matches the graph")
}

/// Expected `(ν, surplus)` for `k = 1..=4` on [`diamond`].
pub const DIAMOND_COUNTS: [(usize, usize); 4] = [(1, 1), (1, 0), (3, 1), (4, 1)];

/// Vertex whose eigenvector entry is scaled to 1 in [`DIAMOND_FORMS`].
pub const DIAMOND_PINNED_VERTEX: usize = 3;

/// Reference intersection forms on [`diamond`], two decimals; see [`diamond`]
/// for the eigenvector scaling they assume.
pub const DIAMOND_FORMS: [[[f64; 2]; 2]; 4] = [
    [[2.38, 16.89], [16.89, 39.84]],
    [[2.86, 2.61], [2.61, 3.66]],
    [[1.03, 0.43], [0.43, 0.05]],
    [[-1.22, -0.47], [-0.47, 0.06]],
];

/// Two triangles joined by a bridge, with pendant edges at both ends.
/// The triangles share no edge, so the intersection form is diagonal.
pub fn figure_eight() -> Instance {
    let edges = vec![(0, 1), (1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 6), (6, 4), (6, 7)];
    let g = DirectedGraph::new(8, edges).expect("figure eight is a valid graph");
    let diag = [0.3, -0.7, 0.5, 1.1, -0.2, 0.8, -0.4, 0.6];
    let weights = [1.0, -1.3, 0.7, 1.6, -0.9, 1.2, -0.6, 1.4, 0.8];
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&diag));
    for (e, &(r, s)) in g.edges().iter().enumerate() {
        h[(r, s)] = weights[e];
        h[(s, r)] = weights[e];
    }
    let m = SupportedMatrix::new(g.clone(), h).expect("figure eight weights are supported");
    let mut left = vec![0.0; 9];
    let mut right = vec![0.0; 9];
    left[1..4].fill(1.0);
    right[5..8].fill(1.0);
    let frame = CycleFrame::from_rows(&g, &[left, right]).expect("triangles are cycles");
    Instance::with_frame(m, frame).expect("frame matches the graph")
}

/// Weighted tree on six vertices; every nodal count equals `k - 1`.
pub fn tree() -> Instance {
    let g = DirectedGraph::new(6, vec![(0, 1), (1, 2), (1, 3), (3, 4), (4, 5)])
        .expect("tree is a valid graph");
    let diag = [0.4, -0.3, 1.2, 0.1, -0.8, 0.5];
    let weights = [-1.1, 0.9, -1.7, 1.3, -0.6];
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&diag));
    for (e, &(r, s)) in g.edges().iter().enumerate() {
        h[(r, s)] = weights[e];
        h[(s, r)] = weights[e];
    }
    Instance::new(SupportedMatrix::new(g, h).expect("tree weights are supported"))
}

/// Standard Laplacian of the directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
pub fn cycle_laplacian(n: usize) -> Instance {
    let g = cycle_graph(n);
    let row = vec![1.0; n];
    let m = SupportedMatrix::laplacian(&g);
    let frame = CycleFrame::from_rows(&g, &[row]).expect("the whole cycle is a cycle");
    Instance::with_frame(m, frame).expect("frame matches the graph")
}

/// Seven oscillators on a triangle and a hexagon sharing the edge `1 -> 2`,
/// unit couplings.
pub fn kuramoto_example() -> KuramotoSystem {
    let edges = vec![(2, 0), (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)];
    let g = DirectedGraph::new(7, edges).expect("example graph is valid");
    let omega = vec![0.05, -0.09, 0.14, 0.15, -0.11, -0.10, -0.04];
    let gamma = vec![1.0, 0.5, 0.5, 2.0, 2.0, 2.0, 2.0];
    let frame = CycleFrame::from_rows(
        &g,
        &[
            vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        ],
    )
    .expect("triangle and hexagon are cycles");
    KuramotoSystem::new(g, vec![1.0; 8], omega, gamma)
        .and_then(|s| s.with_frame(frame))
        .expect("example parameters are valid")
}

/// Approximate locations (`θ_0 = 0`) of the three fixed points whose
/// reference intersection forms are known; Newton polishes them.
pub const KURAMOTO_POINTS: [[f64; 7]; 3] = [
    [0.0, -0.4022, 0.3484, 1.4317, 2.2552, -3.0242, -1.7911],
    [0.0, -2.3350, 0.7368, 1.3824, 1.8510, 2.4474, -3.1127],
    [0.0, -2.4630, 2.5257, 1.9737, 1.2336, 0.6339, -2.0247],
];

/// Reference intersection forms at [`KURAMOTO_POINTS`], two decimals.
pub const KURAMOTO_FORMS: [[[f64; 2]; 2]; 3] = [
    [[3.52, 1.37], [1.37, 15.39]],
    [[-1.10, -1.00], [-1.00, 5.32]],
    [[1.15, 3.66], [3.66, 7.38]],
];

/// Expected `(ν, k)` at [`KURAMOTO_POINTS`].
pub const KURAMOTO_COUNTS: [(usize, usize); 3] = [(8, 7), (6, 6), (5, 5)];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Tolerances;

    #[test]
    fn builtins_construct() {
        assert_eq!(diamond().frame.betti(), 2);
        assert_eq!(figure_eight().frame.betti(), 2);
        assert_eq!(tree().frame.betti(), 0);
        assert_eq!(cycle_laplacian(5).frame.betti(), 1);
        assert_eq!(kuramoto_example().frame().betti(), 2);
    }

    #[test]
    fn figure_eight_and_tree_are_generic() {
        for inst in [figure_eight(), tree()] {
            let eig = inst.matrix.eigensystem(Tolerances::default()).unwrap();
            assert!((1..=eig.len()).all(|k| eig.admissible(k)));
        }
    }

    #[test]
    fn fixture_files_match_builtins() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let cases = [
            ("diamond.json", diamond()),
            ("figure_eight.json", figure_eight()),
            ("tree.json", tree()),
            ("c5_laplacian.json", cycle_laplacian(5)),
        ];
        for (name, built) in cases {
            let text = std::fs::read_to_string(dir.join(name)).unwrap();
            let loaded = Instance::from_json(&text).unwrap();
            assert_eq!(loaded.matrix.matrix(), built.matrix.matrix(), "{name}");
            assert_eq!(loaded.matrix.graph().edges(), built.matrix.graph().edges(), "{name}");
            assert_eq!(loaded.frame.matrix(), built.frame.matrix(), "{name}");
        }
        let text = std::fs::read_to_string(dir.join("kuramoto_example.json")).unwrap();
        let sys = KuramotoSystem::from_json(&text).unwrap();
        let built = kuramoto_example();
        assert_eq!(sys.graph().edges(), built.graph().edges());
        assert_eq!(sys.omega(), built.omega());
        assert_eq!(sys.gamma(), built.gamma());
        assert_eq!(sys.couplings(), built.couplings());
        assert_eq!(sys.frame().matrix(), built.frame().matrix());
    }
}
