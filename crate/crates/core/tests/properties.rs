mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nodal_core::graph::{CycleFrame, SpanningTree};
use nodal_core::kuramoto::{self, KuramotoSystem};
use nodal_core::magnetic::{self, PhasePoint};
use nodal_core::nodal::{self, PhiForm};
use nodal_core::{linalg, random, Error, SupportedMatrix, Tolerances};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tol() -> Tolerances {
    Tolerances::default()
}

/// A random invertible `b x b` matrix, well away from singular.
fn invertible(r: &mut ChaCha8Rng, b: usize) -> DMatrix<f64> {
    loop {
        let t = random::dense(r, b, b);
        let sv = t.singular_values();
        if sv.min() > 0.1 * sv.max() {
            return t;
        }
    }
}

/// Admissible eigenpairs whose form inertia is unambiguous, with their forms.
fn generic_pairs(m: &SupportedMatrix, c: &CycleFrame) -> Vec<(usize, PhiForm)> {
    let Ok(eig) = m.eigensystem(tol()) else { return Vec::new() };
    (1..=eig.len())
        .filter(|&k| eig.admissible(k))
        .filter_map(|k| {
            let phi = nodal::phi_form(m, &eig, k).ok()?;
            linalg::inertia(&nodal::intersection_form(&phi, c), tol().zero_tol).ok()?;
            Some((k, phi))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frames_annihilate_coboundary(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random::graph_with_betti(&mut r, 2, 10, 0..=5);
        let c = CycleFrame::fundamental(&g);
        let d = g.coboundary();
        prop_assert!((c.matrix().transpose() * &d).amax() < 1e-12);
        prop_assert_eq!(c.betti(), g.n_edges() + 1 - g.n_vertices());
        prop_assert_eq!(linalg::numerical_rank(&d, 1e-10), g.n_vertices() - 1);
        prop_assert_eq!(linalg::numerical_rank(c.matrix(), 1e-10), c.betti());
    }

    #[test]
    fn inertia_does_not_depend_on_frame(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random::instance(&mut r, 8, 1..=4);
        let g = m.graph().clone();
        let base = CycleFrame::fundamental(&g);
        let mut order: Vec<usize> = (0..g.n_edges()).collect();
        order.shuffle(&mut r);
        let other_tree = CycleFrame::from_tree(&g, &SpanningTree::from_edge_order(&g, &order));
        let t = invertible(&mut r, base.betti());
        let mixed = CycleFrame::from_matrix(&g, base.matrix() * t).unwrap();
        for (k, phi) in generic_pairs(&m, &base) {
            let reference = linalg::inertia(&nodal::intersection_form(&phi, &base), tol().zero_tol).unwrap();
            for c in [&other_tree, &mixed] {
                if let Ok(i) = linalg::inertia(&nodal::intersection_form(&phi, c), tol().zero_tol) {
                    prop_assert_eq!(i.triple(), reference.triple(), "k = {}", k);
                }
            }
        }
    }

    #[test]
    fn congruence_preserves_inertia(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let h = random::symmetric(&mut r, n);
        let s = invertible(&mut r, n);
        let moved = linalg::symmetrize(&(s.transpose() * &h * &s));
        if let (Ok(a), Ok(b)) = (linalg::inertia(&h, 1e-8), linalg::inertia(&moved, 1e-8)) {
            prop_assert_eq!(a.triple(), b.triple());
        }
    }

    #[test]
    fn haynsworth_is_additive(seed in any::<u64>(), n in 2usize..9) {
        let mut r = rng(seed);
        let h = random::symmetric(&mut r, n);
        let split = r.random_range(1..n);
        match linalg::haynsworth_check(&h, split, 1e-8) {
            Ok(rep) => prop_assert!(rep.additive(), "{:?}", rep),
            Err(Error::SingularPivotBlock(_)) | Err(Error::AmbiguousInertia { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn orientation_does_not_matter(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random::instance(&mut r, 8, 1..=3);
        let e = r.random_range(0..m.graph().n_edges());
        let flipped = m.flip_edge(e);
        let (Ok(a), Ok(b)) = (m.eigensystem(tol()), flipped.eigensystem(tol())) else {
            return Ok(());
        };
        for k in (1..=a.len()).filter(|&k| a.admissible(k)) {
            let ra = nodal::verify_main_theorem(&m, k, tol());
            let rb = nodal::verify_main_theorem(&flipped, k, tol());
            if let (Ok(ra), Ok(rb)) = (ra, rb) {
                prop_assert_eq!(ra.nodal_count, rb.nodal_count);
                prop_assert_eq!(ra.inertia.triple(), rb.inertia.triple());
                prop_assert!(ra.theorem_holds && rb.theorem_holds);
            }
            prop_assert!(b.admissible(k));
        }
    }

    #[test]
    fn two_cycle_determinant_expands_over_spanning_trees(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random::instance(&mut r, 7, 2..=2);
        let g = m.graph();
        let c = CycleFrame::fundamental(g);
        let trees = common::spanning_trees(g);
        for (k, phi) in generic_pairs(&m, &c) {
            // Cauchy–Binet: each spanning tree contributes the product of 1/Φ
            // over its complement, since fundamental cycles are unimodular.
            let terms: Vec<f64> = trees
                .iter()
                .map(|t| {
                    (0..g.n_edges())
                        .filter(|e| !t.contains(e))
                        .map(|e| 1.0 / phi.diag[e])
                        .product()
                })
                .collect();
            let expansion: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            let det = nodal::intersection_form(&phi, &c).determinant();
            prop_assert!((det - expansion).abs() <= 1e-9 * scale, "k = {}: {} vs {}", k, det, expansion);
        }
    }

    #[test]
    fn trees_have_no_surplus(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random::instance(&mut r, 9, 0..=0);
        let eig = m.eigensystem(tol()).unwrap();
        for k in (1..=eig.len()).filter(|&k| eig.admissible(k)) {
            prop_assert_eq!(nodal::nodal_count(&m, &eig, k).unwrap(), k - 1);
        }
    }

    #[test]
    fn gauge_transformations_preserve_spectrum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random::instance(&mut r, 8, 1..=3);
        let alpha = PhasePoint::new(random::phases(&mut r, m.graph().n_edges()));
        let theta = random::phases(&mut r, m.n());
        let a = magnetic::magnetic_spectrum(&m, &alpha).unwrap();
        let b = magnetic::magnetic_spectrum(&m, &alpha.shifted_by_gradient(&m, &theta)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn real_point_is_critical(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random::instance(&mut r, 8, 1..=3);
        let eig = m.eigensystem(tol()).unwrap();
        let alpha = PhasePoint::new(random::phases(&mut r, m.graph().n_edges()));
        let step = 1e-4;
        let moved = magnetic::magnetic_spectrum(&m, &alpha.scaled(step)).unwrap();
        for k in (1..=eig.len()).filter(|&k| eig.admissible(k)) {
            let psi = eig.vector(k);
            let dh = magnetic::first_derivative(&m, &psi, &alpha);
            let rayleigh: f64 = psi.iter().zip(&dh).map(|(a, b)| a * b).sum();
            prop_assert!(rayleigh.abs() < 1e-12 * eig.norm.max(1.0));
            // First-order change vanishes: the shift is O(step²).
            let shift = (moved[k - 1] - eig.value(k)).abs();
            prop_assert!(shift < 1e-5, "k = {}: shift {}", k, shift);
        }
    }

    #[test]
    fn kuramoto_verdicts_are_consistent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random::graph_with_betti(&mut r, 3, 6, 1..=3);
        let couplings = (0..g.n_edges()).map(|_| r.random_range(0.5..2.0)).collect();
        let mut omega: Vec<f64> = (0..g.n_vertices()).map(|_| r.random_range(-0.3..0.3)).collect();
        let mean = omega.iter().sum::<f64>() / omega.len() as f64;
        omega.iter_mut().for_each(|w| *w -= mean);
        let gamma = (0..g.n_vertices()).map(|_| r.random_range(0.5..2.0)).collect();
        let sys = KuramotoSystem::new(g.clone(), couplings, omega, gamma).unwrap();
        let n = sys.n();
        let beta = g.betti();
        for fp in kuramoto::find_fixed_points(&sys, 40, seed) {
            prop_assert!(sys.residual(&fp.theta).iter().all(|x| x.abs() < 1e-8));
            let Ok(v) = kuramoto::classify(&sys, &fp, tol()) else { continue };
            prop_assert!(v.theorem_holds, "{:?}", v);
            let values = linalg::symmetric_eigenvalues(&fp.symmetrized);
            let below = values.iter().filter(|&&x| x < -1e-8).count();
            prop_assert_eq!(v.k, below + 1);
            prop_assert_eq!(v.stable_mod_symmetry, v.eigencount_unstable_dim == 0);
            if v.necessarily_unstable || (v.nodal_count + beta) < n {
                prop_assert!(!v.stable_mod_symmetry);
            }
            let check = kuramoto::bdf_check(&fp.jacobian_l, &g, &sys.frame(), tol().zero_tol).unwrap();
            prop_assert!(check.holds);
            prop_assert_eq!(check.n_plus_l, v.unstable_dim);
        }
    }
}
