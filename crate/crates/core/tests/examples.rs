use nodal_core::fixtures;
use nodal_core::magnetic::{self, PhasePoint, DEFAULT_FD_STEP};
use nodal_core::nodal::{self, PhiForm};
use nodal_core::selftest::{self, SelfTestConfig};
use nodal_core::{linalg, Instance, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn cycle_ground_state_curvature_is_two_over_n_squared() {
    for n in [3usize, 5] {
        let inst = fixtures::cycle_laplacian(n);
        let expected = 2.0 / (n * n) as f64;
        let analytic = magnetic::analytic_hessian(&inst.matrix, 1, &inst.frame, tol()).unwrap();
        assert!((analytic[(0, 0)] - expected).abs() < 1e-12, "C{n}: {analytic}");
        let fd = magnetic::finite_difference_hessian(&inst.matrix, 1, &inst.frame, DEFAULT_FD_STEP, tol())
            .unwrap();
        assert!((fd[(0, 0)] - expected).abs() < 1e-6 * expected, "C{n}: {fd}");
    }
}

#[test]
fn cycle_ground_state_follows_cosine_law() {
    for n in [3usize, 5] {
        let inst = fixtures::cycle_laplacian(n);
        let map = magnetic::least_squares_gauge_map(&inst.frame);
        for i in 0..=20 {
            let flux = -std::f64::consts::PI + i as f64 * std::f64::consts::PI / 10.0;
            let p = magnetic::representative(&map, &[flux]);
            let lowest = magnetic::magnetic_spectrum(&inst.matrix, &p).unwrap()[0];
            let closed = 2.0 - 2.0 * (flux / n as f64).cos();
            assert!((lowest - closed).abs() < 1e-12, "C{n}, flux {flux}");
        }
    }
}

#[test]
fn triangle_laplacian_forms() {
    let inst = fixtures::cycle_laplacian(3);
    let eig = inst.matrix.eigensystem(tol()).unwrap();
    let unit = nodal::phi_form(&inst.matrix, &eig, 1).unwrap();
    let form = nodal::intersection_form(&unit, &inst.frame);
    assert!((form[(0, 0)] - 9.0).abs() < 1e-12);
    let ones = PhiForm::from_vector(&inst.matrix, &[1.0; 3]);
    let form = nodal::intersection_form(&ones, &inst.frame);
    assert!((form[(0, 0)] - 3.0).abs() < 1e-12);
}

#[test]
fn central_differences_converge_at_second_order() {
    let inst = fixtures::diamond();
    let eig = inst.matrix.eigensystem(tol()).unwrap();
    for k in 1..=4 {
        let phi = nodal::phi_form(&inst.matrix, &eig, k).unwrap();
        let map = magnetic::cdv_gauge_map(&phi, &inst.frame).unwrap();
        let exact = magnetic::analytic_hessian(&inst.matrix, k, &inst.frame, tol()).unwrap();
        let err = |h: f64| {
            let fd = magnetic::central_difference_hessian(&inst.matrix, k, &map, h, tol()).unwrap();
            (fd - &exact).amax()
        };
        let ratio = err(0.04) / err(0.02);
        assert!((3.5..4.5).contains(&ratio), "k = {k}: error ratio {ratio}");
    }
}

#[test]
fn diamond_morse_indices_match_surplus() {
    let inst = fixtures::diamond();
    for (k, &(_, surplus)) in (1..=4).zip(&fixtures::DIAMOND_COUNTS) {
        let check = magnetic::morse_index_check(&inst.matrix, k, tol()).unwrap();
        assert!(check.agree);
        assert_eq!(check.morse, surplus);
    }
}

#[test]
fn figure_eight_form_is_diagonal() {
    let inst = fixtures::figure_eight();
    let eig = inst.matrix.eigensystem(tol()).unwrap();
    for k in 1..=eig.len() {
        let report = nodal::verify_all_routes(&inst.matrix, &eig, k, &inst.frame, tol()).unwrap();
        assert!(report.consistent, "k = {k}");
        let form = report.report.form_matrix();
        assert_eq!(form[(0, 1)], 0.0);
        assert_eq!(form[(1, 0)], 0.0);
    }
}

#[test]
fn tree_fixture_has_zero_surplus() {
    let inst = fixtures::tree();
    let eig = inst.matrix.eigensystem(tol()).unwrap();
    for k in 1..=eig.len() {
        let r = nodal::verify_with(&inst.matrix, &eig, k, &inst.frame, tol()).unwrap();
        assert_eq!((r.nodal_count, r.surplus, r.betti), (k - 1, 0, 0));
    }
    let hess = magnetic::analytic_hessian(&inst.matrix, 1, &inst.frame, tol()).unwrap();
    assert_eq!(hess.shape(), (0, 0));
}

#[test]
fn instance_json_round_trip() {
    let inst = fixtures::diamond();
    let back = Instance::from_json(&inst.to_json()).unwrap();
    assert_eq!(back.matrix.matrix(), inst.matrix.matrix());
    assert_eq!(back.frame.matrix(), inst.frame.matrix());
    assert_eq!(back.notes, inst.notes);
}

#[test]
fn gradient_phases_leave_spectrum_unchanged() {
    let inst = fixtures::diamond();
    let base = linalg::symmetric_eigenvalues(inst.matrix.matrix());
    let theta = [0.3, -1.2, 2.0, 0.7];
    let p = PhasePoint::zero(5).shifted_by_gradient(&inst.matrix, &theta);
    let moved = magnetic::magnetic_spectrum(&inst.matrix, &p).unwrap();
    for (a, b) in base.iter().zip(&moved) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn selftest_small_run_passes_every_suite() {
    let cfg = SelfTestConfig { instances: 40, ..SelfTestConfig::default() };
    let summary = selftest::run(&cfg);
    assert!(summary.all_passed(), "{}", summary.lines().join("\n"));
    assert!(summary.suites.iter().all(|s| s.passed > 0));
}

#[test]
fn bordered_route_counts_on_diamond() {
    let inst = fixtures::diamond();
    let eig = inst.matrix.eigensystem(tol()).unwrap();
    for k in 1..=4 {
        let phi = nodal::phi_form(&inst.matrix, &eig, k).unwrap();
        let bordered = nodal::bordered_matrix(&phi, &inst.frame);
        let i = linalg::inertia(&bordered, 1e-8).unwrap();
        assert_eq!((i.n_minus, i.n_zero), (k - 1 + 2, 0));
        assert_eq!(bordered.nrows(), 5 + 2);
    }
}
