//! Non-uniform Kuramoto networks
//!
//! ```text
//! γ_r dθ_r/dt = ω_r + Σ_{s~r} a_rs sin(θ_s - θ_r)
//! ```
//!
//! Fixed points are located by damped multistart Newton in the frame rotating
//! with the synchronous drift `Ω = Σω / Σγ`. Stability follows from where
//! the known zero eigenvector `v_r = √γ_r` of `H = Γ^{-1/2} L Γ^{-1/2}` sits in
//! the spectrum, which the oscillation identity reads off from the edge signs
//! and a 2-by-2 (in general β-by-β) intersection form.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Hypothesis, Result};
use crate::graph::{CycleFrame, DirectedGraph, GraphFile};
use crate::linalg::{self, Inertia, Tolerances};
use crate::nodal::{self, PhiForm, SupportedMatrix};

pub const NEWTON_MAX_ITER: usize = 200;
pub const NEWTON_TOL: f64 = 1e-12;
/// Max-norm torus distance below which two gauge-fixed roots coincide.
pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct KuramotoSystem {
    graph: DirectedGraph,
    couplings: Vec<f64>,
    omega: Vec<f64>,
    gamma: Vec<f64>,
    frame: Option<CycleFrame>,
}

/// Per-edge couplings either as a list or as a map from edge index to value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Couplings {
    List(Vec<f64>),
    Map(std::collections::BTreeMap<String, f64>),
}

/// JSON form: `{"graph": {..}, "a": [..] | {"0": .., ..}, "omega": [..], "gamma": [..]}`.
/// A missing `a` means unit couplings. `frame` optionally lists the cycles
/// (rows of `Cᵀ`) used for the intersection form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub graph: GraphFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Couplings>,
    pub omega: Vec<f64>,
    pub gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

/// Builds a frame from rows of `Cᵀ`.
pub fn frame_from_rows(g: &DirectedGraph, rows: &[Vec<f64>]) -> Result<CycleFrame> {
    CycleFrame::from_rows(g, rows)
}

impl KuramotoSystem {
    pub fn new(
        graph: DirectedGraph,
        couplings: Vec<f64>,
        omega: Vec<f64>,
        gamma: Vec<f64>,
    ) -> Result<Self> {
        let (n, e) = (graph.n_vertices(), graph.n_edges());
        for (len, expected) in [(couplings.len(), e), (omega.len(), n), (gamma.len(), n)] {
            if len != expected {
                return Err(Error::DimensionMismatch { expected, got: len });
            }
        }
        if let Some(i) = couplings.iter().position(|&a| a.is_nan() || a <= 0.0) {
            return Err(Error::InvalidGraph(format!("coupling on edge {i} must be positive")));
        }
        if let Some(i) = gamma.iter().position(|&g| g.is_nan() || g <= 0.0) {
            return Err(Error::InvalidGraph(format!("damping gamma[{i}] must be positive")));
        }
        Ok(KuramotoSystem { graph, couplings, omega, gamma, frame: None })
    }

    /// Uses `frame` instead of the BFS fundamental cycles for intersection forms.
    pub fn with_frame(mut self, frame: CycleFrame) -> Result<Self> {
        if frame.matrix().nrows() != self.graph.n_edges() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.n_edges(),
                got: frame.matrix().nrows(),
            });
        }
        self.frame = Some(frame);
        Ok(self)
    }

    pub fn from_file(file: SystemFile) -> Result<Self> {
        let graph = DirectedGraph::try_from(file.graph)?;
        let e = graph.n_edges();
        let couplings = match file.a {
            None => vec![1.0; e],
            Some(Couplings::List(v)) => v,
            Some(Couplings::Map(map)) => {
                let mut v = vec![f64::NAN; e];
                for (key, value) in map {
                    let i: usize = key.parse().map_err(|_| {
                        Error::InvalidGraph(format!("coupling key {key:?} is not an edge index"))
                    })?;
                    if i >= e {
                        return Err(Error::InvalidGraph(format!("coupling key {i} out of range")));
                    }
                    v[i] = value;
                }
                v
            }
        };
        let frame = file.frame.as_deref().map(|rows| frame_from_rows(&graph, rows)).transpose()?;
        let mut sys = KuramotoSystem::new(graph, couplings, file.omega, file.gamma)?;
        sys.frame = frame;
        Ok(sys)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn n(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn frame(&self) -> CycleFrame {
        self.frame.clone().unwrap_or_else(|| CycleFrame::fundamental(&self.graph))
    }

    /// Synchronous frequency `Σω / Σγ`.
    pub fn drift(&self) -> f64 {
        self.omega.iter().sum::<f64>() / self.gamma.iter().sum::<f64>()
    }

    /// Rotating-frame right-hand side `ω_r - γ_r Ω + Σ a_rs sin(θ_s - θ_r)`.
    pub fn residual(&self, theta: &[f64]) -> Vec<f64> {
        let drift = self.drift();
        let mut f: Vec<f64> =
            self.omega.iter().zip(&self.gamma).map(|(w, g)| w - g * drift).collect();
        for (e, &(r, s)) in self.graph.edges().iter().enumerate() {
            let flow = self.couplings[e] * (theta[s] - theta[r]).sin();
            f[r] += flow;
            f[s] -= flow;
        }
        f
    }

    /// `L_rs = a_rs cos(θ_s - θ_r)` off the diagonal, zero row sums.
    pub fn laplacian_jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut l = DMatrix::zeros(n, n);
        for (e, &(r, s)) in self.graph.edges().iter().enumerate() {
            let w = self.couplings[e] * (theta[s] - theta[r]).cos();
            l[(r, s)] = w;
            l[(s, r)] = w;
            l[(r, r)] -= w;
            l[(s, s)] -= w;
        }
        l
    }
}

/// `(L, Γ^{-1/2} L Γ^{-1/2})` at `theta`.
pub fn jacobian(sys: &KuramotoSystem, theta: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let l = sys.laplacian_jacobian(theta);
    let inv_sqrt: Vec<f64> = sys.gamma.iter().map(|g| 1.0 / g.sqrt()).collect();
    let h = DMatrix::from_fn(l.nrows(), l.ncols(), |r, c| inv_sqrt[r] * l[(r, c)] * inv_sqrt[c]);
    (l, h)
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    /// Phases wrapped to `(-π, π]` with `θ₀ = 0`.
    pub theta: Vec<f64>,
    /// Max-norm of the rotating-frame residual.
    pub residual: f64,
    pub jacobian_l: DMatrix<f64>,
    pub symmetrized: DMatrix<f64>,
}

impl FixedPoint {
    pub fn at(sys: &KuramotoSystem, theta: &[f64]) -> Self {
        let theta = gauge_fix(theta);
        let residual = max_abs(&sys.residual(&theta));
        let (jacobian_l, symmetrized) = jacobian(sys, &theta);
        FixedPoint { theta, residual, jacobian_l, symmetrized }
    }
}

fn wrap(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Translates so `θ₀ = 0`, then wraps to `(-π, π]`.
pub fn gauge_fix(theta: &[f64]) -> Vec<f64> {
    let t0 = theta[0];
    theta.iter().map(|t| wrap(t - t0)).collect()
}

/// Max over vertices of the circular distance, for gauge-fixed inputs.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| wrap(x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped Newton on vertices `1..n` with `θ₀` pinned at 0. Returns the
/// converged phases or `None`.
pub fn newton(sys: &KuramotoSystem, start: &[f64]) -> Option<Vec<f64>> {
    let n = sys.n();
    let mut theta = start.to_vec();
    theta[0] = 0.0;
    let mut f = sys.residual(&theta);
    let mut norm = max_abs(&f);
    for _ in 0..NEWTON_MAX_ITER {
        if norm < NEWTON_TOL {
            return Some(theta);
        }
        if n == 1 {
            return None;
        }
        let l = sys.laplacian_jacobian(&theta);
        let reduced = l.view((1, 1), (n - 1, n - 1)).into_owned();
        let rhs = -DVector::from_iterator(n - 1, f[1..].iter().copied());
        let step = reduced.lu().solve(&rhs)?;
        if !step.iter().all(|x| x.is_finite()) {
            return None;
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = std::iter::once(0.0)
                .chain(theta[1..].iter().zip(step.iter()).map(|(a, d)| a + t * d))
                .collect();
            let ft = sys.residual(&trial);
            let nt = max_abs(&ft);
            if nt < norm || t < 1e-9 {
                if nt >= norm {
                    return None;
                }
                theta = trial;
                f = ft;
                norm = nt;
                break;
            }
            t *= 0.5;
        }
    }
    (norm < NEWTON_TOL).then_some(theta)
}

/// Newton from `n_starts` uniform random phase vectors, deduplicated modulo
/// translation and sorted lexicographically. Deterministic in `(seed, n_starts)`.
pub fn find_fixed_points(sys: &KuramotoSystem, n_starts: usize, seed: u64) -> Vec<FixedPoint> {
    let n = sys.n();
    let mut roots: Vec<Vec<f64>> = (0..n_starts)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let start: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            newton(sys, &start).map(|t| gauge_fix(&t))
        })
        .collect();
    roots.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        if kept.iter().all(|k| torus_distance(k, &r) >= DEDUP_TOL) {
            kept.push(r);
        }
    }
    kept.iter().map(|t| FixedPoint::at(sys, t)).collect()
}

/// Linear stability of a fixed point read off from the oscillation identity.
///
/// `intersection_form` is `Cᵀ D⁻¹ C` with `D_(r->s) = ψ_r H_rs ψ_s = L_rs`,
/// i.e. the form of `-H` at the zero eigenvalue; it is positive definite
/// at a stable fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    /// Position of 0 in the ascending spectrum of `H`.
    pub k: usize,
    /// Edges with `H_rs > 0`.
    pub nodal_count: usize,
    /// `n₋(intersection_form)`, the nodal surplus of the zero mode of `-H`.
    pub surplus: i64,
    pub betti: usize,
    pub intersection_form: Vec<Vec<f64>>,
    pub inertia: Inertia,
    /// The identity's prediction agrees with a direct eigenvalue count.
    pub theorem_holds: bool,
    pub theta_star: Vec<f64>,
    pub unstable_dim: usize,
    pub stable_mod_symmetry: bool,
    /// `ν + 1 < n`: instability follows from the edge signs alone.
    pub necessarily_unstable: bool,
    /// Number of positive eigenvalues of `H`, counted directly.
    pub eigencount_unstable_dim: usize,
}

pub fn classify(sys: &KuramotoSystem, fp: &FixedPoint, tol: Tolerances) -> Result<StabilityVerdict> {
    let g = &sys.graph;
    let n = sys.n();
    for &(r, s) in g.edges() {
        if (fp.theta[s] - fp.theta[r]).cos().abs() <= tol.entry_tol {
            return Err(Error::HypothesisViolation { k: 0, hypothesis: Hypothesis::VanishingCosine });
        }
    }
    let h = &fp.symmetrized;
    let values = linalg::symmetric_eigenvalues(h);
    let norm = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let (zero_idx, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty spectrum");
    let gap = tol.gap_tol * norm.max(f64::MIN_POSITIVE);
    if !linalg::is_simple_at(&values, zero_idx, gap) {
        return Err(Error::HypothesisViolation { k: 0, hypothesis: Hypothesis::ZeroNotSimple });
    }
    let zero_scale = tol.zero_tol * norm.max(1.0);
    let eigencount_unstable_dim = values.iter().filter(|&&v| v > zero_scale).count();

    let psi: Vec<f64> = sys.gamma.iter().map(|g| g.sqrt()).collect();
    let plus = SupportedMatrix::with_entry_tol(g.clone(), h.clone(), 0.0)?;
    let minus = SupportedMatrix::with_entry_tol(g.clone(), -h, 0.0)?;
    let nu = nodal::count_sign_changes(&plus, &psi);

    let c = sys.frame();
    let beta = c.betti();
    // D = Φ of -H at ψ; its negative entries are the edges with H_rs < 0.
    let d = PhiForm::from_vector(&minus, &psi);
    let form = nodal::intersection_form(&d, &c);
    let inertia = linalg::inertia(&form, tol.zero_tol)?;

    // Position of 0 in the spectrum of -H, counted from the bottom.
    let k_reversed = (d.n_minus() + 1).saturating_sub(inertia.n_minus).max(1);
    let unstable_dim = (k_reversed - 1).min(n - 1);
    let k = n - unstable_dim;
    // Same count through the form of H itself, whose negative index is n₊(form).
    let k_direct = nu as i64 + 1 - inertia.n_plus as i64;
    let theorem_holds = inertia.n_zero == 0
        && k_direct == k as i64
        && eigencount_unstable_dim == unstable_dim
        && d.n_minus() >= inertia.n_minus;

    Ok(StabilityVerdict {
        k,
        nodal_count: nu,
        surplus: inertia.n_minus as i64,
        betti: beta,
        intersection_form: nodal::rows_of(&form),
        inertia,
        theorem_holds,
        theta_star: fp.theta.clone(),
        unstable_dim,
        stable_mod_symmetry: k == n,
        necessarily_unstable: nu + 1 < n,
        eigencount_unstable_dim,
    })
}

/// Both sides of `n₊(L) = n₋(D) - n₊(-Cᵀ D⁻¹ C)`, `D_(s->t) = L_st`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdfCheck {
    pub n_plus_l: usize,
    pub n_minus_d: usize,
    pub n_plus_neg_form: usize,
    pub holds: bool,
}

pub fn bdf_check(l: &DMatrix<f64>, g: &DirectedGraph, c: &CycleFrame, zero_tol: f64) -> Result<BdfCheck> {
    let n = g.n_vertices();
    if l.nrows() != n || l.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: l.nrows() });
    }
    let scale = l.amax().max(1.0);
    let row_sums = l * DVector::from_element(n, 1.0);
    if row_sums.amax() > 1e-10 * scale {
        return Err(Error::KernelMismatch(format!(
            "L·1 has max entry {:.3e}",
            row_sums.amax()
        )));
    }
    let l_inertia = linalg::inertia(l, zero_tol)?;
    if l_inertia.n_zero != 1 {
        return Err(Error::KernelMismatch(format!("kernel has dimension {}", l_inertia.n_zero)));
    }
    let diag: Vec<f64> = g.edges().iter().map(|&(s, t)| l[(s, t)]).collect();
    if let Some(e) = diag.iter().position(|&x| x.abs() <= zero_tol * scale) {
        let (s, t) = g.edge(e);
        return Err(Error::NotStrictlySupported { r: s, s: t, value: diag[e] });
    }
    let d = PhiForm { diag, k: None, psi: vec![1.0; n] };
    let form = nodal::intersection_form(&d, c);
    let neg = linalg::inertia(&(-form), zero_tol)?;
    let n_minus_d = d.n_minus();
    Ok(BdfCheck {
        n_plus_l: l_inertia.n_plus,
        n_minus_d,
        n_plus_neg_form: neg.n_plus,
        holds: l_inertia.n_plus as i64 == n_minus_d as i64 - neg.n_plus as i64,
    })
}

/// `L = -Ψ (H - λ) Ψ`, which has `1` in its kernel when `Hψ = λψ`.
pub fn conjugated_laplacian(h: &DMatrix<f64>, psi: &[f64], lambda: f64) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(n, n, |r, c| {
        let shifted = if r == c { h[(r, c)] - lambda } else { h[(r, c)] };
        -psi[r] * shifted * psi[c]
    })
}
