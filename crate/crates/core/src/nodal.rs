//! Nodal counts and the weighted cycle intersection form.
//!
//! For an eigenpair `(λ_k, ψ)` of a matrix `H` strictly supported on a graph,
//! `Φ` is the diagonal edge matrix with `Φ_(r->s) = -ψ_r H_rs ψ_s`. The nodal
//! count `ν = #{(r->s) : ψ_r H_rs ψ_s > 0} = n₋(Φ)` satisfies
//!
//! ```text
//! ν = k - 1 + n₋(Cᵀ Φ⁻¹ C)
//! ```
//!
//! for any frame `C` of the cycle space, provided `λ_k` is simple and `ψ` has
//! no zero entries. This module computes every term of that identity and
//! checks it along two independent routes: the inertia of the bordered
//! matrix `[[Φ, C], [Cᵀ, 0]]`, and the splitting `R^E = Φ⁻¹Z ⊕ dR^V`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Hypothesis, Result};
use crate::graph::{CycleFrame, DirectedGraph, GraphFile};
use crate::linalg::{self, EigenSystem, Inertia, Tolerances};

/// Real symmetric matrix together with the graph it is strictly supported on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct SupportedMatrix {
    h: DMatrix<f64>,
    graph: DirectedGraph,
}

/// JSON form: `{"graph": {"n": .., "edges": [..]}, "matrix": [[..], ..]}`,
/// the matrix dense and row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub graph: GraphFile,
    pub matrix: Vec<Vec<f64>>,
    /// Optional cycle frame as rows of `Cᵀ`; the BFS fundamental cycles otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl TryFrom<MatrixFile> for SupportedMatrix {
    type Error = Error;

    fn try_from(file: MatrixFile) -> Result<Self> {
        let graph = DirectedGraph::try_from(file.graph)?;
        let n = graph.n_vertices();
        if file.matrix.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: file.matrix.len() });
        }
        for row in &file.matrix {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        let h = DMatrix::from_fn(n, n, |r, c| file.matrix[r][c]);
        SupportedMatrix::new(graph, h)
    }
}

impl From<SupportedMatrix> for MatrixFile {
    fn from(m: SupportedMatrix) -> Self {
        let n = m.h.nrows();
        MatrixFile {
            matrix: (0..n).map(|r| (0..n).map(|c| m.h[(r, c)]).collect()).collect(),
            graph: m.graph.into(),
            frame: None,
            notes: None,
        }
    }
}

/// A supported matrix with the frame to use for intersection forms.
#[derive(Debug, Clone)]
pub struct Instance {
    pub matrix: SupportedMatrix,
    pub frame: CycleFrame,
    pub notes: Option<String>,
}

impl Instance {
    pub fn new(matrix: SupportedMatrix) -> Self {
        let frame = CycleFrame::fundamental(matrix.graph());
        Instance { matrix, frame, notes: None }
    }

    pub fn with_frame(matrix: SupportedMatrix, frame: CycleFrame) -> Result<Self> {
        if frame.matrix().nrows() != matrix.graph().n_edges() {
            return Err(Error::DimensionMismatch {
                expected: matrix.graph().n_edges(),
                got: frame.matrix().nrows(),
            });
        }
        Ok(Instance { matrix, frame, notes: None })
    }

    pub fn from_file(mut file: MatrixFile) -> Result<Self> {
        let rows = file.frame.take();
        let notes = file.notes.take();
        let matrix = SupportedMatrix::try_from(file)?;
        let frame = match rows {
            Some(rows) => CycleFrame::from_rows(matrix.graph(), &rows)?,
            None => CycleFrame::fundamental(matrix.graph()),
        };
        Ok(Instance { matrix, frame, notes })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    /// Serializes matrix, frame and notes.
    pub fn to_file(&self) -> MatrixFile {
        let mut file = MatrixFile::from(self.matrix.clone());
        file.frame = Some(self.frame.rows());
        file.notes = self.notes.clone();
        file
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("matrix serialization cannot fail")
    }
}

impl SupportedMatrix {
    /// Checks shape, symmetry and strict support with the default entry tolerance.
    pub fn new(graph: DirectedGraph, h: DMatrix<f64>) -> Result<Self> {
        Self::with_entry_tol(graph, h, linalg::DEFAULT_ENTRY_TOL)
    }

    /// Strict support means `|h_rs| > entry_tol` exactly on edges.
    pub fn with_entry_tol(graph: DirectedGraph, h: DMatrix<f64>, entry_tol: f64) -> Result<Self> {
        let n = graph.n_vertices();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.nrows().max(h.ncols()) });
        }
        let defect = linalg::symmetry_defect(&h);
        if defect > 1e-12 * h.amax().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        for r in 0..n {
            for s in r + 1..n {
                let value = h[(r, s)];
                if (value.abs() > entry_tol) != graph.has_edge(r, s) {
                    return Err(Error::NotStrictlySupported { r, s, value });
                }
            }
        }
        Ok(SupportedMatrix { h, graph })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serialization cannot fail")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    /// Entry `H_rs` along the stored orientation of edge `e`.
    pub fn edge_weight(&self, e: usize) -> f64 {
        let (r, s) = self.graph.edge(e);
        self.h[(r, s)]
    }

    /// Same matrix on the graph with edge `e` reversed.
    pub fn flip_edge(&self, e: usize) -> Self {
        SupportedMatrix { h: self.h.clone(), graph: self.graph.flip_edge(e) }
    }

    pub fn eigensystem(&self, tol: Tolerances) -> Result<EigenSystem> {
        linalg::eigensystem(&self.h, tol)
    }

    /// Standard (unweighted) Laplacian `D - A` of `graph`.
    pub fn laplacian(graph: &DirectedGraph) -> Self {
        let n = graph.n_vertices();
        let mut h = DMatrix::zeros(n, n);
        for &(r, s) in graph.edges() {
            h[(r, s)] = -1.0;
            h[(s, r)] = -1.0;
            h[(r, r)] += 1.0;
            h[(s, s)] += 1.0;
        }
        SupportedMatrix { h, graph: graph.clone() }
    }
}

/// Diagonal of `Φ` for one eigenvector, indexed by edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiForm {
    pub diag: Vec<f64>,
    /// 1-based eigen index when built from an [`EigenSystem`].
    pub k: Option<usize>,
    pub psi: Vec<f64>,
}

impl PhiForm {
    /// `Φ` for an arbitrary vertex vector `psi`; no eigen-hypotheses are checked.
    pub fn from_vector(m: &SupportedMatrix, psi: &[f64]) -> Self {
        let diag = m
            .graph
            .edges()
            .iter()
            .map(|&(r, s)| -psi[r] * m.h[(r, s)] * psi[s])
            .collect();
        PhiForm { diag, k: None, psi: psi.to_vec() }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag))
    }

    pub fn inverse_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.diag.len(),
            self.diag.iter().map(|x| 1.0 / x),
        ))
    }

    /// Number of negative diagonal entries.
    pub fn n_minus(&self) -> usize {
        self.diag.iter().filter(|&&x| x < 0.0).count()
    }

    /// Copy with the sign of entry `e` reversed; used for fault injection.
    pub fn with_flipped_entry(&self, e: usize) -> Self {
        let mut out = self.clone();
        out.diag[e] = -out.diag[e];
        out
    }
}

fn check_eigenpair(eig: &EigenSystem, k: usize) -> Result<()> {
    if k == 0 || k > eig.len() {
        return Err(Error::IndexOutOfRange { k, n: eig.len() });
    }
    if !eig.simple[k - 1] {
        return Err(Error::HypothesisViolation { k, hypothesis: Hypothesis::Simple });
    }
    if !eig.nonvanishing[k - 1] {
        return Err(Error::HypothesisViolation { k, hypothesis: Hypothesis::Nonvanishing });
    }
    Ok(())
}

/// `Φ` for the `k`-th (1-based) eigenpair, which must be simple and nonvanishing.
pub fn phi_form(m: &SupportedMatrix, eig: &EigenSystem, k: usize) -> Result<PhiForm> {
    check_eigenpair(eig, k)?;
    let mut phi = PhiForm::from_vector(m, &eig.vector(k));
    phi.k = Some(k);
    Ok(phi)
}

/// Edges `(r->s)` with `ψ_r H_rs ψ_s > 0`, counted directly.
pub fn count_sign_changes(m: &SupportedMatrix, psi: &[f64]) -> usize {
    m.graph
        .edges()
        .iter()
        .filter(|&&(r, s)| psi[r] * m.h[(r, s)] * psi[s] > 0.0)
        .count()
}

/// Nodal count of the `k`-th eigenvector; cross-checked against `n₋(Φ)`.
pub fn nodal_count(m: &SupportedMatrix, eig: &EigenSystem, k: usize) -> Result<usize> {
    let phi = phi_form(m, eig, k)?;
    let direct = count_sign_changes(m, &phi.psi);
    if direct != phi.n_minus() {
        return Err(Error::Internal(format!(
            "edge enumeration gives {direct} but n₋(Φ) = {}",
            phi.n_minus()
        )));
    }
    Ok(direct)
}

/// Weighted cycle intersection form `Cᵀ Φ⁻¹ C`.
pub fn intersection_form(phi: &PhiForm, c: &CycleFrame) -> DMatrix<f64> {
    let cm = c.matrix();
    let mut scaled = cm.clone();
    for (e, mut row) in scaled.row_iter_mut().enumerate() {
        row /= phi.diag[e];
    }
    linalg::symmetrize(&(cm.transpose() * scaled))
}

/// Outcome of checking `ν = k - 1 + n₋(Cᵀ Φ⁻¹ C)` for one eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalReport {
    pub k: usize,
    pub nodal_count: usize,
    pub surplus: i64,
    pub betti: usize,
    pub intersection_form: Vec<Vec<f64>>,
    pub inertia: Inertia,
    pub theorem_holds: bool,
}

impl NodalReport {
    pub fn form_matrix(&self) -> DMatrix<f64> {
        let b = self.intersection_form.len();
        DMatrix::from_fn(b, b, |r, c| self.intersection_form[r][c])
    }
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Assembles a report from an already computed `Φ` (possibly tampered with).
pub fn report_from_phi(
    k: usize,
    nodal_count: usize,
    phi: &PhiForm,
    c: &CycleFrame,
    zero_tol: f64,
) -> Result<NodalReport> {
    let form = intersection_form(phi, c);
    let inertia = linalg::inertia(&form, zero_tol)?;
    let surplus = nodal_count as i64 - (k as i64 - 1);
    let betti = c.betti();
    let theorem_holds = inertia.n_zero == 0
        && surplus == inertia.n_minus as i64
        && (0..=betti as i64).contains(&surplus);
    Ok(NodalReport {
        k,
        nodal_count,
        surplus,
        betti,
        intersection_form: rows_of(&form),
        inertia,
        theorem_holds,
    })
}

/// Checks the oscillation identity for the `k`-th eigenpair using the BFS frame.
pub fn verify_main_theorem(m: &SupportedMatrix, k: usize, tol: Tolerances) -> Result<NodalReport> {
    let eig = m.eigensystem(tol)?;
    verify_with(m, &eig, k, &CycleFrame::fundamental(m.graph()), tol)
}

/// As [`verify_main_theorem`] with a precomputed eigensystem and frame.
pub fn verify_with(
    m: &SupportedMatrix,
    eig: &EigenSystem,
    k: usize,
    c: &CycleFrame,
    tol: Tolerances,
) -> Result<NodalReport> {
    let nu = nodal_count(m, eig, k)?;
    let phi = phi_form(m, eig, k)?;
    report_from_phi(k, nu, &phi, c, tol.zero_tol)
}

/// Frobenius norm of `d* Φ d - Ψ (H - λ_k) Ψ`.
pub fn funny_product_residual(m: &SupportedMatrix, eig: &EigenSystem, k: usize) -> Result<f64> {
    let phi = phi_form(m, eig, k)?;
    let d = m.graph.coboundary();
    let lhs = d.transpose() * phi.matrix() * &d;
    let psi = DMatrix::from_diagonal(&DVector::from_column_slice(&phi.psi));
    let n = m.n();
    let shifted = &m.h - DMatrix::identity(n, n) * eig.value(k);
    let rhs = &psi * shifted * &psi;
    Ok((lhs - rhs).norm())
}

/// Bases of the two summands of `R^E = Φ⁻¹Z ⊕ dR^V`.
#[derive(Debug, Clone)]
pub struct GaugeSplit {
    /// `Φ⁻¹ C`, `|E| x β`.
    pub cycle_part: DMatrix<f64>,
    /// Columns `1..n` of the coboundary, `|E| x (n-1)`.
    pub exact_part: DMatrix<f64>,
    /// Smallest singular value of `[Φ⁻¹C | d']`.
    pub min_singular_value: f64,
    /// Condition number of the stacked basis.
    pub condition: f64,
}

impl GaugeSplit {
    pub fn dims(&self) -> (usize, usize) {
        (self.cycle_part.ncols(), self.exact_part.ncols())
    }

    pub fn stacked(&self) -> DMatrix<f64> {
        let rows = self.cycle_part.nrows();
        let (a, b) = self.dims();
        DMatrix::from_fn(rows, a + b, |r, c| {
            if c < a {
                self.cycle_part[(r, c)]
            } else {
                self.exact_part[(r, c - a)]
            }
        })
    }

    /// Largest `|Φ[dθ, Φ⁻¹γ]|` over basis pairs; zero when `Φ` is block diagonal.
    pub fn cross_term(&self, phi: &PhiForm) -> f64 {
        if self.cycle_part.ncols() == 0 || self.exact_part.ncols() == 0 {
            return 0.0;
        }
        (self.exact_part.transpose() * phi.matrix() * &self.cycle_part).amax()
    }
}

pub fn cdv_gauge_split(phi: &PhiForm, c: &CycleFrame, g: &DirectedGraph) -> Result<GaugeSplit> {
    if phi.diag.len() != g.n_edges() {
        return Err(Error::DimensionMismatch { expected: g.n_edges(), got: phi.diag.len() });
    }
    let cycle_part = phi.inverse_matrix() * c.matrix();
    let d = g.coboundary();
    let exact_part = d.columns(1, g.n_vertices() - 1).into_owned();
    let mut split = GaugeSplit { cycle_part, exact_part, min_singular_value: 0.0, condition: 0.0 };
    let stacked = split.stacked();
    if stacked.ncols() != g.n_edges() {
        return Err(Error::DimensionMismatch { expected: g.n_edges(), got: stacked.ncols() });
    }
    if stacked.ncols() > 0 {
        let sv = stacked.singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        split.min_singular_value = lo;
        split.condition = hi / lo;
        if lo <= 1e-10 * hi {
            return Err(Error::SplitDegenerate(lo));
        }
    }
    Ok(split)
}

/// Inertias along the bordered-matrix route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderedRoute {
    /// Inertia of `M = [[Φ, C], [Cᵀ, 0]]`.
    pub bordered: Inertia,
    /// `In(M) = In(Φ) + In(-Cᵀ Φ⁻¹ C)`.
    pub schur: linalg::HaynsworthReport,
    /// `ν - (n₋(M) - β)`.
    pub surplus: i64,
}

pub fn bordered_matrix(phi: &PhiForm, c: &CycleFrame) -> DMatrix<f64> {
    let e = phi.diag.len();
    let b = c.betti();
    let mut m = DMatrix::zeros(e + b, e + b);
    for i in 0..e {
        m[(i, i)] = phi.diag[i];
    }
    m.view_mut((0, e), (e, b)).copy_from(c.matrix());
    m.view_mut((e, 0), (b, e)).copy_from(&c.matrix().transpose());
    m
}

pub fn bordered_route(phi: &PhiForm, c: &CycleFrame, zero_tol: f64) -> Result<BorderedRoute> {
    let m = bordered_matrix(phi, c);
    let bordered = linalg::inertia(&m, zero_tol)?;
    let schur = linalg::haynsworth_check(&m, phi.diag.len(), zero_tol)?;
    let surplus = phi.n_minus() as i64 - (bordered.n_minus as i64 - c.betti() as i64);
    Ok(BorderedRoute { bordered, schur, surplus })
}

/// Inertias along the gauge-splitting route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingRoute {
    pub phi: Inertia,
    /// `[Φ]` compressed to `dR^V`.
    pub exact_block: Inertia,
    /// `[Φ]` compressed to `Φ⁻¹Z`.
    pub cycle_block: Inertia,
    /// `[Φ⁻¹ Φ Φ⁻¹]` compressed to `Z`.
    pub pulled_back: Inertia,
    pub cross_term: f64,
    pub surplus: i64,
}

impl SplittingRoute {
    /// `n₋(Φ) = n₋([Φ]_dR^V) + n₋([Φ]_Φ⁻¹Z)` and the pulled-back block agrees.
    pub fn consistent(&self) -> bool {
        self.phi.n_minus == self.exact_block.n_minus + self.cycle_block.n_minus
            && self.cycle_block.triple() == self.pulled_back.triple()
    }
}

pub fn splitting_route(
    phi: &PhiForm,
    c: &CycleFrame,
    g: &DirectedGraph,
    zero_tol: f64,
) -> Result<SplittingRoute> {
    let split = cdv_gauge_split(phi, c, g)?;
    let phi_m = phi.matrix();
    let phi_inv = phi.inverse_matrix();
    let exact_block = linalg::inertia(&linalg::compression(&phi_m, &split.exact_part)?, zero_tol)?;
    let cycle_block = linalg::inertia(&linalg::compression(&phi_m, &split.cycle_part)?, zero_tol)?;
    let pulled = &phi_inv * &phi_m * &phi_inv;
    let pulled_back = linalg::inertia(&linalg::compression(&pulled, c.matrix())?, zero_tol)?;
    Ok(SplittingRoute {
        phi: linalg::inertia(&phi_m, zero_tol)?,
        exact_block,
        cycle_block,
        pulled_back,
        cross_term: split.cross_term(phi),
        surplus: cycle_block.n_minus as i64,
    })
}

/// Every check available for one eigenpair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullVerification {
    pub report: NodalReport,
    pub funny_product_residual: f64,
    pub bordered: BorderedRoute,
    pub splitting: SplittingRoute,
    /// All route identities hold and every surplus agrees.
    pub consistent: bool,
}

pub fn verify_all_routes(
    m: &SupportedMatrix,
    eig: &EigenSystem,
    k: usize,
    c: &CycleFrame,
    tol: Tolerances,
) -> Result<FullVerification> {
    let report = verify_with(m, eig, k, c, tol)?;
    let phi = phi_form(m, eig, k)?;
    let residual = funny_product_residual(m, eig, k)?;
    let bordered = bordered_route(&phi, c, tol.zero_tol)?;
    let splitting = splitting_route(&phi, c, m.graph(), tol.zero_tol)?;
    let beta = c.betti();
    let consistent = report.theorem_holds
        && residual <= 1e-10 * eig.norm.max(1.0)
        && bordered.bordered.n_minus == k - 1 + beta
        && bordered.bordered.n_zero == 0
        && bordered.schur.additive()
        && splitting.consistent()
        && splitting.exact_block.n_minus == k - 1
        && splitting.exact_block.n_zero == 0
        && bordered.surplus == report.surplus
        && splitting.surplus == report.surplus;
    Ok(FullVerification { report, funny_product_residual: residual, bordered, splitting, consistent })
}
