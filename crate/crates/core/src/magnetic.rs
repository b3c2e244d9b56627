//! Phase (magnetic) perturbations `(H_α)_rs = e^{iα_rs} H_rs` and the Hessian
//! of `Λ(α) = λ_k(H_α)` at `α = 0`.
//!
//! `Λ` depends on `α` only through its fluxes `α·C` around the cycles of a
//! frame `C`. In those coordinates the Hessian at the origin is
//! `HESSIAN_SCALE · (Cᵀ Φ⁻¹ C)⁻¹` for a unit eigenvector, and its Morse index
//! equals the nodal surplus `ν - (k - 1)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Hypothesis, Result};
use crate::graph::CycleFrame;
use crate::linalg::{self, Complex64, Inertia, Tolerances};
use crate::nodal::{self, PhiForm, SupportedMatrix};

/// Factor between the flux-coordinate Hessian and `(Cᵀ Φ⁻¹ C)⁻¹`.
///
/// Calibrated against central differences of `λ₁` for the cycle Laplacian,
/// whose closed form `2 - 2cos(t/n)` has curvature `2/n²` while
/// `(Cᵀ Φ⁻¹ C)⁻¹ = 1/n²` for the unit ground state.
pub const HESSIAN_SCALE: f64 = 2.0;

/// Default central-difference step, in radians of flux.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// A 1-cochain: one phase per edge, read along the stored orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhasePoint {
    pub alpha: Vec<f64>,
}

impl PhasePoint {
    pub fn zero(n_edges: usize) -> Self {
        PhasePoint { alpha: vec![0.0; n_edges] }
    }

    pub fn new(alpha: Vec<f64>) -> Self {
        PhasePoint { alpha }
    }

    /// Fluxes `α·C` with respect to `c`.
    pub fn fluxes(&self, c: &CycleFrame) -> FluxCoordinates {
        let a = DVector::from_column_slice(&self.alpha);
        let f = c.matrix().transpose() * a;
        FluxCoordinates { fluxes: f.iter().copied().collect() }
    }

    /// `α + dθ`.
    pub fn shifted_by_gradient(&self, m: &SupportedMatrix, theta: &[f64]) -> Self {
        let alpha = m
            .graph()
            .edges()
            .iter()
            .zip(&self.alpha)
            .map(|(&(r, s), a)| a + theta[s] - theta[r])
            .collect();
        PhasePoint { alpha }
    }

    pub fn scaled(&self, t: f64) -> Self {
        PhasePoint { alpha: self.alpha.iter().map(|a| a * t).collect() }
    }
}

/// Gauge-invariant coordinates `α·C ∈ R^β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxCoordinates {
    pub fluxes: Vec<f64>,
}

/// `H_α` as a complex hermitian matrix; `H_0 = H`.
pub fn magnetic_matrix(m: &SupportedMatrix, p: &PhasePoint) -> Result<DMatrix<Complex64>> {
    let g = m.graph();
    if p.alpha.len() != g.n_edges() {
        return Err(Error::DimensionMismatch { expected: g.n_edges(), got: p.alpha.len() });
    }
    let h = m.matrix();
    let mut out = h.map(|x| Complex64::new(x, 0.0));
    for (e, &(r, s)) in g.edges().iter().enumerate() {
        let phase = Complex64::from_polar(1.0, p.alpha[e]);
        out[(r, s)] = phase * h[(r, s)];
        out[(s, r)] = phase.conj() * h[(s, r)];
    }
    Ok(out)
}

/// Ascending spectrum of `H_α`.
pub fn magnetic_spectrum(m: &SupportedMatrix, p: &PhasePoint) -> Result<Vec<f64>> {
    Ok(linalg::hermitian_eigenvalues(&magnetic_matrix(m, p)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSample {
    pub lambda: f64,
    pub spectrum: Vec<f64>,
    /// `λ_k` is within `gap_tol·‖H‖` of a neighbour at this point.
    pub degenerate: bool,
}

fn check_index(m: &SupportedMatrix, k: usize) -> Result<()> {
    if k == 0 || k > m.n() {
        return Err(Error::IndexOutOfRange { k, n: m.n() });
    }
    Ok(())
}

fn sample(m: &SupportedMatrix, k: usize, p: &PhasePoint, gap: f64) -> Result<LambdaSample> {
    let spectrum = magnetic_spectrum(m, p)?;
    Ok(LambdaSample {
        lambda: spectrum[k - 1],
        degenerate: !linalg::is_simple_at(&spectrum, k - 1, gap),
        spectrum,
    })
}

fn gap_threshold(m: &SupportedMatrix, tol: &Tolerances) -> f64 {
    let norm = linalg::symmetric_eigenvalues(m.matrix())
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    tol.gap_tol * norm.max(f64::MIN_POSITIVE)
}

/// `Λ = λ_k(H_α)` (sorted index) at every grid point, evaluated in parallel.
/// Degenerate samples are flagged rather than rejected; see [`first_degenerate`].
pub fn lambda_surface(
    m: &SupportedMatrix,
    k: usize,
    grid: &[PhasePoint],
    tol: Tolerances,
) -> Result<Vec<LambdaSample>> {
    check_index(m, k)?;
    let gap = gap_threshold(m, &tol);
    grid.par_iter().map(|p| sample(m, k, p, gap)).collect()
}

/// [`Error::DegenerateAtPoint`] for the first flagged sample, if any.
pub fn first_degenerate(k: usize, samples: &[LambdaSample]) -> Result<()> {
    match samples.iter().position(|s| s.degenerate) {
        Some(index) => Err(Error::DegenerateAtPoint { k, index }),
        None => Ok(()),
    }
}

/// `(Cᵀ Φ⁻¹ C)⁻¹ Cᵀ Φ⁻¹`: maps fluxes `f` to the representative `fᵀ G ∈ Φ⁻¹Z`.
pub fn cdv_gauge_map(phi: &PhiForm, c: &CycleFrame) -> Result<DMatrix<f64>> {
    let form = nodal::intersection_form(phi, c);
    let inv = invert_form(&form, phi.k.unwrap_or(0))?;
    Ok(inv * c.matrix().transpose() * phi.inverse_matrix())
}

/// `(Cᵀ C)⁻¹ Cᵀ`: the minimum-norm representative of given fluxes.
pub fn least_squares_gauge_map(c: &CycleFrame) -> DMatrix<f64> {
    let cm = c.matrix();
    let gram = cm.transpose() * cm;
    let inv = gram.try_inverse().expect("frame has full column rank");
    inv * cm.transpose()
}

/// Phase cochain `fᵀ G` for fluxes `f` under gauge map `G` (`β x |E|`).
pub fn representative(gauge_map: &DMatrix<f64>, fluxes: &[f64]) -> PhasePoint {
    let f = DVector::from_column_slice(fluxes);
    let alpha = gauge_map.transpose() * f;
    PhasePoint { alpha: alpha.iter().copied().collect() }
}

fn invert_form(form: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    if form.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let values = linalg::symmetric_eigenvalues(form);
    let scale = values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let smallest = values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if smallest <= 1e-12 * scale {
        return Err(Error::HypothesisViolation { k, hypothesis: Hypothesis::NonsingularForm });
    }
    form.clone()
        .try_inverse()
        .ok_or(Error::HypothesisViolation { k, hypothesis: Hypothesis::NonsingularForm })
}

/// `HESSIAN_SCALE · (Cᵀ Φ⁻¹ C)⁻¹` for the unit `k`-th eigenvector.
pub fn analytic_hessian(
    m: &SupportedMatrix,
    k: usize,
    c: &CycleFrame,
    tol: Tolerances,
) -> Result<DMatrix<f64>> {
    let eig = m.eigensystem(tol)?;
    let phi = nodal::phi_form(m, &eig, k)?;
    let form = nodal::intersection_form(&phi, c);
    Ok(linalg::symmetrize(&(invert_form(&form, k)? * HESSIAN_SCALE)))
}

/// Second differences of `Λ` in flux coordinates through the gauge map `G`.
fn central_hessian(
    m: &SupportedMatrix,
    k: usize,
    gauge_map: &DMatrix<f64>,
    step: f64,
    gap: f64,
) -> Result<DMatrix<f64>> {
    let b = gauge_map.nrows();
    let eval = |f: &[f64]| -> Result<f64> {
        let s = sample(m, k, &representative(gauge_map, f), gap)?;
        if s.degenerate {
            return Err(Error::DegenerateNearZero(k));
        }
        Ok(s.lambda)
    };
    let unit = |i: usize, a: f64, j: usize, bb: f64| {
        let mut f = vec![0.0; b];
        f[i] += a;
        f[j] += bb;
        f
    };
    let centre = eval(&vec![0.0; b])?;
    let h = step;
    let mut out = DMatrix::zeros(b, b);
    for i in 0..b {
        let plus = eval(&unit(i, h, i, 0.0))?;
        let minus = eval(&unit(i, -h, i, 0.0))?;
        out[(i, i)] = (plus - 2.0 * centre + minus) / (h * h);
        for j in 0..i {
            let pp = eval(&unit(i, h, j, h))?;
            let pm = eval(&unit(i, h, j, -h))?;
            let mp = eval(&unit(i, -h, j, h))?;
            let mm = eval(&unit(i, -h, j, -h))?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Richardson-extrapolated central differences of `Λ` in flux coordinates,
/// sampling along CdV-gauge representatives.
pub fn finite_difference_hessian(
    m: &SupportedMatrix,
    k: usize,
    c: &CycleFrame,
    step: f64,
    tol: Tolerances,
) -> Result<DMatrix<f64>> {
    let eig = m.eigensystem(tol)?;
    let phi = nodal::phi_form(m, &eig, k)?;
    let map = cdv_gauge_map(&phi, c)?;
    finite_difference_hessian_with(m, k, &map, step, tol)
}

/// As [`finite_difference_hessian`] with an explicit gauge map. Any right
/// inverse of `Cᵀ` gives the same Hessian up to rounding.
pub fn finite_difference_hessian_with(
    m: &SupportedMatrix,
    k: usize,
    gauge_map: &DMatrix<f64>,
    step: f64,
    tol: Tolerances,
) -> Result<DMatrix<f64>> {
    check_index(m, k)?;
    let gap = gap_threshold(m, &tol);
    let coarse = central_hessian(m, k, gauge_map, step, gap)?;
    let fine = central_hessian(m, k, gauge_map, step / 2.0, gap)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Plain (non-extrapolated) central differences; exposed to check the `O(h²)` order.
pub fn central_difference_hessian(
    m: &SupportedMatrix,
    k: usize,
    gauge_map: &DMatrix<f64>,
    step: f64,
    tol: Tolerances,
) -> Result<DMatrix<f64>> {
    check_index(m, k)?;
    central_hessian(m, k, gauge_map, step, gap_threshold(m, &tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseCheck {
    pub k: usize,
    pub morse: usize,
    pub surplus: i64,
    pub agree: bool,
    pub hessian: Vec<Vec<f64>>,
    pub hessian_inertia: Inertia,
    pub hessian_scale: f64,
}

/// Morse index of the analytic Hessian against the nodal surplus.
pub fn morse_index_check(m: &SupportedMatrix, k: usize, tol: Tolerances) -> Result<MorseCheck> {
    let c = CycleFrame::fundamental(m.graph());
    let eig = m.eigensystem(tol)?;
    let nu = nodal::nodal_count(m, &eig, k)?;
    let hess = analytic_hessian(m, k, &c, tol)?;
    let hessian_inertia = linalg::inertia(&hess, tol.zero_tol)?;
    let surplus = nu as i64 - (k as i64 - 1);
    Ok(MorseCheck {
        k,
        morse: hessian_inertia.n_minus,
        surplus,
        agree: hessian_inertia.n_minus as i64 == surplus && hessian_inertia.n_zero == 0,
        hessian: nodal::rows_of(&hess),
        hessian_inertia,
        hessian_scale: HESSIAN_SCALE,
    })
}

/// `(d/dt)(H_{tα} ψ)` at `t = 0`, divided by `i`: `Σ_s H_rs α_rs ψ_s`.
pub fn first_derivative(m: &SupportedMatrix, psi: &[f64], p: &PhasePoint) -> Vec<f64> {
    let h = m.matrix();
    let mut out = vec![0.0; m.n()];
    for (e, &(r, s)) in m.graph().edges().iter().enumerate() {
        out[r] += h[(r, s)] * p.alpha[e] * psi[s];
        out[s] -= h[(s, r)] * p.alpha[e] * psi[r];
    }
    out
}

/// One row of a flux-grid export.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRow {
    pub fluxes: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub degenerate: bool,
    /// `Λ(0) + ½ fᵀ Hess f`, when a Hessian is available.
    pub quadratic: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    /// Flux axes (0-based) swept; other fluxes stay at zero.
    pub axes: Vec<usize>,
    pub counts: Vec<usize>,
    pub range: (f64, f64),
}

impl SurfaceGrid {
    /// Sweeps the first `min(β, 2)` flux axes with `nx` (and `ny`) points.
    pub fn new(betti: usize, nx: usize, ny: usize, range: (f64, f64)) -> Result<Self> {
        if betti == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if nx < 2 || (betti >= 2 && ny < 2) {
            return Err(Error::DimensionMismatch { expected: 2, got: nx.min(ny) });
        }
        if betti == 1 {
            Ok(SurfaceGrid { axes: vec![0], counts: vec![nx], range })
        } else {
            Ok(SurfaceGrid { axes: vec![0, 1], counts: vec![nx, ny], range })
        }
    }

    fn coordinate(&self, i: usize, count: usize) -> f64 {
        let (a, b) = self.range;
        a + (b - a) * i as f64 / (count - 1) as f64
    }

    /// Flux vectors in row-major order (last axis fastest).
    pub fn points(&self, betti: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        match self.counts.as_slice() {
            [nx] => {
                for i in 0..*nx {
                    let mut f = vec![0.0; betti];
                    f[self.axes[0]] = self.coordinate(i, *nx);
                    out.push(f);
                }
            }
            [nx, ny] => {
                for i in 0..*nx {
                    for j in 0..*ny {
                        let mut f = vec![0.0; betti];
                        f[self.axes[0]] = self.coordinate(i, *nx);
                        f[self.axes[1]] = self.coordinate(j, *ny);
                        out.push(f);
                    }
                }
            }
            _ => unreachable!("grids sweep one or two axes"),
        }
        out
    }
}

/// Spectra of `H_α` over a flux grid, using minimum-norm phase representatives.
/// `hessian` (in flux coordinates) enables the quadratic-model column.
pub fn surface(
    m: &SupportedMatrix,
    k: usize,
    c: &CycleFrame,
    grid: &SurfaceGrid,
    hessian: Option<&DMatrix<f64>>,
    tol: Tolerances,
) -> Result<Vec<SurfaceRow>> {
    check_index(m, k)?;
    let map = least_squares_gauge_map(c);
    let fluxes = grid.points(c.betti());
    let phases: Vec<PhasePoint> = fluxes.iter().map(|f| representative(&map, f)).collect();
    let samples = lambda_surface(m, k, &phases, tol)?;
    let base = linalg::symmetric_eigenvalues(m.matrix())[k - 1];
    Ok(fluxes
        .into_iter()
        .zip(samples)
        .map(|(f, s)| {
            let quadratic = hessian.map(|hs| {
                let v = DVector::from_column_slice(&f);
                base + 0.5 * v.dot(&(hs * &v))
            });
            SurfaceRow { fluxes: f, spectrum: s.spectrum, degenerate: s.degenerate, quadratic }
        })
        .collect())
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV header: `flux_1..flux_β, lambda_1..lambda_n, degenerate_flag[, quadratic_model]`.
pub fn surface_header(betti: usize, n: usize, with_quadratic: bool) -> String {
    let mut cols: Vec<String> = (1..=betti).map(|i| format!("flux_{i}")).collect();
    cols.extend((1..=n).map(|i| format!("lambda_{i}")));
    cols.push("degenerate_flag".into());
    if with_quadratic {
        cols.push("quadratic_model".into());
    }
    cols.join(",")
}

/// Writes rows with 17 significant digits per number.
pub fn write_surface_csv<W: Write>(mut w: W, rows: &[SurfaceRow]) -> std::io::Result<()> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    let with_quadratic = first.quadratic.is_some();
    writeln!(w, "{}", surface_header(first.fluxes.len(), first.spectrum.len(), with_quadratic))?;
    for row in rows {
        let mut cells: Vec<String> = row.fluxes.iter().map(|&x| fmt17(x)).collect();
        cells.extend(row.spectrum.iter().map(|&x| fmt17(x)));
        cells.push(if row.degenerate { "1".into() } else { "0".into() });
        if let Some(q) = row.quadratic {
            cells.push(fmt17(q));
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
