//! Dense hermitian eigenvalue utilities: inertia with explicit tolerances,
//! compressions to subspaces and Schur-complement inertia additivity.
//!
//! Everything here works on small dense matrices (dimension up to a few
//! hundred). Inertia is always read off the eigenvalues.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Zero-detection threshold relative to `max(1, ‖m‖₂)`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
/// Simplicity threshold relative to `‖H‖₂`.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
/// Absolute threshold on entries of unit eigenvectors.
pub const DEFAULT_ENTRY_TOL: f64 = 1e-8;

/// Relative asymmetry tolerated by [`inertia`].
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub gap_tol: f64,
    pub entry_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero_tol: DEFAULT_ZERO_TOL,
            gap_tol: DEFAULT_GAP_TOL,
            entry_tol: DEFAULT_ENTRY_TOL,
        }
    }
}

/// Counts of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inertia {
    #[serde(rename = "minus")]
    pub n_minus: usize,
    #[serde(rename = "zero")]
    pub n_zero: usize,
    #[serde(rename = "plus")]
    pub n_plus: usize,
    #[serde(default, skip_serializing)]
    pub tolerance: f64,
}

impl Inertia {
    /// Classifies `values` against `±tol·max(1, max|λ|)`. Values within a factor
    /// 10 of the threshold are reported as [`Error::AmbiguousInertia`].
    pub fn from_eigenvalues(values: &[f64], tol: f64) -> Result<Self> {
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let threshold = tol * scale;
        let mut out = Inertia { n_minus: 0, n_zero: 0, n_plus: 0, tolerance: tol };
        for &v in values {
            let a = v.abs();
            if a > threshold / 10.0 && a < threshold * 10.0 {
                return Err(Error::AmbiguousInertia { value: v, threshold });
            }
            if a <= threshold {
                out.n_zero += 1;
            } else if v < 0.0 {
                out.n_minus += 1;
            } else {
                out.n_plus += 1;
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }

    pub fn triple(&self) -> (usize, usize, usize) {
        (self.n_minus, self.n_zero, self.n_plus)
    }

    /// Inertia of the negated matrix.
    pub fn negated(&self) -> Self {
        Inertia { n_minus: self.n_plus, n_plus: self.n_minus, ..*self }
    }
}

impl std::ops::Add for Inertia {
    type Output = Inertia;

    fn add(self, rhs: Inertia) -> Inertia {
        Inertia {
            n_minus: self.n_minus + rhs.n_minus,
            n_zero: self.n_zero + rhs.n_zero,
            n_plus: self.n_plus + rhs.n_plus,
            tolerance: self.tolerance,
        }
    }
}

/// Largest entrywise `|m - mᵀ|`.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Largest entrywise `|m - m*|`.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::DimensionMismatch { expected: rows, got: cols });
    }
    Ok(())
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Ascending eigenvalues of a complex hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Inertia of a real symmetric matrix.
pub fn inertia(m: &DMatrix<f64>, tol: f64) -> Result<Inertia> {
    check_square(m.nrows(), m.ncols())?;
    let defect = symmetry_defect(m);
    if defect > HERMITIAN_TOL * m.amax().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Inertia::from_eigenvalues(&symmetric_eigenvalues(m), tol)
}

/// Inertia of a complex hermitian matrix.
pub fn inertia_hermitian(m: &DMatrix<Complex64>, tol: f64) -> Result<Inertia> {
    check_square(m.nrows(), m.ncols())?;
    let scale = m.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    Inertia::from_eigenvalues(&hermitian_eigenvalues(m), tol)
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn orthonormal_range(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| top > 0.0 && s > rel_tol * top)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Compression `U* T U` of `t` to the column space of `frame`, with `U` an
/// orthonormal basis of that space.
pub fn compression(t: &DMatrix<f64>, frame: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(t.nrows(), t.ncols())?;
    if frame.nrows() != t.nrows() {
        return Err(Error::DimensionMismatch { expected: t.nrows(), got: frame.nrows() });
    }
    let u = orthonormal_range(frame, 1e-10);
    if u.ncols() < frame.ncols() {
        return Err(Error::RankDeficientFrame { rank: u.ncols(), cols: frame.ncols() });
    }
    let c = u.transpose() * t * &u;
    Ok(symmetrize(&c))
}

/// `(m + mᵀ)/2`; removes rounding asymmetry of congruences.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaynsworthReport {
    pub whole: Inertia,
    pub pivot: Inertia,
    pub schur: Inertia,
}

impl HaynsworthReport {
    /// `In(H) = In(A) + In(D - C* A⁻¹ C)` in all three counts.
    pub fn additive(&self) -> bool {
        (self.pivot + self.schur).triple() == self.whole.triple()
    }
}

/// Inertias of `h`, of its leading `split x split` block `A` and of the Schur
/// complement `D - C* A⁻¹ C`.
pub fn haynsworth_check(h: &DMatrix<f64>, split: usize, tol: f64) -> Result<HaynsworthReport> {
    check_square(h.nrows(), h.ncols())?;
    let n = h.nrows();
    if split > n {
        return Err(Error::DimensionMismatch { expected: n, got: split });
    }
    let a = h.view((0, 0), (split, split)).into_owned();
    let c = h.view((0, split), (split, n - split)).into_owned();
    let d = h.view((split, split), (n - split, n - split)).into_owned();

    let a_values = symmetric_eigenvalues(&a);
    let a_scale = a_values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let a_min = a_values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if split > 0 && a_min <= tol * a_scale {
        return Err(Error::SingularPivotBlock(a_min));
    }
    let a_inv = a.clone().try_inverse().ok_or(Error::SingularPivotBlock(a_min))?;
    let schur = symmetrize(&(d - c.transpose() * a_inv * &c));

    Ok(HaynsworthReport {
        whole: inertia(h, tol)?,
        pivot: Inertia::from_eigenvalues(&a_values, tol)?,
        schur: inertia(&schur, tol)?,
    })
}

/// Ascending eigenpairs of a real symmetric matrix with per-pair flags for the
/// hypotheses of the oscillation identity.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns; the first entry exceeding `entry_tol`
    /// in magnitude is positive.
    pub vectors: DMatrix<f64>,
    pub simple: Vec<bool>,
    pub nonvanishing: Vec<bool>,
    /// `‖H‖₂`.
    pub norm: f64,
    pub tolerances: Tolerances,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvector of the 1-based index `k`.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k - 1).iter().copied().collect()
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// Both flags hold for the 1-based index `k`.
    pub fn admissible(&self, k: usize) -> bool {
        self.simple[k - 1] && self.nonvanishing[k - 1]
    }
}

/// Whether the `k`-th (0-based) of the sorted `values` is separated from its
/// neighbours by more than `gap`.
pub fn is_simple_at(values: &[f64], i: usize, gap: f64) -> bool {
    let below = i == 0 || values[i] - values[i - 1] > gap;
    let above = i + 1 >= values.len() || values[i + 1] - values[i] > gap;
    below && above
}

pub fn eigensystem(h: &DMatrix<f64>, tol: Tolerances) -> Result<EigenSystem> {
    check_square(h.nrows(), h.ncols())?;
    let n = h.nrows();
    let defect = symmetry_defect(h);
    if defect > HERMITIAN_TOL * h.amax().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    if n == 0 {
        return Ok(EigenSystem {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
            simple: vec![],
            nonvanishing: vec![],
            norm: 0.0,
            tolerances: tol,
        });
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        v /= v.norm();
        if let Some(first) = v.iter().find(|x| x.abs() > tol.entry_tol) {
            if *first < 0.0 {
                v = -v;
            }
        }
        vectors.set_column(col, &v);
    }
    let norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gap = tol.gap_tol * norm.max(f64::MIN_POSITIVE);
    let simple = (0..n).map(|i| is_simple_at(&values, i, gap)).collect();
    let nonvanishing = (0..n)
        .map(|i| vectors.column(i).iter().all(|x| x.abs() > tol.entry_tol))
        .collect();
    Ok(EigenSystem { values, vectors, simple, nonvanishing, norm, tolerances: tol })
}
