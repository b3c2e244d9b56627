use thiserror::Error;

/// Which hypothesis of the oscillation identity an eigenpair (or fixed point) fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// The eigenvalue is not separated from its neighbours by more than `gap_tol`.
    Simple,
    /// Some eigenvector entry is below `entry_tol` in magnitude.
    Nonvanishing,
    /// An edge weight of the matrix vanishes (or an off-edge entry does not).
    StrictSupport,
    /// The intersection form is numerically singular.
    NonsingularForm,
    /// Zero is not a simple eigenvalue of a Kuramoto Jacobian.
    ZeroNotSimple,
    /// `cos(θ_s − θ_r)` vanishes on some edge at a fixed point.
    VanishingCosine,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Hypothesis::Simple => "simple",
            Hypothesis::Nonvanishing => "nonvanishing",
            Hypothesis::StrictSupport => "strict_support",
            Hypothesis::NonsingularForm => "nonsingular_form",
            Hypothesis::ZeroNotSimple => "zero_not_simple",
            Hypothesis::VanishingCosine => "vanishing_cosine",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("matrix is not strictly supported on the graph: entry ({r}, {s}) = {value:.3e}")]
    NotStrictlySupported { r: usize, s: usize, value: f64 },

    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("ambiguous inertia: eigenvalue {value:.3e} is within a factor 10 of the threshold {threshold:.3e}")]
    AmbiguousInertia { value: f64, threshold: f64 },

    #[error("frame is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficientFrame { rank: usize, cols: usize },

    #[error("pivot block is singular (min |eigenvalue| {0:.3e})")]
    SingularPivotBlock(f64),

    #[error("eigenpair {k}: hypothesis violated: {hypothesis}")]
    HypothesisViolation { k: usize, hypothesis: Hypothesis },

    #[error("gauge split is degenerate (smallest singular value {0:.3e})")]
    SplitDegenerate(f64),

    #[error("eigenvalue {k} is degenerate at grid point {index}")]
    DegenerateAtPoint { k: usize, index: usize },

    #[error("eigenvalue {0} is degenerate near the origin")]
    DegenerateNearZero(usize),

    #[error("kernel of L is not spanned by the constant vector: {0}")]
    KernelMismatch(String),

    #[error("eigen index {k} out of range 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
