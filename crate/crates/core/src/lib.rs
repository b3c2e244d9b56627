//! Nodal counts of eigenvectors of graph-supported symmetric matrices, the
//! weighted cycle intersection form that accounts for them, magnetic
//! perturbations and their Hessian, and stability of Kuramoto fixed points.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod kuramoto;
pub mod linalg;
pub mod magnetic;
pub mod nodal;
pub mod random;
pub mod selftest;

pub use nalgebra;

pub use error::{Error, Hypothesis, Result};
pub use graph::{CycleFrame, DirectedGraph, GraphFile, SpanningTree};
pub use kuramoto::{FixedPoint, KuramotoSystem, StabilityVerdict, SystemFile};
pub use linalg::{EigenSystem, Inertia, Tolerances};
pub use magnetic::{FluxCoordinates, MorseCheck, PhasePoint, SurfaceGrid, SurfaceRow};
pub use nodal::{FullVerification, Instance, MatrixFile, NodalReport, PhiForm, SupportedMatrix};
