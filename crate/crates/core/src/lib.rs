//! Maximum-entropy inference of quantum states under generalized trace-form
//! entropies.
//!
//! A trace-form entropy is `S_f(rho) = Tr f(rho)` for a smooth concave `f`
//! with `f(0) = f(1) = 0`. This crate provides the scalar calculus for a few
//! entropy families ([`functional`]), dense complex Hermitian linear algebra
//! sized for few-qubit work ([`linalg`]), a dual Newton solver for the
//! constrained maximization of `S_f` ([`solver`]), and closed-form plus
//! numeric treatments of the two-qubit Bell-diagonal problem ([`bell`]).

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod bell;
pub mod functional;
pub mod linalg;
pub mod root;
pub mod solver;
pub mod validate;

pub use bell::{BellDiagonalState, BellRegime, BellReport};
pub use functional::{AdditivityClass, EntropicFunctional, Family, SlopeAtZero};
pub use linalg::{DensityOperator, HermitianMatrix};
pub use solver::{ConstraintSet, MaxEntSolution, SolverOptions};

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix deviates from Hermitian symmetry by {max_asym:e}")]
    NotHermitian { max_asym: f64 },
    #[error("dimension {dim} exceeds supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver failed to converge (off-diagonal norm {off:e})")]
    EighNoConvergence { off: f64 },
    #[error("spectrum has eigenvalue {value:e} below the PSD floor")]
    NegativeEigenvalue { value: f64 },
    #[error("trace is {trace}, expected 1 within 1e-10")]
    TraceNotOne { trace: f64 },
    #[error("basis columns deviate from orthonormality by {max_dev:e}")]
    BasisNotOrthonormal { max_dev: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("f''({p}) = {d2} >= 0; functional must be strictly concave on (0,1)")]
    NotConcave { p: f64, d2: f64 },
    #[error("f(0) and f(1) must vanish; got f(0)={at_zero:e}, f(1)={at_one:e}")]
    EndpointsNotZero { at_zero: f64, at_one: f64 },
    #[error("field value {h} lies below the slope range floor {lower}")]
    FieldOutOfRange { h: f64, lower: f64 },
    #[error("observables are linearly dependent (Gram min eigenvalue {min_eig:e})")]
    DependentObservables { min_eig: f64 },
    #[error("targets appear infeasible: residual stuck at {residual:e}")]
    Infeasible { residual: f64 },
    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    MaxIterations { iters: usize, residual: f64 },
    #[error("curvature matrix is singular even after regularization")]
    SingularCurvature,
    #[error("no sign change on [{lo}, {hi}]; root is not bracketed")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("matrix text row {row}: {detail}")]
    MatrixParse { row: usize, detail: String },
    #[error("cannot parse functional spec {spec:?}: {detail}")]
    FunctionalParse { spec: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
