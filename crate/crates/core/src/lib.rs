//! Numerical toolkit for phase-averaged (non-dynamical) decoherence studies:
//! dense complex algebra over tensor-product spaces, commutant membership and
//! state equivalence classes, random-phase dephasing with Born-rule
//! extraction, and a set of worked measurement models.

pub mod config;
pub mod dephasing;
pub mod error;
pub mod exchange;
pub mod linalg;
pub mod models;
pub mod quotient;

pub use config::{max_dim, set_max_dim, Tolerances, DEFAULT_MAX_DIM};
pub use error::{QdError, Result};
pub use linalg::{
    hermitian_eig, matrix_exp, partial_trace, C64, CMatrix, CVector, DensityMatrix, Operator,
    OperatorKind, StateVector,
};
pub use quotient::{ClassLabel, GroupingMode, ObservableSpec};
