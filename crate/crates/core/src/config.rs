use std::sync::atomic::{AtomicUsize, Ordering};

/// Numerical tolerances used across all modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// L2-norm and trace deviation bound.
    pub norm_tol: f64,
    /// Operator property checks (unitarity, hermiticity), Frobenius norm.
    pub op_tol: f64,
    /// Allowed negative eigenvalue magnitude for density matrices.
    pub psd_tol: f64,
    /// Eigendecomposition reconstruction bound.
    pub eig_tol: f64,
    /// Eigenvalue gap below which two levels join one degeneracy block.
    pub degen_tol: f64,
    /// Class-label comparison bound.
    pub label_tol: f64,
    /// Norm below which a superposition counts as the null vector.
    pub null_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm_tol: 1e-12,
            op_tol: 1e-10,
            psd_tol: 1e-9,
            eig_tol: 1e-9,
            degen_tol: 1e-8,
            label_tol: 1e-9,
            null_tol: 1e-12,
        }
    }
}

pub const DEFAULT_MAX_DIM: usize = 4096;

static MAX_DIM: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_DIM);

/// Current cap on total Hilbert-space dimension.
pub fn max_dim() -> usize {
    MAX_DIM.load(Ordering::Relaxed)
}

/// Override the dimension cap (e.g. from the `QD_MAX_DIM` environment variable).
pub fn set_max_dim(dim: usize) {
    MAX_DIM.store(dim.max(1), Ordering::Relaxed);
}
