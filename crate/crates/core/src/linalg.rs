//! Dense complex vector/matrix algebra over labeled tensor-product spaces.
//!
//! Basis ordering is row-major over subsystem indices: the leftmost
//! subsystem is the slowest-varying one, so for dims `[d0, d1]` the basis
//! state `|i0, i1>` sits at flat index `i0 * d1 + i1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::{max_dim, Tolerances};
use crate::error::{QdError, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const C_ZERO: C64 = Complex64::new(0.0, 0.0);
pub const C_ONE: C64 = Complex64::new(1.0, 0.0);
pub const C_I: C64 = Complex64::new(0.0, 1.0);

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(QdError::Shape("subsystem dimensions must be nonzero".into()));
    }
    let mut total: usize = 1;
    for &d in dims {
        total = total
            .checked_mul(d)
            .ok_or(QdError::Capacity { requested: usize::MAX, max: max_dim() })?;
    }
    if total > max_dim() {
        return Err(QdError::Capacity { requested: total, max: max_dim() });
    }
    Ok(total)
}

/// Normalized complex amplitude vector over a labeled tensor-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amplitudes: CVector) -> Result<Self> {
        let total = check_dims(&dims)?;
        if amplitudes.len() != total {
            return Err(QdError::Shape(format!(
                "amplitude length {} != product of dims {}",
                amplitudes.len(),
                total
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > Tolerances::default().norm_tol {
            return Err(QdError::Normalization(format!(
                "state norm {norm} deviates from 1 beyond tolerance"
            )));
        }
        Ok(StateVector { dims, amplitudes })
    }

    /// Normalizes the given amplitudes; errors on a (near-)null vector.
    pub fn normalized(dims: Vec<usize>, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm < Tolerances::default().null_tol {
            return Err(QdError::NullVector { norm });
        }
        Self::new(dims, amplitudes / C64::new(norm, 0.0))
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(dims: Vec<usize>, index: usize) -> Result<Self> {
        let total = check_dims(&dims)?;
        if index >= total {
            return Err(QdError::Shape(format!("basis index {index} out of range {total}")));
        }
        let mut amps = CVector::zeros(total);
        amps[index] = C_ONE;
        Ok(StateVector { dims, amplitudes: amps })
    }

    /// Single-qubit state `alpha|0> + beta|1>`.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![2], CVector::from_vec(vec![alpha, beta]))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(QdError::Shape("inner product dimension mismatch".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Kronecker product `self (x) other`; dims concatenate.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let total = check_dims(&dims)?;
        let (n0, n1) = (self.dim(), other.dim());
        let mut amps = CVector::zeros(total);
        for i in 0..n0 {
            for j in 0..n1 {
                amps[i * n1 + j] = self.amplitudes[i] * other.amplitudes[j];
            }
        }
        Ok(StateVector { dims, amplitudes: amps })
    }

    /// Applies a unitary operator; the result stays normalized.
    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        if op.side() != self.dim() {
            return Err(QdError::Shape("operator/state dimension mismatch".into()));
        }
        if op.kind() != OperatorKind::Unitary {
            return Err(QdError::Kind("state application requires a unitary operator".into()));
        }
        let amps = &op.matrix * &self.amplitudes;
        let norm = amps.norm();
        if (norm - 1.0).abs() > Tolerances::default().norm_tol {
            return Err(QdError::Normalization(format!(
                "norm {norm} after unitary application"
            )));
        }
        Ok(StateVector { dims: self.dims.clone(), amplitudes: amps })
    }

    /// Pure-state density matrix `|psi><psi|`.
    pub fn outer(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { dims: self.dims.clone(), matrix: m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Hermitian,
    Unitary,
}

/// Dense complex square matrix over a tensor-product basis with a declared
/// kind that is verified at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    matrix: CMatrix,
    kind: OperatorKind,
}

impl Operator {
    pub fn new(dims: Vec<usize>, matrix: CMatrix, kind: OperatorKind) -> Result<Self> {
        let total = check_dims(&dims)?;
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(QdError::Shape(format!(
                "matrix is {}x{}, expected side {}",
                matrix.nrows(),
                matrix.ncols(),
                total
            )));
        }
        let op_tol = Tolerances::default().op_tol;
        match kind {
            OperatorKind::General => {}
            OperatorKind::Hermitian => {
                let dev = (&matrix - matrix.adjoint()).norm();
                if dev > op_tol {
                    return Err(QdError::Kind(format!(
                        "declared hermitian but ||A - A^H||_F = {dev}"
                    )));
                }
            }
            OperatorKind::Unitary => {
                let dev = (matrix.adjoint() * &matrix - CMatrix::identity(total, total)).norm();
                if dev > op_tol {
                    return Err(QdError::Kind(format!(
                        "declared unitary but ||U^H U - I||_F = {dev}"
                    )));
                }
            }
        }
        Ok(Operator { dims, matrix, kind })
    }

    pub fn hermitian(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        Self::new(dims, matrix, OperatorKind::Hermitian)
    }

    pub fn unitary(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        Self::new(dims, matrix, OperatorKind::Unitary)
    }

    pub fn general(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        Self::new(dims, matrix, OperatorKind::General)
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        let total = check_dims(&dims)?;
        Ok(Operator {
            dims,
            matrix: CMatrix::identity(total, total),
            kind: OperatorKind::Unitary,
        })
    }

    /// Diagonal operator from its diagonal entries.
    pub fn from_diagonal(dims: Vec<usize>, diag: &[C64], kind: OperatorKind) -> Result<Self> {
        let total = check_dims(&dims)?;
        if diag.len() != total {
            return Err(QdError::Shape("diagonal length mismatch".into()));
        }
        let matrix = CMatrix::from_diagonal(&CVector::from_column_slice(diag));
        Self::new(dims, matrix, kind)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            dims: self.dims.clone(),
            matrix: self.matrix.adjoint(),
            kind: self.kind,
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    /// Matrix product `self * other`; unitarity survives composition.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        if self.side() != other.side() {
            return Err(QdError::Shape("composition dimension mismatch".into()));
        }
        let kind = if self.kind == OperatorKind::Unitary && other.kind == OperatorKind::Unitary {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Ok(Operator {
            dims: self.dims.clone(),
            matrix: &self.matrix * &other.matrix,
            kind,
        })
    }

    /// Kronecker product `self (x) other`; dims concatenate.
    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        check_dims(&dims)?;
        let matrix = self.matrix.kronecker(&other.matrix);
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Hermitian, OperatorKind::Hermitian) => OperatorKind::Hermitian,
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Operator { dims, matrix, kind })
    }

    /// Returns `AB - BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        if self.side() != other.side() {
            return Err(QdError::Shape("commutator dimension mismatch".into()));
        }
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(Operator { dims: self.dims.clone(), matrix: m, kind: OperatorKind::General })
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix over a tensor-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let tol = Tolerances::default();
        let total = check_dims(&dims)?;
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(QdError::Shape("density matrix side mismatch".into()));
        }
        let herm_dev = (&matrix - matrix.adjoint()).norm();
        if herm_dev > tol.op_tol {
            return Err(QdError::Density(format!("hermiticity deviation {herm_dev}")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol.norm_tol || trace.im.abs() > tol.norm_tol {
            return Err(QdError::Density(format!("trace {trace} != 1")));
        }
        let min_eig = min_eigenvalue(&matrix);
        if min_eig < -tol.psd_tol {
            return Err(QdError::Density(format!("minimum eigenvalue {min_eig}")));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    /// Construction path for results that are PSD by construction
    /// (pinchings, unitary conjugations, convex mixtures).
    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, matrix: CMatrix) -> Self {
        DensityMatrix { dims, matrix }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest off-diagonal magnitude, a coherence diagnostic.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.side();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(self.matrix[(i, j)].norm());
                }
            }
        }
        best
    }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut diagonal = true;
    'outer: for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)].norm_sqr() != 0.0 {
                diagonal = false;
                break 'outer;
            }
        }
    }
    if diagonal {
        (0..n).map(|i| m[(i, i)].re).fold(f64::INFINITY, f64::min)
    } else {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Spectral data of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

/// Eigendecomposition of a Hermitian operator.
///
/// Eigenvalues are sorted ascending. Within a degeneracy cluster (gap below
/// `degen_tol`) eigenvectors are ordered by the index of their
/// largest-magnitude component and phase-fixed so that component is real
/// positive.
pub fn hermitian_eig(op: &Operator) -> Result<HermitianEig> {
    if op.kind() != OperatorKind::Hermitian {
        return Err(QdError::Kind("hermitian_eig requires a hermitian operator".into()));
    }
    let n = op.side();
    let degen_tol = Tolerances::default().degen_tol;

    // Diagonal fast path: eigenvectors are basis vectors up to ordering.
    let mut diagonal = true;
    'outer: for i in 0..n {
        for j in 0..n {
            if i != j && op.matrix[(i, j)].norm_sqr() != 0.0 {
                diagonal = false;
                break 'outer;
            }
        }
    }
    let (mut pairs, vecs): (Vec<(f64, usize)>, CMatrix) = if diagonal {
        let pairs = (0..n).map(|i| (op.matrix[(i, i)].re, i)).collect();
        (pairs, CMatrix::identity(n, n))
    } else {
        let eig = op.matrix.clone().symmetric_eigen();
        let pairs = eig.eigenvalues.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        (pairs, eig.eigenvectors)
    };
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut columns: Vec<CVector> =
        pairs.iter().map(|p| CVector::from(vecs.column(p.1))).collect();

    // Deterministic gauge inside each degeneracy cluster.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < degen_tol {
            end += 1;
        }
        let cluster = &mut columns[start..end];
        let mut keyed: Vec<(usize, CVector)> = cluster
            .iter()
            .map(|c| (dominant_component(c), c.clone()))
            .collect();
        keyed.sort_by_key(|k| k.0);
        for (slot, (key, mut col)) in keyed.into_iter().enumerate() {
            let pivot = col[key];
            let mag = pivot.norm();
            if mag > 0.0 {
                col *= pivot.conj() / C64::new(mag, 0.0);
            }
            cluster[slot] = col;
        }
        start = end;
    }

    let mut vecs_out = CMatrix::zeros(n, n);
    for (j, col) in columns.iter().enumerate() {
        vecs_out.set_column(j, col);
    }
    Ok(HermitianEig { eigenvalues: values, eigenvectors: vecs_out })
}

fn dominant_component(col: &CVector) -> usize {
    let mut best = 0;
    let mut best_mag = -1.0f64;
    for (i, c) in col.iter().enumerate() {
        let m = c.norm();
        // strictly-greater keeps the first index on ties
        if m > best_mag + 1e-12 {
            best = i;
            best_mag = m;
        }
    }
    best
}

/// `exp(scale * A)` for Hermitian `A` via spectral decomposition.
///
/// With `scale = -i * t` (real `t`) the result is unitary.
pub fn matrix_exp(op: &Operator, scale: C64) -> Result<Operator> {
    let eig = hermitian_eig(op)?;
    let phases: Vec<C64> = eig.eigenvalues.iter().map(|&e| (scale * e).exp()).collect();
    let d = CMatrix::from_diagonal(&CVector::from_vec(phases));
    let m = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
    let kind = if scale.re.abs() < 1e-300 {
        OperatorKind::Unitary
    } else {
        OperatorKind::General
    };
    Operator::new(op.dims().to_vec(), m, kind)
}

/// Reduced density matrix over the `keep` subsystems (ascending index order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if keep.is_empty() {
        return Err(QdError::DegenerateRequest("empty keep set in partial trace".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(QdError::Shape("keep index out of range".into()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();

    let strides = row_major_strides(dims);
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = keep_dims.iter().product();
    let de: usize = traced_dims.iter().product();

    let mut reduced = CMatrix::zeros(dk, dk);
    let mut kr_idx = vec![0usize; keep.len()];
    let mut kc_idx = vec![0usize; keep.len()];
    let mut e_idx = vec![0usize; traced.len()];
    for kr in 0..dk {
        unflatten(kr, &keep_dims, &mut kr_idx);
        for kc in 0..dk {
            unflatten(kc, &keep_dims, &mut kc_idx);
            let mut acc = C_ZERO;
            for e in 0..de {
                unflatten(e, &traced_dims, &mut e_idx);
                let mut row = 0usize;
                let mut col = 0usize;
                for (pos, &sub) in keep.iter().enumerate() {
                    row += kr_idx[pos] * strides[sub];
                    col += kc_idx[pos] * strides[sub];
                }
                for (pos, &sub) in traced.iter().enumerate() {
                    row += e_idx[pos] * strides[sub];
                    col += e_idx[pos] * strides[sub];
                }
                acc += rho.matrix[(row, col)];
            }
            reduced[(kr, kc)] = acc;
        }
    }
    // A partial trace of a valid density matrix is again one.
    Ok(DensityMatrix::from_parts_unchecked(keep_dims, reduced))
}

fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

fn unflatten(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for i in (0..dims.len()).rev() {
        out[i] = flat % dims[i];
        flat /= dims[i];
    }
}

pub fn sigma_x() -> Operator {
    Operator {
        dims: vec![2],
        matrix: CMatrix::from_row_slice(2, 2, &[C_ZERO, C_ONE, C_ONE, C_ZERO]),
        kind: OperatorKind::Hermitian,
    }
}

pub fn sigma_y() -> Operator {
    Operator {
        dims: vec![2],
        matrix: CMatrix::from_row_slice(2, 2, &[C_ZERO, -C_I, C_I, C_ZERO]),
        kind: OperatorKind::Hermitian,
    }
}

pub fn sigma_z() -> Operator {
    Operator {
        dims: vec![2],
        matrix: CMatrix::from_row_slice(2, 2, &[C_ONE, C_ZERO, C_ZERO, -C_ONE]),
        kind: OperatorKind::Hermitian,
    }
}

pub fn hadamard() -> Operator {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Operator {
        dims: vec![2],
        matrix: CMatrix::from_row_slice(2, 2, &[h, h, h, -h]),
        kind: OperatorKind::Unitary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plus() -> StateVector {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StateVector::qubit(h, h).unwrap()
    }

    // Brute-force Kronecker oracle, independent of the implementation path.
    fn kron_oracle(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
        let mut out = CMatrix::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in 0..ca {
                for k in 0..rb {
                    for l in 0..cb {
                        out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn tensor_basis_ordering() {
        let zero = StateVector::basis_state(vec![2], 0).unwrap();
        let one = StateVector::basis_state(vec![2], 1).unwrap();
        let t = zero.tensor(&one).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        // |0>(x)|1> lands on flat index 1: leftmost subsystem slowest-varying
        assert_eq!(t.amplitudes()[1], C_ONE);
        assert_eq!(t.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
    }

    #[test]
    fn tensor_identities() {
        let i2 = Operator::identity(vec![2]).unwrap();
        let t = i2.tensor(&i2).unwrap();
        assert_eq!(t.matrix(), &CMatrix::identity(4, 4));
        assert_eq!(t.dims(), &[2, 2]);
    }

    #[test]
    fn tensor_matches_kron_oracle() {
        let sz = sigma_z();
        let p = plus();
        // operator (x) operator against the elementwise oracle
        let got = sz.tensor(&sigma_x()).unwrap();
        let want = kron_oracle(sz.matrix(), sigma_x().matrix());
        assert!((got.matrix() - want).norm() < 1e-15);
        // sigma_z (x) |+> as a state: (1,1,-1,-1)/sqrt(2) after application
        let szi = sz.tensor(&Operator::identity(vec![2]).unwrap()).unwrap();
        let zero = StateVector::basis_state(vec![2], 0).unwrap();
        let one = StateVector::basis_state(vec![2], 1).unwrap();
        let psi = zero
            .tensor(&p)
            .unwrap()
            .amplitudes()
            .clone()
            + one.tensor(&p).unwrap().amplitudes().clone();
        let psi = StateVector::normalized(vec![2, 2], psi).unwrap();
        let applied = szi.matrix() * psi.amplitudes();
        let h = std::f64::consts::FRAC_1_SQRT_2 / std::f64::consts::SQRT_2;
        let want = CVector::from_vec(vec![
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
            C64::new(-h, 0.0),
        ]);
        assert!((applied - want).norm() < 1e-12);
    }

    #[test]
    fn tensor_capacity_error() {
        let big = Operator::identity(vec![64, 64]).unwrap();
        let err = big.tensor(&Operator::identity(vec![2]).unwrap()).unwrap_err();
        assert!(matches!(err, QdError::Capacity { .. }));
    }

    #[test]
    fn commutator_pauli() {
        // 2x2 multiplication oracle: [sx, sy] = 2i sz
        let c = sigma_x().commutator(&sigma_y()).unwrap();
        let want = sigma_z().matrix() * C64::new(0.0, 2.0);
        assert!((c.matrix() - want).norm() < 1e-15);
    }

    #[test]
    fn commutator_with_identity_vanishes() {
        let a = Operator::general(
            vec![2],
            CMatrix::from_row_slice(2, 2, &[
                C64::new(0.3, 0.1),
                C64::new(-1.0, 2.0),
                C64::new(0.0, -0.4),
                C64::new(5.0, 0.0),
            ]),
        )
        .unwrap();
        let c = a.commutator(&Operator::identity(vec![2]).unwrap()).unwrap();
        assert_eq!(c.frobenius(), 0.0);
    }

    #[test]
    fn diagonal_matrices_commute() {
        let a = Operator::from_diagonal(
            vec![2],
            &[C_ONE, C64::new(2.0, 0.0)],
            OperatorKind::Hermitian,
        )
        .unwrap();
        let b = Operator::from_diagonal(
            vec![2],
            &[C64::from_polar(1.0, 0.7), C64::from_polar(1.0, -1.9)],
            OperatorKind::Unitary,
        )
        .unwrap();
        assert!(a.commutator(&b).unwrap().frobenius() < 1e-15);
    }

    #[test]
    fn commutator_shape_error() {
        let err = sigma_x().commutator(&Operator::identity(vec![3]).unwrap()).unwrap_err();
        assert!(matches!(err, QdError::Shape(_)));
    }

    #[test]
    fn eig_sigma_z() {
        let eig = hermitian_eig(&sigma_z()).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-12);
        // ascending order maps eigenvalue -1 to |1> and +1 to |0>
        assert!((eig.eigenvectors[(1, 0)] - C_ONE).norm() < 1e-12);
        assert!((eig.eigenvectors[(0, 1)] - C_ONE).norm() < 1e-12);
    }

    #[test]
    fn eig_sigma_x_closed_form() {
        let eig = hermitian_eig(&sigma_x()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-12);
        // closed form: (1, -1)/sqrt(2) and (1, 1)/sqrt(2), first component real positive
        assert!((eig.eigenvectors[(0, 0)] - C64::new(h, 0.0)).norm() < 1e-12);
        assert!((eig.eigenvectors[(1, 0)] - C64::new(-h, 0.0)).norm() < 1e-12);
        assert!((eig.eigenvectors[(0, 1)] - C64::new(h, 0.0)).norm() < 1e-12);
        assert!((eig.eigenvectors[(1, 1)] - C64::new(h, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = Operator::general(vec![2], CMatrix::from_row_slice(2, 2, &[
            C_ZERO, C_ONE, C_ZERO, C_ZERO,
        ]))
        .unwrap();
        assert!(matches!(hermitian_eig(&a).unwrap_err(), QdError::Kind(_)));
    }

    #[test]
    fn eig_reconstruction() {
        let m = CMatrix::from_row_slice(3, 3, &[
            C64::new(2.0, 0.0), C64::new(0.5, 0.25), C64::new(0.0, -1.0),
            C64::new(0.5, -0.25), C64::new(-1.0, 0.0), C64::new(0.3, 0.0),
            C64::new(0.0, 1.0), C64::new(0.3, 0.0), C64::new(0.7, 0.0),
        ]);
        let a = Operator::hermitian(vec![3], m.clone()).unwrap();
        let eig = hermitian_eig(&a).unwrap();
        let d = CMatrix::from_diagonal(&CVector::from_vec(
            eig.eigenvalues.iter().map(|&e| C64::new(e, 0.0)).collect(),
        ));
        let recon = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
        assert!((recon - m.clone()).norm() <= 1e-9 * m.norm());
    }

    #[test]
    fn matrix_exp_zero_time() {
        let u = matrix_exp(&sigma_x(), C_ZERO).unwrap();
        assert!((u.matrix() - CMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn matrix_exp_pauli_closed_form() {
        // exp(-i (pi/2) sx) = cos(pi/2) I - i sin(pi/2) sx = -i sx
        let u = matrix_exp(&sigma_x(), -C_I * std::f64::consts::FRAC_PI_2).unwrap();
        let want = sigma_x().matrix() * (-C_I);
        assert!((u.matrix() - want).norm() < 1e-12);
        assert_eq!(u.kind(), OperatorKind::Unitary);
    }

    #[test]
    fn matrix_exp_inverse_pairing() {
        let f = matrix_exp(&sigma_z(), -C_I * std::f64::consts::FRAC_PI_2).unwrap();
        let b = matrix_exp(&sigma_z(), C_I * std::f64::consts::FRAC_PI_2).unwrap();
        let prod = f.compose(&b).unwrap();
        assert!((prod.matrix() - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn matrix_exp_rejects_non_hermitian() {
        let a = Operator::general(vec![2], CMatrix::from_row_slice(2, 2, &[
            C_ZERO, C_ONE, C_ZERO, C_ZERO,
        ]))
        .unwrap();
        assert!(matches!(matrix_exp(&a, -C_I).unwrap_err(), QdError::Kind(_)));
    }

    #[test]
    fn partial_trace_product_state() {
        let psi = plus();
        let phi = StateVector::basis_state(vec![2], 1).unwrap();
        let rho = psi.tensor(&phi).unwrap().outer();
        let red = partial_trace(&rho, &[0]).unwrap();
        assert!((red.matrix() - psi.outer().matrix()).norm() < 1e-14);
        assert!((red.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_bell_state() {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let amps = CVector::from_vec(vec![h, C_ZERO, C_ZERO, h]);
        let bell = StateVector::new(vec![2, 2], amps).unwrap();
        let red = partial_trace(&bell.outer(), &[0]).unwrap();
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((red.matrix() - half).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_orthogonal_environment_branches() {
        // alpha|S1>|E1> + beta|S2>|E2> with <E1|E2>=0 reduces to the
        // diagonal |alpha|^2, |beta|^2 ensemble.
        let alpha = C64::new(0.6, 0.0);
        let beta = C64::new(0.0, 0.8);
        let amps = CVector::from_vec(vec![alpha, C_ZERO, C_ZERO, beta]);
        let psi = StateVector::new(vec![2, 2], amps).unwrap();
        let red = partial_trace(&psi.outer(), &[0]).unwrap();
        assert_abs_diff_eq!(red.matrix()[(0, 0)].re, 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(red.matrix()[(1, 1)].re, 0.64, epsilon = 1e-12);
        assert!(red.max_off_diagonal() < 1e-14);
    }

    #[test]
    fn partial_trace_empty_keep_errors() {
        let rho = plus().outer();
        assert!(matches!(
            partial_trace(&rho, &[]).unwrap_err(),
            QdError::DegenerateRequest(_)
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[
            C64::new(1.5, 0.0), C_ZERO, C_ZERO, C64::new(-0.5, 0.0),
        ]);
        assert!(matches!(
            DensityMatrix::new(vec![2], bad).unwrap_err(),
            QdError::Density(_)
        ));
    }

    #[test]
    fn operator_kind_verified() {
        let not_unitary = CMatrix::from_row_slice(2, 2, &[
            C_ONE, C_ONE, C_ZERO, C_ONE,
        ]);
        assert!(matches!(
            Operator::unitary(vec![2], not_unitary).unwrap_err(),
            QdError::Kind(_)
        ));
    }
}
