//! Commutant (stability-group) membership, equivalence-class labels, gauge
//! fixing and superposition-closure checks.
//!
//! Two states are in the same class with respect to an observable when every
//! outcome probability |<n|psi>|^2 agrees; a unitary belongs to the
//! observable's stability group when it commutes with it. Degenerate spectra
//! are handled per eigenvalue block, since commuting unitaries only constrain
//! eigenspaces, not individual vectors inside them.

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::config::Tolerances;
use crate::error::{QdError, Result};
use crate::linalg::{hermitian_eig, C64, CMatrix, CVector, Operator, OperatorKind, StateVector};

/// Grouping granularity for dephasing and class comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupingMode {
    PerIndex,
    PerBlock,
}

/// Hermitian observable with cached spectral data and degeneracy blocks.
#[derive(Debug, Clone)]
pub struct ObservableSpec {
    operator: Operator,
    eigenvalues: Vec<f64>,
    eigenbasis: CMatrix,
    blocks: Vec<Vec<usize>>,
}

impl ObservableSpec {
    pub fn from_operator(op: Operator) -> Result<Self> {
        if op.kind() != OperatorKind::Hermitian {
            return Err(QdError::Kind("observable must be hermitian".into()));
        }
        let eig = hermitian_eig(&op)?;
        let degen_tol = Tolerances::default().degen_tol;
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &e) in eig.eigenvalues.iter().enumerate() {
            match blocks.last_mut() {
                Some(block) if e - eig.eigenvalues[*block.last().unwrap()] < degen_tol => {
                    block.push(i)
                }
                _ => blocks.push(vec![i]),
            }
        }
        Ok(ObservableSpec {
            operator: op,
            eigenvalues: eig.eigenvalues,
            eigenbasis: eig.eigenvectors,
            blocks,
        })
    }

    /// Observable `diag(0, 1, ..., d-1)`: every computational basis index is
    /// its own outcome. Its eigenbasis is the identity.
    pub fn computational(dims: Vec<usize>) -> Result<Self> {
        let side: usize = dims.iter().product();
        let diag: Vec<C64> = (0..side).map(|i| C64::new(i as f64, 0.0)).collect();
        let op = Operator::from_diagonal(dims, &diag, OperatorKind::Hermitian)?;
        Self::from_operator(op)
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn side(&self) -> usize {
        self.operator.side()
    }

    pub fn dims(&self) -> &[usize] {
        self.operator.dims()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary whose columns are the eigenvectors, eigenvalue-ordered.
    pub fn eigenbasis(&self) -> &CMatrix {
        &self.eigenbasis
    }

    /// Degeneracy blocks: a partition of eigenbasis indices.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn is_degenerate(&self) -> bool {
        self.blocks.len() != self.eigenvalues.len()
    }

    /// Representative eigenvalue per block.
    pub fn block_values(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| self.eigenvalues[b[0]]).collect()
    }

    /// Block index for each eigenbasis index.
    pub fn block_of(&self) -> Vec<usize> {
        let mut map = vec![0usize; self.side()];
        for (bi, block) in self.blocks.iter().enumerate() {
            for &k in block {
                map[k] = bi;
            }
        }
        map
    }

    /// Group identifier per eigenbasis index under the given mode.
    pub fn group_of(&self, mode: GroupingMode) -> Vec<usize> {
        match mode {
            GroupingMode::PerIndex => (0..self.side()).collect(),
            GroupingMode::PerBlock => self.block_of(),
        }
    }

    /// Coordinates of `psi` in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &StateVector) -> Result<CVector> {
        if psi.dim() != self.side() {
            return Err(QdError::Shape("state/observable dimension mismatch".into()));
        }
        Ok(self.eigenbasis.adjoint() * psi.amplitudes())
    }
}

/// Canonical class representative: outcome probabilities per eigenbasis index.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLabel {
    pub probabilities: Vec<f64>,
    pub block_probabilities: Vec<f64>,
    pub blocks: Vec<Vec<usize>>,
    pub label_tol: f64,
}

impl ClassLabel {
    fn new(raw: Vec<f64>, blocks: &[Vec<usize>]) -> Self {
        let label_tol = Tolerances::default().label_tol;
        let probabilities: Vec<f64> = raw.iter().map(|&p| p.clamp(0.0, 1.0)).collect();
        let block_probabilities = blocks
            .iter()
            .map(|b| b.iter().map(|&k| probabilities[k]).sum())
            .collect();
        ClassLabel {
            probabilities,
            block_probabilities,
            blocks: blocks.to_vec(),
            label_tol,
        }
    }

    pub fn max_difference(&self, other: &ClassLabel, mode: GroupingMode) -> f64 {
        let (a, b) = match mode {
            GroupingMode::PerIndex => (&self.probabilities, &other.probabilities),
            GroupingMode::PerBlock => (&self.block_probabilities, &other.block_probabilities),
        };
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ClassLabel", 3)?;
        s.serialize_field("probabilities", &self.probabilities)?;
        s.serialize_field("blocks", &self.blocks)?;
        s.serialize_field("tol", &self.label_tol)?;
        s.end()
    }
}

/// Membership test for the stability group of one or more observables:
/// true iff `max_o ||[u, o]||_F / ||o||_F <= tol`. Returns the residual.
pub fn commutant_member(u: &Operator, obs: &[&Operator], tol: f64) -> Result<(bool, f64)> {
    let mut residual = 0.0f64;
    for o in obs {
        if o.side() != u.side() {
            return Err(QdError::Shape("commutant check dimension mismatch".into()));
        }
        let norm = o.frobenius();
        if norm == 0.0 {
            continue;
        }
        let c = u.commutator(o)?;
        residual = residual.max(c.frobenius() / norm);
    }
    Ok((residual <= tol, residual))
}

/// Outcome probabilities of `psi` in the observable's eigenbasis.
pub fn class_label(psi: &StateVector, spec: &ObservableSpec) -> Result<ClassLabel> {
    let coords = spec.to_eigenbasis(psi)?;
    let raw: Vec<f64> = coords.iter().map(|c| c.norm_sqr()).collect();
    Ok(ClassLabel::new(raw, spec.blocks()))
}

/// True iff the two states carry the same label under the given mode.
pub fn same_class(
    a: &StateVector,
    b: &StateVector,
    spec: &ObservableSpec,
    mode: GroupingMode,
) -> Result<bool> {
    let la = class_label(a, spec)?;
    let lb = class_label(b, spec)?;
    Ok(la.max_difference(&lb, mode) < la.label_tol)
}

/// Canonical class representative: eigenbasis amplitudes replaced by their
/// moduli (all phase information dropped).
pub fn gauge_fix(psi: &StateVector, spec: &ObservableSpec) -> Result<StateVector> {
    let coords = spec.to_eigenbasis(psi)?;
    let moduli = CVector::from_vec(coords.iter().map(|c| C64::new(c.norm(), 0.0)).collect());
    let amps = spec.eigenbasis() * moduli;
    StateVector::new(psi.dims().to_vec(), amps)
}

/// Forms the normalized combination `c0*a + c1*b` and reports whether its
/// class label matches `a`'s (closure of the class under this superposition).
pub fn superposition_closed(
    a: &StateVector,
    b: &StateVector,
    coeffs: (C64, C64),
    spec: &ObservableSpec,
) -> Result<(bool, ClassLabel)> {
    if a.dims() != b.dims() {
        return Err(QdError::Shape("superposition operand dims differ".into()));
    }
    let combo = a.amplitudes() * coeffs.0 + b.amplitudes() * coeffs.1;
    let norm = combo.norm();
    if norm < Tolerances::default().null_tol {
        return Err(QdError::NullVector { norm });
    }
    let combined = StateVector::new(a.dims().to_vec(), combo / C64::new(norm, 0.0))?;
    let la = class_label(a, spec)?;
    let lc = class_label(&combined, spec)?;
    let closed = la.max_difference(&lc, GroupingMode::PerIndex) < la.label_tol;
    Ok((closed, lc))
}
