//! Random-phase unitaries, analytic and Monte Carlo phase averaging, Born
//! ensembles and the dynamical decoherence-function baseline.
//!
//! Phase averaging over the full phase torus kills every coherence between
//! distinct groups (indices or degeneracy blocks) of an observable's
//! eigenbasis, so the analytic path is a plain diagonal/block-diagonal
//! pinching. The Monte Carlo path estimates the same integral from sampled
//! phase vectors and exists to demonstrate the M^(-1/2) convergence, not for
//! production accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::error::{QdError, Result};
use crate::linalg::{C64, CMatrix, CVector, DensityMatrix, Operator, OperatorKind, StateVector};
use crate::quotient::{ClassLabel, GroupingMode, ObservableSpec};

/// Sentinel for an exactly vanishing branch overlap (log of zero).
pub const GAMMA_FLOOR: f64 = -1e9;

/// Reproducible vector of uniform phases in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSample {
    pub gammas: Vec<f64>,
    pub seed: u64,
    pub stream_index: u64,
}

/// Draws `len` independent uniform phases from a counter-based stream keyed
/// by `(seed, stream)`; results are independent of evaluation order.
pub fn sample_phases(len: usize, seed: u64, stream: u64) -> PhaseSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let gammas = (0..len).map(|_| rng.random_range(0.0..TAU)).collect();
    PhaseSample { gammas, seed, stream_index: stream }
}

/// `U(gamma) = sum_n e^{-i gamma_n} |n><n|` in the observable's eigenbasis.
///
/// In `PerBlock` mode one phase is shared inside each degeneracy block, so
/// the sample length must equal the block count.
pub fn random_phase_unitary(
    sample: &PhaseSample,
    spec: &ObservableSpec,
    mode: GroupingMode,
) -> Result<Operator> {
    let n = spec.side();
    let expected = match mode {
        GroupingMode::PerIndex => n,
        GroupingMode::PerBlock => spec.blocks().len(),
    };
    if sample.gammas.len() != expected {
        return Err(QdError::Shape(format!(
            "phase sample length {} != group count {}",
            sample.gammas.len(),
            expected
        )));
    }
    let groups = spec.group_of(mode);
    let phases: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.0, -sample.gammas[groups[k]]))
        .collect();
    let d = CMatrix::from_diagonal(&CVector::from_vec(phases));
    let m = spec.eigenbasis() * d * spec.eigenbasis().adjoint();
    Operator::new(spec.dims().to_vec(), m, OperatorKind::Unitary)
}

/// Exact phase average: zeroes every eigenbasis entry whose row and column
/// indices fall in different groups. Trace and in-group entries are
/// preserved exactly.
pub fn dephase_analytic(
    rho: &DensityMatrix,
    spec: &ObservableSpec,
    mode: GroupingMode,
) -> Result<DensityMatrix> {
    if rho.side() != spec.side() {
        return Err(QdError::Shape("density/observable dimension mismatch".into()));
    }
    let n = spec.side();
    let groups = spec.group_of(mode);
    let v = spec.eigenbasis();
    let identity_basis = v == &CMatrix::identity(n, n);
    let mut sigma = if identity_basis {
        rho.matrix().clone()
    } else {
        v.adjoint() * rho.matrix() * v
    };
    for i in 0..n {
        for j in 0..n {
            if groups[i] != groups[j] {
                sigma[(i, j)] = crate::linalg::C_ZERO;
            }
        }
    }
    let out = if identity_basis { sigma } else { v * sigma * v.adjoint() };
    // a pinching of a density matrix stays PSD with unit trace
    Ok(DensityMatrix::from_parts_unchecked(rho.dims().to_vec(), out))
}

/// Finite-sample estimator `(1/M) sum_k U(gamma_k) rho U(gamma_k)^H` of the
/// phase average. Streams are indexed `0..samples` and reduced in fixed
/// stream order, so the result does not depend on scheduling.
pub fn dephase_monte_carlo(
    rho: &DensityMatrix,
    spec: &ObservableSpec,
    mode: GroupingMode,
    samples: u64,
    seed: u64,
) -> Result<DensityMatrix> {
    if rho.side() != spec.side() {
        return Err(QdError::Shape("density/observable dimension mismatch".into()));
    }
    if samples == 0 {
        return Err(QdError::DegenerateRequest("monte carlo needs samples >= 1".into()));
    }
    let n = spec.side();
    let groups = spec.group_of(mode);
    let group_count = groups.iter().max().copied().unwrap_or(0) + 1;
    let v = spec.eigenbasis();
    let identity_basis = v == &CMatrix::identity(n, n);
    let sigma = if identity_basis {
        rho.matrix().clone()
    } else {
        v.adjoint() * rho.matrix() * v
    };
    let mut acc = CMatrix::zeros(n, n);
    for stream in 0..samples {
        let sample = sample_phases(group_count, seed, stream);
        for i in 0..n {
            for j in 0..n {
                // (U rho U^H)_ij = rho_ij e^{-i(gamma_i - gamma_j)}
                let phase = sample.gammas[groups[i]] - sample.gammas[groups[j]];
                acc[(i, j)] += sigma[(i, j)] * C64::from_polar(1.0, -phase);
            }
        }
    }
    acc /= C64::new(samples as f64, 0.0);
    let out = if identity_basis { acc } else { v * acc * v.adjoint() };
    // a convex mixture of unitary conjugations of rho stays a density matrix
    Ok(DensityMatrix::from_parts_unchecked(rho.dims().to_vec(), out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMethod {
    Analytic,
    MonteCarlo,
}

/// Measurement outcome table: one entry per degeneracy block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub outcome_values: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub expectation: f64,
    pub method: ReportMethod,
    pub samples: u64,
    pub seed: u64,
}

impl EnsembleReport {
    fn from_blocks(values: Vec<f64>, probabilities: Vec<f64>) -> Self {
        let expectation = values
            .iter()
            .zip(probabilities.iter())
            .map(|(v, p)| v * p)
            .sum();
        EnsembleReport {
            outcome_values: values,
            probabilities,
            expectation,
            method: ReportMethod::Analytic,
            samples: 0,
            seed: 0,
        }
    }

    pub fn with_provenance(mut self, method: ReportMethod, samples: u64, seed: u64) -> Self {
        self.method = method;
        self.samples = samples;
        self.seed = seed;
        self
    }

    /// CSV export with columns `outcome,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,probability\n");
        for (v, p) in self.outcome_values.iter().zip(self.probabilities.iter()) {
            out.push_str(&format!("{v},{p}\n"));
        }
        out
    }
}

/// Born ensemble of a pure state: block-aggregated probabilities from the
/// dephased diagonal, expectation `<psi|O|psi>`.
pub fn born_ensemble(psi: &StateVector, spec: &ObservableSpec) -> Result<EnsembleReport> {
    let label = crate::quotient::class_label(psi, spec)?;
    Ok(EnsembleReport::from_blocks(spec.block_values(), label.block_probabilities))
}

/// Born ensemble of a density matrix: `P_b = sum_{k in b} (V^H rho V)_kk`,
/// expectation `Tr(O rho)`.
pub fn born_ensemble_rho(rho: &DensityMatrix, spec: &ObservableSpec) -> Result<EnsembleReport> {
    if rho.side() != spec.side() {
        return Err(QdError::Shape("density/observable dimension mismatch".into()));
    }
    let v = spec.eigenbasis();
    let sigma = v.adjoint() * rho.matrix() * v;
    let probs: Vec<f64> = spec
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&k| sigma[(k, k)].re).sum())
        .collect();
    Ok(EnsembleReport::from_blocks(spec.block_values(), probs))
}

/// Ensemble of the evolved state `u_t psi0`, with an internal check that
/// composing any sampled stability-group member on top of the evolution
/// leaves the report unchanged.
pub fn measure_after_evolution(
    psi0: &StateVector,
    u_t: &Operator,
    spec: &ObservableSpec,
) -> Result<EnsembleReport> {
    if u_t.kind() != OperatorKind::Unitary {
        return Err(QdError::Kind("evolution operator must be unitary".into()));
    }
    let evolved = psi0.apply(u_t)?;
    let report = born_ensemble(&evolved, spec)?;
    // sampled members of the phase group must not move the statistics
    for stream in 0..3u64 {
        let sample = sample_phases(spec.blocks().len(), 0x5D0C_0FFE, stream);
        let member = random_phase_unitary(&sample, spec, GroupingMode::PerBlock)?;
        let shifted = born_ensemble(&evolved.apply(&member)?, spec)?;
        let dev = report
            .probabilities
            .iter()
            .zip(shifted.probabilities.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(QdError::Consistency(format!(
                "phase-group member moved the ensemble by {dev}"
            )));
        }
    }
    Ok(report)
}

/// Decoherence function `Gamma_12(t) = ln |<E1(t)|E2(t)>|^2`, clamped to
/// `<= 0` and floored at the serialization-safe sentinel for orthogonal
/// pairs.
pub fn decoherence_function(
    e1_traj: &[StateVector],
    e2_traj: &[StateVector],
) -> Result<Vec<f64>> {
    if e1_traj.len() != e2_traj.len() {
        return Err(QdError::Shape("trajectory lengths differ".into()));
    }
    let mut gammas = Vec::with_capacity(e1_traj.len());
    for (a, b) in e1_traj.iter().zip(e2_traj.iter()) {
        let overlap_sq = a.inner(b)?.norm_sqr();
        let gamma = if overlap_sq == 0.0 {
            GAMMA_FLOOR
        } else {
            overlap_sq.ln().clamp(GAMMA_FLOOR, 0.0)
        };
        gammas.push(gamma);
    }
    Ok(gammas)
}

/// Squared-label distance between a Monte Carlo estimate and the analytic
/// average, used by the convergence experiments.
pub fn frobenius_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() - b.matrix()).norm()
}

/// Haar-like random pure state from the deterministic stream `(seed, stream)`.
pub fn random_state(dim: usize, seed: u64, stream: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let amps: Vec<C64> = (0..dim)
        .map(|_| {
            // Box-Muller pairs give an isotropic Gaussian vector
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..TAU);
            let r = (-2.0 * u1.ln()).sqrt();
            C64::new(r * u2.cos(), r * u2.sin())
        })
        .collect();
    StateVector::normalized(vec![dim], CVector::from_vec(amps))
}

/// Random Hermitian operator from the deterministic stream `(seed, stream)`.
pub fn random_hermitian(dim: usize, seed: u64, stream: u64) -> Result<Operator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    rng.set_stream(stream);
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in (i + 1)..dim {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    Operator::hermitian(vec![dim], m)
}

/// Class label of the diagonal of a dephased pure state, for cross-checks.
pub fn dephased_label(psi: &StateVector, spec: &ObservableSpec) -> Result<ClassLabel> {
    crate::quotient::class_label(psi, spec)
}
