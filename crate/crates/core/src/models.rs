//! Worked measurement systems: Stern-Gerlach, the N-qubit classical-bit
//! chain, the generic von Neumann pipeline and the two-level cat model.
//!
//! Natural units (hbar = 1) throughout. Apparatus pointer spaces are
//! minimal: one dimension per outcome block, with the environment's many
//! degrees of freedom entering only as injected random phases.

use crate::config::{max_dim, Tolerances};
use crate::dephasing::{
    born_ensemble_rho, dephase_analytic, sample_phases, EnsembleReport,
};
use crate::error::{QdError, Result};
use crate::linalg::{
    matrix_exp, partial_trace, C64, CMatrix, CVector, DensityMatrix, Operator, OperatorKind,
    StateVector, C_I, C_ZERO,
};
use crate::quotient::{GroupingMode, ObservableSpec};

fn check_amplitude_pair(alpha: C64, beta: C64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > Tolerances::default().norm_tol {
        return Err(QdError::Normalization(format!(
            "|alpha|^2 + |beta|^2 = {norm}, expected 1"
        )));
    }
    Ok(())
}

/// Spin-1/2 beam parameters; the pointer basis is the momentum pair
/// `{|-p_z>, |+p_z>}` of the apparatus.
#[derive(Debug, Clone, PartialEq)]
pub struct SternGerlachParams {
    pub alpha: C64,
    pub beta: C64,
    /// Larmor frequency |e| B_z(0) / 2m, rad/s.
    pub omega: f64,
    /// Momentum transfer along z.
    pub pz: f64,
    /// Evolution time, s.
    pub t: f64,
    /// Position parameter entering the transferred phase.
    pub z: f64,
    /// Add a random phase per branch from the apparatus's hidden degrees
    /// of freedom.
    pub inject_random_phase: bool,
}

impl SternGerlachParams {
    pub fn validate(&self) -> Result<()> {
        check_amplitude_pair(self.alpha, self.beta)?;
        if self.t < 0.0 {
            return Err(QdError::Normalization("negative evolution time".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SternGerlachRun {
    /// Spin-pointer correlated state on the 2 (x) 2 space.
    pub correlated: StateVector,
    /// Classical ensemble diag(|alpha|^2, 0, 0, |beta|^2).
    pub ensemble: DensityMatrix,
}

/// Builds the spin-momentum correlated state and phase-averages it into the
/// classical ensemble over the pointer-correlated basis.
pub fn stern_gerlach_run(p: &SternGerlachParams, seed: u64) -> Result<SternGerlachRun> {
    p.validate()?;
    let (g1, g2) = if p.inject_random_phase {
        let s = sample_phases(2, seed, 0);
        (s.gammas[0], s.gammas[1])
    } else {
        (0.0, 0.0)
    };
    let up_phase = C64::from_polar(1.0, -p.omega * p.t + p.pz * p.z + g1);
    let down_phase = C64::from_polar(1.0, p.omega * p.t - p.pz * p.z + g2);
    let amps = CVector::from_vec(vec![
        p.alpha * up_phase, // |up, -p_z>
        C_ZERO,
        C_ZERO,
        p.beta * down_phase, // |down, +p_z>
    ]);
    let correlated = StateVector::new(vec![2, 2], amps)?;
    let spec = ObservableSpec::computational(vec![2, 2])?;
    let ensemble = dephase_analytic(&correlated.outer(), &spec, GroupingMode::PerIndex)?;
    Ok(SternGerlachRun { correlated, ensemble })
}

/// Parameters of the qubit chain: the base qubit carries `alpha|0> + beta|1>`
/// and each link applies a CNOT followed by its steady phase operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub n_qubits: usize,
    pub alpha: C64,
    pub beta: C64,
    /// (gamma_1i, delta_1i) per link, i = 2..=n_qubits.
    pub link_phases: Vec<(f64, f64)>,
    /// (gamma_E, delta_E) from the surrounding environment.
    pub env_phases: (f64, f64),
    pub seed: u64,
}

impl ChainParams {
    /// All steady phases zero.
    pub fn quiet(n_qubits: usize, alpha: C64, beta: C64) -> Result<Self> {
        check_amplitude_pair(alpha, beta)?;
        Ok(ChainParams {
            n_qubits,
            alpha,
            beta,
            link_phases: vec![(0.0, 0.0); n_qubits.saturating_sub(1)],
            env_phases: (0.0, 0.0),
            seed: 0,
        })
    }

    /// Steady phases drawn from the `(seed, 0)` stream.
    pub fn with_random_phases(n_qubits: usize, alpha: C64, beta: C64, seed: u64) -> Result<Self> {
        check_amplitude_pair(alpha, beta)?;
        let links = n_qubits.saturating_sub(1);
        let s = sample_phases(2 * links + 2, seed, 0);
        let link_phases = (0..links)
            .map(|i| (s.gammas[2 * i], s.gammas[2 * i + 1]))
            .collect();
        Ok(ChainParams {
            n_qubits,
            alpha,
            beta,
            link_phases,
            env_phases: (s.gammas[2 * links], s.gammas[2 * links + 1]),
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_amplitude_pair(self.alpha, self.beta)?;
        if self.n_qubits == 0 {
            return Err(QdError::Shape("chain needs at least one qubit".into()));
        }
        if self.link_phases.len() + 1 != self.n_qubits {
            return Err(QdError::Shape(format!(
                "{} link phase pairs for {} qubits",
                self.link_phases.len(),
                self.n_qubits
            )));
        }
        if self.n_qubits >= usize::BITS as usize || (1usize << self.n_qubits) > max_dim() {
            return Err(QdError::Capacity {
                requested: 1usize.checked_shl(self.n_qubits as u32).unwrap_or(usize::MAX),
                max: max_dim(),
            });
        }
        Ok(())
    }

    /// Accumulated branch phases (gamma, delta) of the final state.
    pub fn total_phases(&self) -> (f64, f64) {
        let (mut g, mut d) = self.env_phases;
        for (lg, ld) in &self.link_phases {
            g += lg;
            d += ld;
        }
        (g, d)
    }
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    /// `alpha e^{-i gamma}|0...0> + beta e^{-i delta}|1...1>`.
    pub pre_dephase: StateVector,
    /// `|alpha|^2 |0...0><0...0| + |beta|^2 |1...1><1...1|`.
    pub ensemble: DensityMatrix,
    /// `||[S, U_{1,2}]||_F` per applied steady operator, in application order.
    pub stability_residuals: Vec<f64>,
}

/// Runs the chain with links applied in increasing distance order i = 2..=N.
pub fn qubit_chain_run(p: &ChainParams) -> Result<ChainRun> {
    let order: Vec<usize> = (2..=p.n_qubits).collect();
    qubit_chain_run_ordered(p, &order)
}

/// The steady phase of link (1, i) extended off the steady subspace: once
/// the control qubit is 1 the phase no longer depends on qubit i, which is
/// exactly what makes the operator commute with every chain CNOT.
fn steady_phase(idx: usize, n: usize, link: usize, gamma: f64, delta: f64) -> f64 {
    let q1 = (idx >> (n - 1)) & 1;
    let qi = (idx >> (n - link)) & 1;
    if q1 == 1 {
        -delta
    } else if qi == 0 {
        -gamma
    } else {
        0.0
    }
}

pub(crate) fn qubit_chain_run_ordered(p: &ChainParams, order: &[usize]) -> Result<ChainRun> {
    p.validate()?;
    let n = p.n_qubits;
    let dim = 1usize << n;
    let mut amps = CVector::zeros(dim);
    amps[0] = p.alpha;
    amps[dim >> 1] = p.beta; // qubit 1 is the most significant bit

    let q1_mask = dim >> 1;
    // the reference interaction whose stability group everything must join:
    // U_{1,2} = steady_{1,2} . CNOT(1->2); for N = 1 there is no link
    let u12: Option<(usize, f64, f64)> =
        (n >= 2).then(|| (2usize, p.link_phases[0].0, p.link_phases[0].1));

    let mut residuals = Vec::new();
    let check_steady = |phase_of: &dyn Fn(usize) -> f64| -> f64 {
        let Some((_, g12, d12)) = u12 else { return 0.0 };
        // [S, U12] maps e_j to (s(pi(j)) - s(j)) * u12(pi(j)) e_pi(j) with
        // pi the CNOT(1->2) permutation and |u12| = 1, so the Frobenius
        // norm only needs the diagonal phases
        let _ = (g12, d12);
        let target_mask = 1usize << (n - 2);
        let mut sq = 0.0f64;
        for j in 0..dim {
            let pj = if j & q1_mask != 0 { j ^ target_mask } else { j };
            let a = C64::from_polar(1.0, phase_of(pj));
            let b = C64::from_polar(1.0, phase_of(j));
            sq += (a - b).norm_sqr();
        }
        sq.sqrt()
    };

    for &i in order {
        let (gamma, delta) = p.link_phases[i - 2];
        // CNOT(1 -> i): flip qubit i where the base qubit is 1
        let target_mask = 1usize << (n - i);
        for idx in 0..dim {
            if idx & q1_mask != 0 && idx & target_mask == 0 {
                amps.swap_rows(idx, idx | target_mask);
            }
        }
        let phase_of = move |idx: usize| steady_phase(idx, n, i, gamma, delta);
        residuals.push(check_steady(&phase_of));
        for idx in 0..dim {
            amps[idx] *= C64::from_polar(1.0, phase_of(idx));
        }
    }

    // environment phase: depends on the base qubit only
    let (ge, de) = p.env_phases;
    let env_phase = move |idx: usize| if idx & q1_mask != 0 { -de } else { -ge };
    residuals.push(check_steady(&env_phase));
    for idx in 0..dim {
        amps[idx] *= C64::from_polar(1.0, env_phase(idx));
    }

    if let Some(&worst) = residuals
        .iter()
        .max_by(|a, b| a.total_cmp(b))
        .filter(|&&r| r > 1e-12)
    {
        return Err(QdError::Consistency(format!(
            "steady operator broke the link stability condition, residual {worst}"
        )));
    }

    let pre_dephase = StateVector::new(vec![2; n], amps)?;
    let spec = ObservableSpec::computational(vec![2; n])?;
    let ensemble = dephase_analytic(&pre_dephase.outer(), &spec, GroupingMode::PerIndex)?;
    Ok(ChainRun { pre_dephase, ensemble, stability_residuals: residuals })
}

/// Von Neumann measurement coupling: system projectors paired with a
/// Hermitian pointer generator on a minimal apparatus space.
#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    pub system_spec: ObservableSpec,
    /// One coupling strength per eigenvalue block.
    pub couplings: Vec<f64>,
    pub pointer_generator: Operator,
    pub apparatus_init: StateVector,
}

impl MeasurementSetup {
    pub fn new(
        system_spec: ObservableSpec,
        couplings: Vec<f64>,
        pointer_generator: Operator,
        apparatus_init: StateVector,
    ) -> Result<Self> {
        if couplings.len() != system_spec.blocks().len() {
            return Err(QdError::Shape(format!(
                "{} couplings for {} outcome blocks",
                couplings.len(),
                system_spec.blocks().len()
            )));
        }
        if pointer_generator.kind() != OperatorKind::Hermitian {
            return Err(QdError::Kind("pointer generator must be hermitian".into()));
        }
        if apparatus_init.dim() != pointer_generator.side() {
            return Err(QdError::Shape("apparatus state/generator dimension mismatch".into()));
        }
        Ok(MeasurementSetup { system_spec, couplings, pointer_generator, apparatus_init })
    }

    /// Projector onto eigenvalue block `b` of the system observable.
    fn projector(&self, b: usize) -> CMatrix {
        let v = self.system_spec.eigenbasis();
        let n = self.system_spec.side();
        let mut p = CMatrix::zeros(n, n);
        for &k in &self.system_spec.blocks()[b] {
            let col = v.column(k);
            p += &col * col.adjoint();
        }
        p
    }
}

/// `exp(-i t sum_b lambda_b P_b (x) T_A)`, cross-checked against the
/// factorized form `sum_b P_b (x) exp(-i t lambda_b T_A)` which is exact
/// because the projectors are orthogonal.
pub fn von_neumann_unitary(setup: &MeasurementSetup, t: f64) -> Result<Operator> {
    let direct = matrix_exp(&von_neumann_generator(setup)?, -C_I * t)?;
    let factorized = von_neumann_factorized(setup, t)?;
    let dev = (direct.matrix() - factorized.matrix()).norm();
    if dev > 1e-9 {
        return Err(QdError::Consistency(format!(
            "spectral and factorized evolutions disagree by {dev}"
        )));
    }
    Ok(direct)
}

/// Interaction generator `sum_b lambda_b P_b (x) T_A`.
pub fn von_neumann_generator(setup: &MeasurementSetup) -> Result<Operator> {
    let s = setup.system_spec.side();
    let a = setup.pointer_generator.side();
    let mut h = CMatrix::zeros(s * a, s * a);
    for (b, &lambda) in setup.couplings.iter().enumerate() {
        let p = setup.projector(b) * C64::new(lambda, 0.0);
        h += p.kronecker(setup.pointer_generator.matrix());
    }
    let mut dims = setup.system_spec.dims().to_vec();
    dims.extend_from_slice(setup.pointer_generator.dims());
    Operator::hermitian(dims, h)
}

/// Factorized evolution `sum_b P_b (x) exp(-i t lambda_b T_A)`.
pub fn von_neumann_factorized(setup: &MeasurementSetup, t: f64) -> Result<Operator> {
    let s = setup.system_spec.side();
    let a = setup.pointer_generator.side();
    let mut u = CMatrix::zeros(s * a, s * a);
    for (b, &lambda) in setup.couplings.iter().enumerate() {
        let branch = matrix_exp(&setup.pointer_generator, -C_I * (t * lambda))?;
        u += setup.projector(b).kronecker(branch.matrix());
    }
    let mut dims = setup.system_spec.dims().to_vec();
    dims.extend_from_slice(setup.pointer_generator.dims());
    Operator::unitary(dims, u)
}

/// Branch overlap diagnostic `|<phi_m|phi_n>|` between apparatus states
/// correlated with distinct system eigenindices.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOverlap {
    pub m: usize,
    pub n: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    /// `U_int(t) (psi (x) apparatus_init)`.
    pub correlated: StateVector,
    /// Outcome table after phase-averaging the system-index coherences.
    pub report: EnsembleReport,
    /// Partial trace over the apparatus, the einselection baseline.
    pub reduced: DensityMatrix,
    /// Overlaps between populated apparatus branches.
    pub branch_overlaps: Vec<BranchOverlap>,
}

/// Full measurement: correlate, phase-average, and compare against the
/// partial-trace route.
pub fn measurement_pipeline(
    psi: &StateVector,
    setup: &MeasurementSetup,
    t: f64,
    seed: u64,
) -> Result<PipelineRun> {
    if psi.dim() != setup.system_spec.side() {
        return Err(QdError::Shape("state/system dimension mismatch".into()));
    }
    let u = von_neumann_unitary(setup, t)?;
    let correlated = psi.tensor(&setup.apparatus_init)?.apply(&u)?;

    let apparatus_identity = Operator::identity(setup.pointer_generator.dims().to_vec())?;
    let lifted_matrix = setup
        .system_spec
        .operator()
        .matrix()
        .kronecker(apparatus_identity.matrix());
    let mut lifted_dims = setup.system_spec.dims().to_vec();
    lifted_dims.extend_from_slice(setup.pointer_generator.dims());
    let lifted_spec =
        ObservableSpec::from_operator(Operator::hermitian(lifted_dims, lifted_matrix)?)?;

    let dephased =
        dephase_analytic(&correlated.outer(), &lifted_spec, GroupingMode::PerBlock)?;
    let report = born_ensemble_rho(&dephased, &lifted_spec)?.with_provenance(
        crate::dephasing::ReportMethod::Analytic,
        0,
        seed,
    );

    let system_subsystems: Vec<usize> = (0..psi.dims().len()).collect();
    let reduced = partial_trace(&correlated.outer(), &system_subsystems)?;

    let branch_overlaps = branch_overlaps(psi, setup, &correlated)?;
    Ok(PipelineRun { correlated, report, reduced, branch_overlaps })
}

fn branch_overlaps(
    psi: &StateVector,
    setup: &MeasurementSetup,
    correlated: &StateVector,
) -> Result<Vec<BranchOverlap>> {
    let coords = setup.system_spec.to_eigenbasis(psi)?;
    let s = setup.system_spec.side();
    let a = setup.apparatus_init.dim();
    let v = setup.system_spec.eigenbasis();
    let mut branches: Vec<(usize, CVector)> = Vec::new();
    for n in 0..s {
        let weight = coords[n];
        if weight.norm() <= 1e-12 {
            continue;
        }
        // apparatus component correlated with eigenvector n
        let mut w = CVector::zeros(a);
        for j in 0..a {
            let mut acc = C_ZERO;
            for k in 0..s {
                acc += v[(k, n)].conj() * correlated.amplitudes()[k * a + j];
            }
            w[j] = acc;
        }
        branches.push((n, w / weight));
    }
    let mut overlaps = Vec::new();
    for x in 0..branches.len() {
        for y in (x + 1)..branches.len() {
            let (m, ref wm) = branches[x];
            let (n, ref wn) = branches[y];
            overlaps.push(BranchOverlap { m, n, magnitude: wm.dotc(wn).norm() });
        }
    }
    Ok(overlaps)
}

#[derive(Debug, Clone)]
pub struct CatRun {
    /// `e^{-i gamma} alpha |E2, alive> + e^{-i delta} beta |E1, dead>`.
    pub transition: StateVector,
    /// Classical atom-cat ensemble diag(|alpha|^2, 0, 0, |beta|^2).
    pub ensemble: DensityMatrix,
    /// Two-outcome table: P(alive) = |alpha|^2, P(dead) = |beta|^2.
    pub report: EnsembleReport,
}

/// Atom-cat transition with injected random phases, dephased into the
/// classical ensemble. Basis index 0 is `|E2, alive>`, index 3 `|E1, dead>`.
pub fn cat_run(
    alpha: C64,
    beta: C64,
    phases: Option<(f64, f64)>,
    seed: u64,
) -> Result<CatRun> {
    check_amplitude_pair(alpha, beta)?;
    let (gamma, delta) = phases.unwrap_or_else(|| {
        let s = sample_phases(2, seed, 0);
        (s.gammas[0], s.gammas[1])
    });
    let amps = CVector::from_vec(vec![
        alpha * C64::from_polar(1.0, -gamma),
        C_ZERO,
        C_ZERO,
        beta * C64::from_polar(1.0, -delta),
    ]);
    let transition = StateVector::new(vec![2, 2], amps)?;
    let spec = ObservableSpec::computational(vec![2, 2])?;
    let ensemble = dephase_analytic(&transition.outer(), &spec, GroupingMode::PerIndex)?;
    let report = EnsembleReport {
        outcome_values: vec![0.0, 1.0],
        probabilities: vec![ensemble.matrix()[(0, 0)].re, ensemble.matrix()[(3, 3)].re],
        expectation: ensemble.matrix()[(3, 3)].re,
        method: crate::dephasing::ReportMethod::Analytic,
        samples: 0,
        seed,
    };
    Ok(CatRun { transition, ensemble, report })
}
