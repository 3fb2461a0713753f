//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; any failure fails the build.

use qdlab_core::dephasing::{
    born_ensemble_rho, decoherence_function, dephase_analytic, dephase_monte_carlo,
    frobenius_distance, random_hermitian, random_phase_unitary, random_state,
    sample_phases,
};
use qdlab_core::linalg::{hadamard, sigma_x, sigma_z};
use qdlab_core::models::{
    measurement_pipeline, qubit_chain_run, stern_gerlach_run, von_neumann_factorized,
    von_neumann_unitary, ChainParams, MeasurementSetup, SternGerlachParams,
};
use qdlab_core::quotient::{class_label, commutant_member, superposition_closed};
use qdlab_core::{
    matrix_exp, C64, CMatrix, CVector, GroupingMode, ObservableSpec, Operator, StateVector,
};
use std::time::Instant;

fn gate(number: u32, name: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("[PASS] criterion {number}: {name}"),
        Err(why) => {
            println!("[FAIL] criterion {number}: {name}: {why}");
            panic!("criterion {number} ({name}) failed: {why}");
        }
    }
}

fn check(cond: bool, why: impl Fn() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(why()) }
}

fn expectation(psi: &StateVector, op: &Operator) -> f64 {
    psi.amplitudes().dotc(&(op.matrix() * psi.amplitudes())).re
}

#[test]
fn criterion_01_born_rule_exactness() {
    gate(1, "Born-rule exactness", (|| {
        let start = Instant::now();
        let dims = [2usize, 3, 4, 8];
        for &dim in &dims {
            let spec =
                ObservableSpec::from_operator(random_hermitian(dim, dim as u64, 0).unwrap())
                    .unwrap();
            for stream in 0..250u64 {
                let psi = random_state(dim, 1000 + stream, 1).unwrap();
                let coords = spec.to_eigenbasis(&psi).unwrap();
                let rho = dephase_analytic(&psi.outer(), &spec, GroupingMode::PerIndex)
                    .unwrap();
                let sigma = spec.eigenbasis().adjoint() * rho.matrix() * spec.eigenbasis();
                for k in 0..dim {
                    let dev = (sigma[(k, k)].re - coords[k].norm_sqr()).abs();
                    check(dev <= 1e-12, || {
                        format!("dim {dim} stream {stream}: diagonal entry off by {dev}")
                    })?;
                }
                let tr = (spec.operator().matrix() * rho.matrix()).trace().re;
                let quad = expectation(&psi, spec.operator());
                check((tr - quad).abs() <= 1e-12, || {
                    format!("dim {dim} stream {stream}: Tr(O rho) off by {}", tr - quad)
                })?;
            }
        }
        let elapsed = start.elapsed();
        check(elapsed.as_secs_f64() < 10.0, || {
            format!("runtime {elapsed:?} exceeded 10 s")
        })
    })());
}

#[test]
fn criterion_02_monte_carlo_convergence() {
    gate(2, "Monte Carlo convergence", (|| {
        let start = Instant::now();
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = StateVector::qubit(h, h).unwrap();
        let spec = ObservableSpec::computational(vec![2]).unwrap();
        let rho = psi.outer();
        let exact = dephase_analytic(&rho, &spec, GroupingMode::PerIndex).unwrap();
        let counts = [100u64, 1_000, 10_000, 100_000];
        let mut points = Vec::new();
        for &m in &counts {
            let mut total = 0.0;
            for seed in 0..10u64 {
                let est =
                    dephase_monte_carlo(&rho, &spec, GroupingMode::PerIndex, m, seed)
                        .unwrap();
                total += frobenius_distance(&est, &exact);
            }
            points.push(((m as f64).ln(), (total / 10.0).ln()));
        }
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        check((-0.6..=-0.4).contains(&slope), || {
            format!("log-log slope {slope} outside [-0.6, -0.4]")
        })?;
        let at_1e4 =
            dephase_monte_carlo(&rho, &spec, GroupingMode::PerIndex, 10_000, 0).unwrap();
        check(at_1e4.max_off_diagonal() <= 0.05, || {
            format!("max off-diagonal {} > 0.05 at M = 1e4", at_1e4.max_off_diagonal())
        })?;
        let elapsed = start.elapsed();
        check(elapsed.as_secs_f64() < 60.0, || {
            format!("runtime {elapsed:?} exceeded 60 s")
        })
    })());
}

#[test]
fn criterion_03_commutant_soundness() {
    gate(3, "commutant soundness", (|| {
        for dim in 2usize..=6 {
            let spec =
                ObservableSpec::from_operator(random_hermitian(dim, 31, dim as u64).unwrap())
                    .unwrap();
            for stream in 0..20u64 {
                let sample = sample_phases(dim, 77, stream);
                let u =
                    random_phase_unitary(&sample, &spec, GroupingMode::PerIndex).unwrap();
                let (member, residual) =
                    commutant_member(&u, &[spec.operator()], 1e-12).unwrap();
                check(member, || {
                    format!("dim {dim} stream {stream}: residual {residual} > 1e-12")
                })?;
            }
        }
        let (member, residual) = commutant_member(&hadamard(), &[&sigma_z()], 1e-12).unwrap();
        check(!member && residual >= 1.0, || {
            format!("Hadamard vs sigma_z residual {residual}, expected >= 1")
        })
    })());
}

#[test]
fn criterion_04_superposition_non_closure() {
    gate(4, "superposition non-closure", (|| {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = ObservableSpec::computational(vec![2]).unwrap();
        let mk = |a: C64, b: C64| {
            StateVector::new(vec![2], CVector::from_vec(vec![a, b])).unwrap()
        };
        let plus = mk(C64::new(h, 0.0), C64::new(h, 0.0));
        let minus = mk(C64::new(h, 0.0), C64::new(-h, 0.0));
        let plus_i = mk(C64::new(h, 0.0), C64::new(0.0, h));
        let triple = [&plus, &minus, &plus_i];
        for psi in triple {
            let label = class_label(psi, &spec).unwrap();
            for (k, &p) in label.probabilities.iter().enumerate() {
                check((p - 0.5).abs() <= 1e-12, || {
                    format!("triple label entry {k} is {p}, expected 0.5")
                })?;
            }
        }
        let one = C64::new(1.0, 0.0);
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let (closed, label) =
                superposition_closed(triple[i], triple[j], (one, one), &spec).unwrap();
            check(!closed, || format!("sum of triple members {i},{j} stayed in class"))?;
            let dev = label
                .probabilities
                .iter()
                .map(|p| (p - 0.5).abs())
                .fold(0.0f64, f64::max);
            check(dev >= 0.1, || {
                format!("sum {i}+{j} label {:?} too close to (0.5, 0.5)", label.probabilities)
            })?;
        }
        // |+> + |-> collapses onto the (1, 0) class exactly
        let (_, label) = superposition_closed(&plus, &minus, (one, one), &spec).unwrap();
        check((label.probabilities[0] - 1.0).abs() <= 1e-12, || {
            format!("|+> + |-> label {:?}, expected (1, 0)", label.probabilities)
        })
    })());
}

#[test]
fn criterion_05_stern_gerlach() {
    gate(5, "Stern-Gerlach ensemble", (|| {
        for seed in 0..100u64 {
            let pair = random_state(2, seed, 0).unwrap();
            let (alpha, beta) = (pair.amplitudes()[0], pair.amplitudes()[1]);
            let knobs = sample_phases(4, seed, 1).gammas;
            let params = SternGerlachParams {
                alpha,
                beta,
                omega: knobs[0],
                pz: knobs[1],
                t: knobs[2],
                z: knobs[3],
                inject_random_phase: true,
            };
            let run = stern_gerlach_run(&params, seed).unwrap();
            let mut want = CMatrix::zeros(4, 4);
            want[(0, 0)] = C64::new(alpha.norm_sqr(), 0.0);
            want[(3, 3)] = C64::new(beta.norm_sqr(), 0.0);
            let dev = (run.ensemble.matrix() - want).norm();
            check(dev <= 1e-12, || format!("seed {seed}: ensemble off by {dev}"))?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_06_qubit_chain() {
    gate(6, "qubit chain", (|| {
        let start = Instant::now();
        let alpha = C64::new(0.6, 0.0);
        let beta = C64::new(0.0, 0.8);
        for n in 1usize..=10 {
            let params =
                ChainParams::with_random_phases(n, alpha, beta, 500 + n as u64).unwrap();
            let run = qubit_chain_run(&params).unwrap();
            let amps = run.pre_dephase.amplitudes();
            let dim = 1usize << n;
            check((amps[0].norm() - 0.6).abs() <= 1e-12, || {
                format!("N={n}: |alpha| branch magnitude {}", amps[0].norm())
            })?;
            check((amps[dim - 1].norm() - 0.8).abs() <= 1e-12, || {
                format!("N={n}: |beta| branch magnitude {}", amps[dim - 1].norm())
            })?;
            let e = run.ensemble.matrix();
            check((e[(0, 0)].re - 0.36).abs() <= 1e-12, || {
                format!("N={n}: P(0...0) = {}", e[(0, 0)].re)
            })?;
            check((e[(dim - 1, dim - 1)].re - 0.64).abs() <= 1e-12, || {
                format!("N={n}: P(1...1) = {}", e[(dim - 1, dim - 1)].re)
            })?;
            check(run.ensemble.max_off_diagonal() <= 1e-12, || {
                format!("N={n}: residual coherence {}", run.ensemble.max_off_diagonal())
            })?;
            check((run.ensemble.trace().re - 1.0).abs() <= 1e-12, || {
                format!("N={n}: trace {}", run.ensemble.trace().re)
            })?;
            let worst = run.stability_residuals.iter().copied().fold(0.0f64, f64::max);
            check(worst <= 1e-12, || format!("N={n}: stability residual {worst}"))?;
        }
        let elapsed = start.elapsed();
        check(elapsed.as_secs_f64() < 30.0, || {
            format!("runtime {elapsed:?} exceeded 30 s")
        })
    })());
}

#[test]
fn criterion_07_von_neumann_factorization() {
    gate(7, "von Neumann factorization", (|| {
        for case in 0..100u64 {
            let sdim = 2 + (case % 3) as usize;
            let adim = 2 + ((case / 3) % 3) as usize;
            let spec =
                ObservableSpec::from_operator(random_hermitian(sdim, case, 0).unwrap())
                    .unwrap();
            let generator = random_hermitian(adim, case, 1).unwrap();
            let couplings: Vec<f64> = sample_phases(spec.blocks().len(), case, 2)
                .gammas
                .iter()
                .map(|g| g - std::f64::consts::PI)
                .collect();
            let init = random_state(adim, case, 3).unwrap();
            let setup = MeasurementSetup::new(spec, couplings, generator, init).unwrap();
            let t = 0.7;
            let direct = von_neumann_unitary(&setup, t).unwrap();
            let factorized = von_neumann_factorized(&setup, t).unwrap();
            let dev = (direct.matrix() - factorized.matrix()).norm();
            check(dev <= 1e-9, || format!("case {case}: routes disagree by {dev}"))?;
            let lifted = setup
                .system_spec
                .operator()
                .tensor(&Operator::identity(vec![adim]).unwrap())
                .unwrap();
            let (member, residual) = commutant_member(&direct, &[&lifted], 1e-10).unwrap();
            check(member, || {
                format!("case {case}: [U, O x I] residual {residual} > 1e-10")
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_08_einselection_cross_check() {
    gate(8, "einselection cross-check", (|| {
        let setup = MeasurementSetup::new(
            ObservableSpec::from_operator(sigma_z()).unwrap(),
            vec![0.0, std::f64::consts::FRAC_PI_2],
            sigma_x(),
            StateVector::basis_state(vec![2], 0).unwrap(),
        )
        .unwrap();
        let psi = StateVector::qubit(C64::new(0.6, 0.0), C64::new(0.8, 0.0)).unwrap();
        // t = 1: branch apparatus states |0> and -i|1> are exactly orthogonal
        let run = measurement_pipeline(&psi, &setup, 1.0, 0).unwrap();
        let worst_overlap = run
            .branch_overlaps
            .iter()
            .map(|o| o.magnitude)
            .fold(0.0f64, f64::max);
        check(worst_overlap <= 1e-12, || {
            format!("orthogonal case has branch overlap {worst_overlap}")
        })?;
        let reduced_report = born_ensemble_rho(&run.reduced, &setup.system_spec)
            .map_err(|e| e.to_string())?;
        for (k, (a, b)) in run
            .report
            .probabilities
            .iter()
            .zip(reduced_report.probabilities.iter())
            .enumerate()
        {
            check((a - b).abs() <= 1e-10, || {
                format!("outcome {k}: dephased {a} vs partial trace {b}")
            })?;
        }
        // t = 0.1: branches barely separated, overlap must be flagged
        let run = measurement_pipeline(&psi, &setup, 0.1, 0).unwrap();
        check(
            run.branch_overlaps.iter().any(|o| o.magnitude > 1e-12),
            || "non-orthogonal case produced no overlap diagnostics".to_string(),
        )
    })());
}

#[test]
fn criterion_09_decoherence_function_baseline() {
    gate(9, "decoherence-function baseline", (|| {
        // evolving environment branches under distinct couplings
        let init = StateVector::basis_state(vec![2], 0).unwrap();
        let mut e1 = Vec::new();
        let mut e2 = Vec::new();
        for step in 0..50 {
            let t = step as f64 * 0.1;
            let u1 = matrix_exp(&sigma_x(), C64::new(0.0, -t)).unwrap();
            let u2 = matrix_exp(&sigma_x(), C64::new(0.0, -1.7 * t)).unwrap();
            e1.push(init.apply(&u1).unwrap());
            e2.push(init.apply(&u2).unwrap());
        }
        let gammas = decoherence_function(&e1, &e2).unwrap();
        for (k, &g) in gammas.iter().enumerate() {
            check(g <= 1e-12, || format!("step {k}: Gamma = {g} > 1e-12"))?;
        }
        // product-state oracle: Gamma(N) = N ln c^2
        let c = 0.9f64;
        let factor_a = StateVector::basis_state(vec![2], 0).unwrap();
        let factor_b = StateVector::new(
            vec![2],
            CVector::from_vec(vec![
                C64::new(c, 0.0),
                C64::new((1.0 - c * c).sqrt(), 0.0),
            ]),
        )
        .unwrap();
        let mut big_a = factor_a.clone();
        let mut big_b = factor_b.clone();
        for n in 1usize..=8 {
            let gamma = decoherence_function(
                std::slice::from_ref(&big_a),
                std::slice::from_ref(&big_b),
            )
            .unwrap()[0];
            let oracle = n as f64 * (c * c).ln();
            check((gamma - oracle).abs() <= 1e-9, || {
                format!("N={n}: Gamma {gamma} vs oracle {oracle}")
            })?;
            if n < 8 {
                big_a = big_a.tensor(&factor_a).unwrap();
                big_b = big_b.tensor(&factor_b).unwrap();
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_10_determinism() {
    gate(10, "determinism", (|| {
        // byte-identical CLI reports for identical (config, seed)
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config_path = dir.path().join("chain.cfg");
        std::fs::write(
            &config_path,
            "[experiment]\nkind = qubit_chain\nn_qubits = 4\nseed = 42\n\
             mode = monte_carlo\nsamples = 500\nalpha = 0.6+0j\nbeta = 0.8+0j\n",
        )
        .map_err(|e| e.to_string())?;
        let mut bodies = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("report-{run}.json"));
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_qdlab"))
                .args(["run"])
                .arg(&config_path)
                .arg("--out")
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            check(status.success(), || format!("run {run} exited with {status}"))?;
            bodies.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        check(bodies[0] == bodies[1], || {
            "repeated invocation produced different bytes".to_string()
        })?;
        // Monte Carlo estimates are a fixed-stream-order mean, so any
        // worker partition of the sample budget reproduces the result
        let psi = random_state(3, 5, 0).unwrap();
        let spec = ObservableSpec::computational(vec![3]).unwrap();
        let whole =
            dephase_monte_carlo(&psi.outer(), &spec, GroupingMode::PerIndex, 60, 8)
                .unwrap();
        for workers in [2usize, 3, 4] {
            let mut acc = CMatrix::zeros(3, 3);
            let chunk = 60 / workers as u64;
            for w in 0..workers as u64 {
                for stream in (w * chunk)..((w + 1) * chunk) {
                    let sample = sample_phases(3, 8, stream);
                    let u = random_phase_unitary(&sample, &spec, GroupingMode::PerIndex)
                        .unwrap();
                    acc += u.matrix() * psi.outer().matrix() * u.matrix().adjoint();
                }
            }
            acc /= C64::new(60.0, 0.0);
            let dev = (whole.matrix() - &acc).norm();
            check(dev <= 1e-13, || {
                format!("{workers}-worker partition deviates by {dev}")
            })?;
        }
        Ok(())
    })());
}
