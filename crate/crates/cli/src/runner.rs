//! Experiment dispatch: turns a validated config into a report document
//! plus a one-line summary.

use crate::config::{ExperimentConfig, Mode, OutputFormat, Params};
use qdlab_core::dephasing::{
    born_ensemble_rho, decoherence_function, dephase_analytic, dephase_monte_carlo,
    frobenius_distance, EnsembleReport, ReportMethod,
};
use qdlab_core::models::{
    measurement_pipeline, qubit_chain_run, stern_gerlach_run, ChainParams,
    MeasurementSetup, SternGerlachParams,
};
use qdlab_core::linalg::sigma_x;
use qdlab_core::quotient::ObservableSpec;
use qdlab_core::{
    C64, CVector, DensityMatrix, GroupingMode, QdError, Result, StateVector,
};
use serde_json::json;

pub const SCHEMA_VERSION: u32 = 1;

pub struct RunOutput {
    /// Report document in the requested format.
    pub body: String,
    /// One-line human summary.
    pub summary: String,
}

fn json_doc(cfg: &ExperimentConfig, payload: serde_json::Value) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.kind.name(),
        "seed": cfg.seed,
        "result": payload,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialization");
    text.push('\n');
    text
}

fn report_output(
    cfg: &ExperimentConfig,
    report: &EnsembleReport,
    extra: serde_json::Value,
) -> RunOutput {
    let body = match cfg.format {
        OutputFormat::Json => {
            let mut payload = json!({ "report": report });
            if let (Some(obj), Some(extra)) = (payload.as_object_mut(), extra.as_object()) {
                for (k, v) in extra {
                    obj.insert(k.clone(), v.clone());
                }
            }
            json_doc(cfg, payload)
        }
        OutputFormat::Csv => report.to_csv(),
    };
    let summary = format!(
        "experiment={} seed={} expectation={}",
        cfg.kind.name(),
        cfg.seed,
        report.expectation
    );
    RunOutput { body, summary }
}

fn dephased_ensemble(
    cfg: &ExperimentConfig,
    rho: &DensityMatrix,
    spec: &ObservableSpec,
) -> Result<(DensityMatrix, ReportMethod, u64)> {
    match cfg.mode {
        Mode::Analytic => Ok((
            dephase_analytic(rho, spec, GroupingMode::PerIndex)?,
            ReportMethod::Analytic,
            0,
        )),
        Mode::MonteCarlo => {
            let samples = cfg.samples.expect("validated monte carlo config");
            Ok((
                dephase_monte_carlo(rho, spec, GroupingMode::PerIndex, samples, cfg.seed)?,
                ReportMethod::MonteCarlo,
                samples,
            ))
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match &cfg.params {
        Params::Dephase { state } => run_dephase(cfg, state),
        Params::SternGerlach { .. } => run_stern_gerlach(cfg),
        Params::QubitChain { n_qubits, alpha, beta } => {
            run_qubit_chain(cfg, *n_qubits, *alpha, *beta)
        }
        Params::Cat { alpha, beta } => run_cat(cfg, *alpha, *beta),
        Params::Measure { alpha, beta, t, coupling_minus, coupling_plus } => {
            run_measure(cfg, *alpha, *beta, *t, *coupling_minus, *coupling_plus)
        }
        Params::DecoherenceFn { overlap, n_factors } => {
            run_decoherence_fn(cfg, *overlap, *n_factors)
        }
        Params::Convergence { alpha, beta, n_seeds } => {
            run_convergence(cfg, *alpha, *beta, *n_seeds)
        }
    }
}

fn run_dephase(cfg: &ExperimentConfig, state: &[C64]) -> Result<RunOutput> {
    let psi = StateVector::new(vec![state.len()], CVector::from_vec(state.to_vec()))?;
    let spec = ObservableSpec::computational(vec![state.len()])?;
    let (rho, method, samples) = dephased_ensemble(cfg, &psi.outer(), &spec)?;
    let report = born_ensemble_rho(&rho, &spec)?.with_provenance(method, samples, cfg.seed);
    let extra = json!({ "max_off_diagonal": rho.max_off_diagonal() });
    Ok(report_output(cfg, &report, extra))
}

fn run_stern_gerlach(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let Params::SternGerlach { alpha, beta, omega, pz, t, z, inject_random_phase } =
        &cfg.params
    else {
        unreachable!("dispatched on params");
    };
    let params = SternGerlachParams {
        alpha: *alpha,
        beta: *beta,
        omega: *omega,
        pz: *pz,
        t: *t,
        z: *z,
        inject_random_phase: *inject_random_phase,
    };
    let run = stern_gerlach_run(&params, cfg.seed)?;
    let spec = ObservableSpec::computational(vec![2, 2])?;
    let (rho, method, samples) = dephased_ensemble(cfg, &run.correlated.outer(), &spec)?;
    // outcome +1 = spin up at index 0, -1 = spin down at index 3
    let p_up = rho.matrix()[(0, 0)].re;
    let p_down = rho.matrix()[(3, 3)].re;
    let report = EnsembleReport {
        outcome_values: vec![1.0, -1.0],
        probabilities: vec![p_up, p_down],
        expectation: p_up - p_down,
        method,
        samples,
        seed: cfg.seed,
    };
    let extra = json!({ "max_off_diagonal": rho.max_off_diagonal() });
    Ok(report_output(cfg, &report, extra))
}

fn run_qubit_chain(
    cfg: &ExperimentConfig,
    n_qubits: usize,
    alpha: C64,
    beta: C64,
) -> Result<RunOutput> {
    let params = ChainParams::with_random_phases(n_qubits, alpha, beta, cfg.seed)?;
    let run = qubit_chain_run(&params)?;
    let dim = run.ensemble.side();
    let (rho, method, samples) = match cfg.mode {
        Mode::Analytic => (run.ensemble.clone(), ReportMethod::Analytic, 0),
        Mode::MonteCarlo => {
            let spec = ObservableSpec::computational(vec![2; n_qubits])?;
            let m = cfg.samples.expect("validated monte carlo config");
            (
                dephase_monte_carlo(
                    &run.pre_dephase.outer(),
                    &spec,
                    GroupingMode::PerIndex,
                    m,
                    cfg.seed,
                )?,
                ReportMethod::MonteCarlo,
                m,
            )
        }
    };
    // base-qubit outcome: all-zeros branch vs all-ones branch
    let report = EnsembleReport {
        outcome_values: vec![0.0, 1.0],
        probabilities: vec![rho.matrix()[(0, 0)].re, rho.matrix()[(dim - 1, dim - 1)].re],
        expectation: rho.matrix()[(dim - 1, dim - 1)].re,
        method,
        samples,
        seed: cfg.seed,
    };
    let max_residual = run
        .stability_residuals
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    let extra = json!({
        "max_off_diagonal": rho.max_off_diagonal(),
        "max_stability_residual": max_residual,
    });
    Ok(report_output(cfg, &report, extra))
}

fn run_cat(cfg: &ExperimentConfig, alpha: C64, beta: C64) -> Result<RunOutput> {
    let run = qdlab_core::models::cat_run(alpha, beta, None, cfg.seed)?;
    let (report, rho) = match cfg.mode {
        Mode::Analytic => (run.report.clone(), run.ensemble.clone()),
        Mode::MonteCarlo => {
            let spec = ObservableSpec::computational(vec![2, 2])?;
            let m = cfg.samples.expect("validated monte carlo config");
            let rho = dephase_monte_carlo(
                &run.transition.outer(),
                &spec,
                GroupingMode::PerIndex,
                m,
                cfg.seed,
            )?;
            let report = EnsembleReport {
                outcome_values: vec![0.0, 1.0],
                probabilities: vec![rho.matrix()[(0, 0)].re, rho.matrix()[(3, 3)].re],
                expectation: rho.matrix()[(3, 3)].re,
                method: ReportMethod::MonteCarlo,
                samples: m,
                seed: cfg.seed,
            };
            (report, rho)
        }
    };
    let extra = json!({ "max_off_diagonal": rho.max_off_diagonal() });
    Ok(report_output(cfg, &report, extra))
}

fn run_measure(
    cfg: &ExperimentConfig,
    alpha: C64,
    beta: C64,
    t: f64,
    coupling_minus: f64,
    coupling_plus: f64,
) -> Result<RunOutput> {
    if cfg.mode == Mode::MonteCarlo {
        return Err(QdError::DegenerateRequest(
            "measure supports analytic mode only".into(),
        ));
    }
    let setup = MeasurementSetup::new(
        ObservableSpec::from_operator(qdlab_core::linalg::sigma_z())?,
        // block order is ascending in eigenvalue: -1 first
        vec![coupling_minus, coupling_plus],
        sigma_x(),
        StateVector::basis_state(vec![2], 0)?,
    )?;
    let psi = StateVector::qubit(alpha, beta)?;
    let run = measurement_pipeline(&psi, &setup, t, cfg.seed)?;
    let max_overlap = run
        .branch_overlaps
        .iter()
        .map(|o| o.magnitude)
        .fold(0.0f64, f64::max);
    let reduced_diag: Vec<f64> = (0..run.reduced.side())
        .map(|k| run.reduced.matrix()[(k, k)].re)
        .collect();
    let extra = json!({
        "max_branch_overlap": max_overlap,
        "reduced_diagonal": reduced_diag,
    });
    Ok(report_output(cfg, &run.report, extra))
}

fn run_decoherence_fn(
    cfg: &ExperimentConfig,
    overlap: f64,
    n_factors: usize,
) -> Result<RunOutput> {
    // product environment: every factor pair has real overlap c, so the
    // total branch overlap after k factors is c^k and Gamma is additive
    let a = StateVector::basis_state(vec![2], 0)?;
    let b = StateVector::new(
        vec![2],
        CVector::from_vec(vec![
            C64::new(overlap, 0.0),
            C64::new((1.0 - overlap * overlap).sqrt(), 0.0),
        ]),
    )?;
    let gamma_per_factor = decoherence_function(&[a], &[b])?[0];
    let gammas: Vec<f64> = (1..=n_factors)
        .map(|k| (k as f64 * gamma_per_factor).max(qdlab_core::dephasing::GAMMA_FLOOR))
        .collect();
    let body = match cfg.format {
        OutputFormat::Json => json_doc(
            cfg,
            json!({ "overlap": overlap, "gamma_per_factor": gamma_per_factor, "gammas": gammas }),
        ),
        OutputFormat::Csv => {
            let mut out = String::from("n_factors,gamma\n");
            for (k, g) in gammas.iter().enumerate() {
                out.push_str(&format!("{},{}\n", k + 1, g));
            }
            out
        }
    };
    let last = gammas.last().copied().unwrap_or(0.0);
    let summary = format!(
        "experiment={} seed={} gamma_n={last}",
        cfg.kind.name(),
        cfg.seed
    );
    Ok(RunOutput { body, summary })
}

pub const CONVERGENCE_SAMPLE_COUNTS: [u64; 4] = [100, 1_000, 10_000, 100_000];

/// Least-squares slope of ln(err) against ln(M).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn run_convergence(
    cfg: &ExperimentConfig,
    alpha: C64,
    beta: C64,
    n_seeds: u64,
) -> Result<RunOutput> {
    let psi = StateVector::qubit(alpha, beta)?;
    let spec = ObservableSpec::computational(vec![2])?;
    let rho = psi.outer();
    let exact = dephase_analytic(&rho, &spec, GroupingMode::PerIndex)?;
    let mut points = Vec::new();
    for &m in &CONVERGENCE_SAMPLE_COUNTS {
        let mut total = 0.0;
        for k in 0..n_seeds {
            let est = dephase_monte_carlo(
                &rho,
                &spec,
                GroupingMode::PerIndex,
                m,
                cfg.seed.wrapping_add(k),
            )?;
            total += frobenius_distance(&est, &exact);
        }
        points.push((m as f64, total / n_seeds as f64));
    }
    let slope = log_log_slope(&points);
    let body = match cfg.format {
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = points
                .iter()
                .map(|(m, e)| json!({ "samples": *m as u64, "frobenius_error": e }))
                .collect();
            json_doc(cfg, json!({ "points": rows, "slope": slope }))
        }
        OutputFormat::Csv => {
            let mut out = String::from("samples,frobenius_error\n");
            for (m, e) in &points {
                out.push_str(&format!("{},{}\n", *m as u64, e));
            }
            out
        }
    };
    let summary = format!(
        "experiment={} seed={} slope={slope}",
        cfg.kind.name(),
        cfg.seed
    );
    Ok(RunOutput { body, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn base(kind: ExperimentKind, params: Params) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            seed: 42,
            samples: None,
            mode: Mode::Analytic,
            output: None,
            format: OutputFormat::Json,
            params,
        }
    }

    #[test]
    fn chain_report_matches_amplitudes() {
        let cfg = base(
            ExperimentKind::QubitChain,
            Params::QubitChain {
                n_qubits: 3,
                alpha: C64::new(0.6, 0.0),
                beta: C64::new(0.8, 0.0),
            },
        );
        let out = run_experiment(&cfg).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.body).unwrap();
        assert_eq!(doc["schema_version"], 1);
        let probs = doc["result"]["report"]["probabilities"].as_array().unwrap();
        assert!((probs[0].as_f64().unwrap() - 0.36).abs() < 1e-12);
        assert!((probs[1].as_f64().unwrap() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn dephase_csv_has_header() {
        let mut cfg = base(
            ExperimentKind::Dephase,
            Params::Dephase { state: vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)] },
        );
        cfg.format = OutputFormat::Csv;
        let out = run_experiment(&cfg).unwrap();
        assert!(out.body.starts_with("outcome,probability\n"));
    }

    #[test]
    fn convergence_slope_is_near_minus_half() {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let cfg = base(
            ExperimentKind::Convergence,
            Params::Convergence { alpha: h, beta: h, n_seeds: 3 },
        );
        let out = run_experiment(&cfg).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.body).unwrap();
        let slope = doc["result"]["slope"].as_f64().unwrap();
        assert!((-0.6..=-0.4).contains(&slope), "slope {slope}");
    }

    #[test]
    fn decoherence_series_is_linear_in_factors() {
        let cfg = base(
            ExperimentKind::DecoherenceFn,
            Params::DecoherenceFn { overlap: 0.9, n_factors: 5 },
        );
        let out = run_experiment(&cfg).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.body).unwrap();
        let gammas = doc["result"]["gammas"].as_array().unwrap();
        let g1 = gammas[0].as_f64().unwrap();
        let g5 = gammas[4].as_f64().unwrap();
        assert!((g5 - 5.0 * g1).abs() < 1e-12);
        assert!((g1 - (0.9f64 * 0.9).ln()).abs() < 1e-12);
    }

    #[test]
    fn measure_rejects_monte_carlo() {
        let mut cfg = base(
            ExperimentKind::Measure,
            Params::Measure {
                alpha: C64::new(0.6, 0.0),
                beta: C64::new(0.8, 0.0),
                t: 1.0,
                coupling_minus: 0.0,
                coupling_plus: std::f64::consts::FRAC_PI_2,
            },
        );
        cfg.mode = Mode::MonteCarlo;
        cfg.samples = Some(10);
        assert!(run_experiment(&cfg).is_err());
    }
}
