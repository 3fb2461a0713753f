//! Flat sectioned key-value experiment configs.
//!
//! One `[experiment]` header followed by scalar `key = value` lines.
//! Complex values use the `re+imj` convention of the matrix exchange
//! format. Parsing collects every validation error instead of stopping at
//! the first.

use qdlab_core::exchange::{format_complex, parse_complex};
use qdlab_core::C64;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Dephase,
    SternGerlach,
    QubitChain,
    Cat,
    Measure,
    DecoherenceFn,
    Convergence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Dephase => "dephase",
            ExperimentKind::SternGerlach => "stern_gerlach",
            ExperimentKind::QubitChain => "qubit_chain",
            ExperimentKind::Cat => "cat",
            ExperimentKind::Measure => "measure",
            ExperimentKind::DecoherenceFn => "decoherence_fn",
            ExperimentKind::Convergence => "convergence",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "dephase" => ExperimentKind::Dephase,
            "stern_gerlach" => ExperimentKind::SternGerlach,
            "qubit_chain" => ExperimentKind::QubitChain,
            "cat" => ExperimentKind::Cat,
            "measure" => ExperimentKind::Measure,
            "decoherence_fn" => ExperimentKind::DecoherenceFn,
            "convergence" => ExperimentKind::Convergence,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    MonteCarlo,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }

}

/// Experiment-specific parameters, one variant per runner.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    /// Arbitrary pure state dephased against the computational observable.
    Dephase { state: Vec<C64> },
    SternGerlach {
        alpha: C64,
        beta: C64,
        omega: f64,
        pz: f64,
        t: f64,
        z: f64,
        inject_random_phase: bool,
    },
    QubitChain { n_qubits: usize, alpha: C64, beta: C64 },
    Cat { alpha: C64, beta: C64 },
    /// Qubit measured along sigma_z through a sigma_x pointer coupling.
    Measure { alpha: C64, beta: C64, t: f64, coupling_minus: f64, coupling_plus: f64 },
    /// Gamma series for product environments with per-factor overlap c.
    DecoherenceFn { overlap: f64, n_factors: usize },
    /// Monte Carlo error-vs-samples sweep for a qubit state.
    Convergence { alpha: C64, beta: C64, n_seeds: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub samples: Option<u64>,
    pub mode: Mode,
    pub output: Option<String>,
    pub format: OutputFormat,
    pub params: Params,
}

fn check_pair(errors: &mut Vec<String>, alpha: C64, beta: C64) {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        errors.push(format!(
            "alpha/beta: |alpha|^2 + |beta|^2 = {norm}, must be 1 within {NORM_TOL}"
        ));
    }
}

impl ExperimentConfig {
    /// Re-validates cross-field invariants; parsing already enforces them,
    /// this re-checks configs built or mutated in code.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if self.mode == Mode::MonteCarlo {
            match self.samples {
                None => errors.push("samples: required when mode = monte_carlo".into()),
                Some(0) => errors.push("samples: must be >= 1".into()),
                Some(_) => {}
            }
        }
        match &self.params {
            Params::Dephase { state } => {
                if state.len() < 2 {
                    errors.push("state: needs at least 2 amplitudes".into());
                }
                let norm: f64 = state.iter().map(|c| c.norm_sqr()).sum();
                if (norm - 1.0).abs() > NORM_TOL {
                    errors.push(format!("state: squared norm {norm}, must be 1 within {NORM_TOL}"));
                }
            }
            Params::SternGerlach { alpha, beta, t, .. } => {
                check_pair(&mut errors, *alpha, *beta);
                if *t < 0.0 {
                    errors.push("t: must be >= 0".into());
                }
            }
            Params::QubitChain { n_qubits, alpha, beta } => {
                check_pair(&mut errors, *alpha, *beta);
                if *n_qubits == 0 {
                    errors.push("n_qubits: must be >= 1".into());
                }
            }
            Params::Cat { alpha, beta } => check_pair(&mut errors, *alpha, *beta),
            Params::Measure { alpha, beta, t, .. } => {
                check_pair(&mut errors, *alpha, *beta);
                if *t < 0.0 {
                    errors.push("t: must be >= 0".into());
                }
            }
            Params::DecoherenceFn { overlap, n_factors } => {
                if !(*overlap > 0.0 && *overlap <= 1.0) {
                    errors.push("overlap: must lie in (0, 1]".into());
                }
                if *n_factors == 0 {
                    errors.push("n_factors: must be >= 1".into());
                }
            }
            Params::Convergence { alpha, beta, n_seeds } => {
                check_pair(&mut errors, *alpha, *beta);
                if *n_seeds == 0 {
                    errors.push("n_seeds: must be >= 1".into());
                }
            }
        }
        if errors.is_empty() { Ok(()) } else { Err(errors) }
    }
}

struct Fields {
    map: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl Fields {
    fn get(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key).map(String::as_str);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.map.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }
}

fn req<'a>(f: &'a Fields, key: &str, errors: &mut Vec<String>) -> Option<&'a str> {
    match f.get(key) {
        Some(v) => Some(v),
        None => {
            errors.push(format!("{key}: required key missing"));
            None
        }
    }
}

fn parse_f64(f: &Fields, key: &str, default: f64, errors: &mut Vec<String>) -> f64 {
    match f.get(key) {
        None => default,
        Some(v) => v.parse().unwrap_or_else(|_| {
            errors.push(format!("{key}: `{v}` is not a number"));
            default
        }),
    }
}

fn parse_usize(f: &Fields, key: &str, errors: &mut Vec<String>) -> Option<usize> {
    let v = req(f, key, errors)?;
    match v.parse() {
        Ok(n) => Some(n),
        Err(_) => {
            errors.push(format!("{key}: `{v}` is not a non-negative integer"));
            None
        }
    }
}

fn parse_c64(f: &Fields, key: &str, errors: &mut Vec<String>) -> Option<C64> {
    let v = req(f, key, errors)?;
    match parse_complex(v) {
        Ok(c) => Some(c),
        Err(e) => {
            errors.push(format!("{key}: {e}"));
            None
        }
    }
}

fn parse_bool(f: &Fields, key: &str, default: bool, errors: &mut Vec<String>) -> bool {
    match f.get(key) {
        None => default,
        Some("true") => true,
        Some("false") => false,
        Some(v) => {
            errors.push(format!("{key}: `{v}` is not true/false"));
            default
        }
    }
}

/// Parses and validates a config document; on failure returns every error
/// found, not just the first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let mut errors = Vec::new();
    let mut map = BTreeMap::new();
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "[experiment]" {
            if saw_header {
                errors.push(format!("line {}: duplicate [experiment] header", lineno + 1));
            }
            saw_header = true;
            continue;
        }
        if line.starts_with('[') {
            errors.push(format!("line {}: unknown section `{line}`", lineno + 1));
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {}: expected `key = value`", lineno + 1));
            continue;
        };
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            errors.push(format!("line {}: duplicate key `{key}`", lineno + 1));
        }
    }
    if !saw_header {
        errors.push("missing [experiment] header".into());
    }
    let fields = Fields { map, used: Default::default() };

    let kind = match req(&fields, "kind", &mut errors) {
        Some(v) => match ExperimentKind::from_name(v) {
            Some(k) => Some(k),
            None => {
                errors.push(format!("kind: unknown experiment `{v}`"));
                None
            }
        },
        None => None,
    };

    let seed: u64 = match fields.get("seed") {
        None => 0,
        Some(v) => v.parse().unwrap_or_else(|_| {
            errors.push(format!("seed: `{v}` is not a non-negative integer"));
            0
        }),
    };
    let samples: Option<u64> = match fields.get("samples") {
        None => None,
        Some(v) => match v.parse() {
            Ok(n) => Some(n),
            Err(_) => {
                errors.push(format!("samples: `{v}` is not a non-negative integer"));
                None
            }
        },
    };
    let mode = match fields.get("mode") {
        None | Some("analytic") => Mode::Analytic,
        Some("monte_carlo") => Mode::MonteCarlo,
        Some(v) => {
            errors.push(format!("mode: `{v}` is not analytic/monte_carlo"));
            Mode::Analytic
        }
    };
    let output = fields.get("output").map(str::to_string);
    let format = match fields.get("format") {
        None | Some("json") => OutputFormat::Json,
        Some("csv") => OutputFormat::Csv,
        Some(v) => {
            errors.push(format!("format: `{v}` is not json/csv"));
            OutputFormat::Json
        }
    };

    let params = kind.and_then(|kind| parse_params(kind, &fields, &mut errors));

    for key in fields.unused() {
        errors.push(format!("{key}: unknown key"));
    }

    let (Some(kind), Some(params)) = (kind, params) else {
        return Err(errors);
    };
    let cfg = ExperimentConfig { kind, seed, samples, mode, output, format, params };
    if let Err(more) = cfg.validate() {
        errors.extend(more);
    }
    if errors.is_empty() { Ok(cfg) } else { Err(errors) }
}

fn parse_params(kind: ExperimentKind, f: &Fields, errors: &mut Vec<String>) -> Option<Params> {
    match kind {
        ExperimentKind::Dephase => {
            let dim = parse_usize(f, "dim", errors)?;
            let mut state = Vec::with_capacity(dim);
            let mut complete = true;
            for k in 0..dim {
                match parse_c64(f, &format!("state_{k}"), errors) {
                    Some(c) => state.push(c),
                    None => complete = false,
                }
            }
            complete.then_some(Params::Dephase { state })
        }
        ExperimentKind::SternGerlach => {
            let alpha = parse_c64(f, "alpha", errors);
            let beta = parse_c64(f, "beta", errors);
            Some(Params::SternGerlach {
                alpha: alpha?,
                beta: beta?,
                omega: parse_f64(f, "omega", 1.0, errors),
                pz: parse_f64(f, "pz", 1.0, errors),
                t: parse_f64(f, "t", 1.0, errors),
                z: parse_f64(f, "z", 0.0, errors),
                inject_random_phase: parse_bool(f, "inject_random_phase", true, errors),
            })
        }
        ExperimentKind::QubitChain => {
            let n_qubits = parse_usize(f, "n_qubits", errors);
            let alpha = parse_c64(f, "alpha", errors);
            let beta = parse_c64(f, "beta", errors);
            Some(Params::QubitChain { n_qubits: n_qubits?, alpha: alpha?, beta: beta? })
        }
        ExperimentKind::Cat => {
            let alpha = parse_c64(f, "alpha", errors);
            let beta = parse_c64(f, "beta", errors);
            Some(Params::Cat { alpha: alpha?, beta: beta? })
        }
        ExperimentKind::Measure => {
            let alpha = parse_c64(f, "alpha", errors);
            let beta = parse_c64(f, "beta", errors);
            Some(Params::Measure {
                alpha: alpha?,
                beta: beta?,
                t: parse_f64(f, "t", 1.0, errors),
                coupling_minus: parse_f64(f, "coupling_minus", 0.0, errors),
                coupling_plus: parse_f64(
                    f,
                    "coupling_plus",
                    std::f64::consts::FRAC_PI_2,
                    errors,
                ),
            })
        }
        ExperimentKind::DecoherenceFn => {
            let overlap = match req(f, "overlap", errors)?.parse() {
                Ok(v) => v,
                Err(_) => {
                    errors.push("overlap: not a number".into());
                    return None;
                }
            };
            let n_factors = parse_usize(f, "n_factors", errors)?;
            Some(Params::DecoherenceFn { overlap, n_factors })
        }
        ExperimentKind::Convergence => {
            let alpha = parse_c64(f, "alpha", errors);
            let beta = parse_c64(f, "beta", errors);
            let n_seeds = match f.get("n_seeds") {
                None => 10,
                Some(v) => v.parse().unwrap_or_else(|_| {
                    errors.push(format!("n_seeds: `{v}` is not a non-negative integer"));
                    10
                }),
            };
            Some(Params::Convergence { alpha: alpha?, beta: beta?, n_seeds })
        }
    }
}

/// Canonical text form; `parse_config(render(cfg)) == cfg` for valid configs.
pub fn render(cfg: &ExperimentConfig) -> String {
    let mut out = String::from("[experiment]\n");
    let _ = writeln!(out, "kind = {}", cfg.kind.name());
    let _ = writeln!(out, "seed = {}", cfg.seed);
    if let Some(samples) = cfg.samples {
        let _ = writeln!(out, "samples = {samples}");
    }
    let _ = writeln!(out, "mode = {}", cfg.mode.name());
    if let Some(output) = &cfg.output {
        let _ = writeln!(out, "output = {output}");
    }
    let _ = writeln!(out, "format = {}", cfg.format.name());
    match &cfg.params {
        Params::Dephase { state } => {
            let _ = writeln!(out, "dim = {}", state.len());
            for (k, c) in state.iter().enumerate() {
                let _ = writeln!(out, "state_{k} = {}", format_complex(*c));
            }
        }
        Params::SternGerlach { alpha, beta, omega, pz, t, z, inject_random_phase } => {
            let _ = writeln!(out, "alpha = {}", format_complex(*alpha));
            let _ = writeln!(out, "beta = {}", format_complex(*beta));
            let _ = writeln!(out, "omega = {omega}");
            let _ = writeln!(out, "pz = {pz}");
            let _ = writeln!(out, "t = {t}");
            let _ = writeln!(out, "z = {z}");
            let _ = writeln!(out, "inject_random_phase = {inject_random_phase}");
        }
        Params::QubitChain { n_qubits, alpha, beta } => {
            let _ = writeln!(out, "n_qubits = {n_qubits}");
            let _ = writeln!(out, "alpha = {}", format_complex(*alpha));
            let _ = writeln!(out, "beta = {}", format_complex(*beta));
        }
        Params::Cat { alpha, beta } => {
            let _ = writeln!(out, "alpha = {}", format_complex(*alpha));
            let _ = writeln!(out, "beta = {}", format_complex(*beta));
        }
        Params::Measure { alpha, beta, t, coupling_minus, coupling_plus } => {
            let _ = writeln!(out, "alpha = {}", format_complex(*alpha));
            let _ = writeln!(out, "beta = {}", format_complex(*beta));
            let _ = writeln!(out, "t = {t}");
            let _ = writeln!(out, "coupling_minus = {coupling_minus}");
            let _ = writeln!(out, "coupling_plus = {coupling_plus}");
        }
        Params::DecoherenceFn { overlap, n_factors } => {
            let _ = writeln!(out, "overlap = {overlap}");
            let _ = writeln!(out, "n_factors = {n_factors}");
        }
        Params::Convergence { alpha, beta, n_seeds } => {
            let _ = writeln!(out, "alpha = {}", format_complex(*alpha));
            let _ = writeln!(out, "beta = {}", format_complex(*beta));
            let _ = writeln!(out, "n_seeds = {n_seeds}");
        }
    }
    out
}
