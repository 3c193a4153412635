//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns a JSON document,
//! so the page needs no generated TypeScript types.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qkrylov::experiment::{self, IterationStats, SingularValueRun, SweepSettings, System, SystemOptions};
use qkrylov::filters::FilterMode;
use qkrylov::gevp::RegularizationMethod;
use qkrylov::hamiltonian_io::SystemSource;
use qkrylov::noise::NoiseSpec;
use qkrylov::record::ExperimentRecord;
use qkrylov::{KrylovConfig, Variant};

/// Largest Hilbert-space dimension the page will diagonalize.
const WEB_DENSE_CAP: usize = 1 << 8;
const MAX_K: usize = 40;
const MAX_RUNS: usize = 200;

#[derive(Serialize)]
struct SystemInfo {
    id: String,
    n_qubits: usize,
    exact_gs: f64,
    h_norm: f64,
    reference: String,
    reference_overlap: f64,
}

#[derive(Serialize)]
struct Convergence {
    system: SystemInfo,
    records: Vec<ExperimentRecord>,
}

#[derive(Serialize)]
struct NoisyConvergence {
    system: SystemInfo,
    shots: u64,
    runs: usize,
    stats: Vec<IterationStats>,
}

#[derive(Serialize)]
struct Spectrum {
    system: SystemInfo,
    runs: Vec<SingularValueRun>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Only built-in models: the page has no file access.
fn load(system: &str) -> Result<System, String> {
    let source = SystemSource::parse(system).map_err(err)?;
    if matches!(source, SystemSource::File(_)) {
        return Err(format!("expected model:<kind>:<N>[:params], got '{system}'"));
    }
    let h = source.load().map_err(err)?;
    let opts = SystemOptions { dense_cap: WEB_DENSE_CAP, ..SystemOptions::default() };
    System::new(source.id(), h, opts).map_err(err)
}

fn info(s: &System) -> SystemInfo {
    SystemInfo {
        id: s.id.clone(),
        n_qubits: s.hamiltonian.n_qubits(),
        exact_gs: s.exact_gs,
        h_norm: s.h_norm,
        reference: s.references[0].label.clone(),
        reference_overlap: s.references[0].overlap_sq,
    }
}

fn config(s: &System, variant: &str, k: usize) -> Result<KrylovConfig, String> {
    if k > MAX_K {
        return Err(format!("K is limited to {MAX_K} in the browser"));
    }
    let variant: Variant = variant.parse().map_err(err)?;
    Ok(s.default_config(variant, k, 1))
}

fn settings(regs: &str, filter: &str) -> Result<SweepSettings, String> {
    let regs = regs
        .split(',')
        .filter(|r| !r.trim().is_empty())
        .map(|r| r.parse::<RegularizationMethod>().map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    if regs.is_empty() {
        return Err("at least one regularization method is required".into());
    }
    Ok(SweepSettings { regs, filter: filter.parse::<FilterMode>().map_err(err)? })
}

fn check_runs(runs: usize, min: usize) -> Result<(), String> {
    if runs < min || runs > MAX_RUNS {
        return Err(format!("runs must be between {min} and {MAX_RUNS}"));
    }
    Ok(())
}

/// Noiseless per-iteration records for K = 0..=k_max.
pub fn convergence_json(system: &str, variant: &str, k_max: usize, regs: &str, filter: &str) -> Result<String, String> {
    let s = load(system)?;
    let cfg = config(&s, variant, k_max)?;
    let ks: Vec<usize> = (0..=k_max).collect();
    let records = experiment::sweep_subspace(&s, cfg, &[1], &ks, &settings(regs, filter)?).map_err(err)?;
    serde_json::to_string(&Convergence { system: info(&s), records }).map_err(err)
}

/// Geometric-mean statistics of a shot-noise ensemble.
pub fn noisy_convergence_json(
    system: &str,
    variant: &str,
    k_max: usize,
    regs: &str,
    filter: &str,
    shots: u64,
    runs: usize,
    seed: u64,
) -> Result<String, String> {
    check_runs(runs, 2)?;
    let s = load(system)?;
    let cfg = config(&s, variant, k_max)?;
    let spec = NoiseSpec::with_shots(shots, seed);
    let report = experiment::run_noisy_ensemble(&s, cfg, &settings(regs, filter)?, runs, spec).map_err(err)?;
    let stats = report.stats.into_iter().flat_map(|(_, v)| v).collect();
    serde_json::to_string(&NoisyConvergence { system: info(&s), shots, runs, stats }).map_err(err)
}

/// Singular values of S at fixed K; noiseless when `shots` is 0.
pub fn singular_values_json(
    system: &str,
    variant: &str,
    k: usize,
    shots: u64,
    runs: usize,
    seed: u64,
) -> Result<String, String> {
    check_runs(runs, 1)?;
    let s = load(system)?;
    let cfg = config(&s, variant, k)?;
    let spec = (shots > 0).then(|| NoiseSpec::with_shots(shots, seed));
    let runs = experiment::dump_singular_values(&s, cfg, spec, runs).map_err(err)?;
    serde_json::to_string(&Spectrum { system: info(&s), runs }).map_err(err)
}

#[wasm_bindgen]
pub fn convergence(system: &str, variant: &str, k_max: usize, regs: &str, filter: &str) -> Result<String, JsValue> {
    convergence_json(system, variant, k_max, regs, filter).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn noisy_convergence(
    system: &str,
    variant: &str,
    k_max: usize,
    regs: &str,
    filter: &str,
    shots: u64,
    runs: usize,
    seed: u64,
) -> Result<String, JsValue> {
    noisy_convergence_json(system, variant, k_max, regs, filter, shots, runs, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn singular_values(
    system: &str,
    variant: &str,
    k: usize,
    shots: u64,
    runs: usize,
    seed: u64,
) -> Result<String, JsValue> {
    singular_values_json(system, variant, k, shots, runs, seed).map_err(|e| JsValue::from_str(&e))
}
