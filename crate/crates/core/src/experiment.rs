//! Sweeps over subspace size, time step and noise ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::SpectralDecomposition;
use crate::filters::{self, FilterMode, FilterVerdict, GroundEnergy};
use crate::gevp::{self, GevpOutcome, RegularizationMethod, RegularizationSpec};
use crate::krylov::{count_distinct_circuits, ElementSource, KrylovAssembler, KrylovConfig, KrylovMatrices, Variant};
use crate::noise::NoiseSpec;
use crate::pauli::PauliSum;
use crate::record::ExperimentRecord;
use crate::reference::{select_references, OrbitalPairing, ReferenceState};

/// Absolute errors are floored here before taking logarithms.
pub const ERROR_FLOOR: f64 = 1e-16;

/// A Hamiltonian with its exact spectrum and ranked references.
#[derive(Clone, Debug)]
pub struct System {
    pub id: String,
    pub hamiltonian: PauliSum,
    pub spectrum: SpectralDecomposition,
    pub exact_gs: f64,
    pub h_norm: f64,
    pub references: Vec<ReferenceState>,
    pub degenerate_ground_state: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SystemOptions {
    pub dense_cap: usize,
    pub max_refs: usize,
    pub grouping: bool,
    pub pairing: OrbitalPairing,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self {
            dense_cap: crate::pauli::DEFAULT_DENSE_CAP,
            max_refs: 4,
            grouping: true,
            pairing: OrbitalPairing::Interleaved,
        }
    }
}

impl System {
    pub fn new(id: impl Into<String>, hamiltonian: PauliSum, opts: SystemOptions) -> Result<Self> {
        let spectrum = SpectralDecomposition::diagonalize(&hamiltonian, opts.dense_cap)?;
        let gs = spectrum.ground_state();
        let h_norm = spectrum.spectral_norm();
        if h_norm == 0.0 {
            return Err(Error::invalid("Hamiltonian has zero spectral norm"));
        }
        let grouping = opts.grouping && hamiltonian.n_qubits().is_multiple_of(2);
        let references = select_references(&gs.state, hamiltonian.n_qubits(), opts.max_refs, grouping, opts.pairing)?;
        Ok(Self {
            id: id.into(),
            exact_gs: gs.energy,
            degenerate_ground_state: gs.degenerate,
            h_norm,
            spectrum,
            hamiltonian,
            references,
        })
    }

    pub fn references(&self, b: usize) -> Result<&[ReferenceState]> {
        if b == 0 || b > self.references.len() {
            return Err(Error::Config(format!(
                "block size {b} requested but only {} references are available",
                self.references.len()
            )));
        }
        Ok(&self.references[..b])
    }

    /// N_F of the noise-scaled threshold: ‖H‖ for QKS-U, √(Σ|c_i|) for QKS-H.
    pub fn n_f(&self, variant: Variant) -> f64 {
        match variant {
            Variant::QksU => self.h_norm,
            Variant::QksH => self.hamiltonian.one_norm().sqrt(),
        }
    }

    pub fn default_config(&self, variant: Variant, k: usize, b: usize) -> KrylovConfig {
        KrylovConfig::for_variant(variant, k, b, self.h_norm)
    }

    pub fn assembler(&self, cfg: KrylovConfig, source: ElementSource) -> Result<KrylovAssembler<'_>> {
        KrylovAssembler::new(self.references(cfg.b)?, &self.spectrum, &self.hamiltonian, cfg, source)
    }
}

/// Everything needed to turn one (S, T) pair into a record.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub record: ExperimentRecord,
    pub outcome: GevpOutcome,
    pub verdicts: Vec<FilterVerdict>,
}

/// Ground-state estimate for one pair of Krylov matrices.
pub fn evaluate(
    system: &System,
    m: &KrylovMatrices,
    reg: RegularizationMethod,
    filter: FilterMode,
    noise_level: f64,
    seed: Option<u64>,
) -> Result<Evaluation> {
    let cfg = m.config;
    let spec = RegularizationSpec { method: reg, noise_level, n_f: system.n_f(cfg.variant) };
    let outcome = gevp::solve_gevp(&m.s, &m.t, &spec, false)?;
    let mut record = ExperimentRecord {
        system: system.id.clone(),
        variant: cfg.variant,
        b: cfg.b,
        k: cfg.k,
        t: cfg.t,
        tau: cfg.tau,
        reg_method: reg.to_string(),
        threshold: outcome.threshold().value,
        seed,
        kappa_pre: outcome.condition_number(),
        kappa_post: None,
        gs_energy: None,
        abs_error: None,
        deviation: None,
        eliminated: true,
        distinct_circuits: count_distinct_circuits(&cfg),
    };
    let sol = match &outcome {
        GevpOutcome::Solved(sol) => sol,
        GevpOutcome::Eliminated { .. } => return Ok(Evaluation { record, outcome, verdicts: Vec::new() }),
    };
    record.kappa_post = Some(sol.condition_number_kept);
    let verdicts = match cfg.variant {
        Variant::QksU => {
            let scale = if cfg.normalize_hamiltonian { system.h_norm } else { 1.0 };
            filters::unitary_filter(&sol.eigenvalues, cfg.tau, scale)?
        }
        Variant::QksH => filters::imaginary_filter(&sol.eigenvalues),
    };
    if let GroundEnergy::Selected { energy, verdict } =
        filters::ground_energy(&verdicts, filter == FilterMode::Filtering)?
    {
        record.eliminated = false;
        record.gs_energy = Some(energy);
        record.abs_error = Some((energy - system.exact_gs).abs());
        if filter != FilterMode::Off {
            record.deviation = Some(verdict.deviation);
        }
    }
    Ok(Evaluation { record, outcome, verdicts })
}

/// Shared settings of a sweep.
#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub regs: Vec<RegularizationMethod>,
    pub filter: FilterMode,
}

fn noiseless_series(
    system: &System,
    cfg: KrylovConfig,
    ks: &[usize],
    settings: &SweepSettings,
) -> Result<Vec<ExperimentRecord>> {
    let k_max = ks.iter().copied().max().unwrap_or(0);
    let mut asm = system.assembler(cfg, ElementSource::Exact)?;
    asm.grow_to(k_max)?;
    let full = asm.matrices();
    let mut out = Vec::with_capacity(ks.len() * settings.regs.len());
    for &k in ks {
        let m = full.truncated(k)?;
        for &reg in &settings.regs {
            out.push(evaluate(system, &m, reg, settings.filter, 0.0, None)?.record);
        }
    }
    Ok(out)
}

/// One record per (B, K, regularization) cell of the noiseless subspace-growth grid.
pub fn sweep_subspace(
    system: &System,
    base: KrylovConfig,
    b_list: &[usize],
    k_list: &[usize],
    settings: &SweepSettings,
) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    for &b in b_list {
        out.extend(noiseless_series(system, KrylovConfig { b, ..base }, k_list, settings)?);
    }
    Ok(out)
}

/// Per-iteration records for each generation time step.
pub fn sweep_timestep(
    system: &System,
    base: KrylovConfig,
    t_list: &[f64],
    k_max: usize,
    settings: &SweepSettings,
) -> Result<Vec<ExperimentRecord>> {
    let ks: Vec<usize> = (0..=k_max).collect();
    let mut out = Vec::new();
    for &t in t_list {
        let cfg = KrylovConfig { t, tau: t, ..base };
        cfg.validate()?;
        out.extend(noiseless_series(system, cfg, &ks, settings)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_runs: usize,
    pub geo_mean: f64,
    pub geo_std: f64,
}

/// Geometric mean and geometric standard deviation (exp of the sample
/// standard deviation of ln x), after flooring at [`ERROR_FLOOR`].
pub fn geometric_stats(xs: &[f64]) -> Option<EnsembleStats> {
    if xs.is_empty() {
        return None;
    }
    let logs: Vec<f64> = xs.iter().map(|x| x.max(ERROR_FLOOR).ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = if logs.len() > 1 { logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Some(EnsembleStats { n_runs: xs.len(), geo_mean: mean.exp(), geo_std: var.sqrt().exp() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationStats {
    pub reg_method: String,
    pub k: usize,
    pub eliminated_runs: usize,
    pub abs_error: Option<EnsembleStats>,
    pub deviation: Option<EnsembleStats>,
    pub kappa_pre: Option<EnsembleStats>,
    pub kappa_post: Option<EnsembleStats>,
}

#[derive(Clone, Debug)]
pub struct EnsembleReport {
    /// Every run's records, ordered by run, then K, then regularization.
    pub records: Vec<ExperimentRecord>,
    /// Statistics per regularization method, per iteration.
    pub stats: Vec<(RegularizationMethod, Vec<IterationStats>)>,
}

fn noisy_run(
    system: &System,
    cfg: KrylovConfig,
    spec: NoiseSpec,
    settings: &SweepSettings,
) -> Result<Vec<ExperimentRecord>> {
    let mut asm = system.assembler(cfg, ElementSource::Sampled(spec))?;
    asm.grow_to(cfg.k)?;
    let full = asm.matrices();
    let mut out = Vec::new();
    for k in 0..=cfg.k {
        let m = full.truncated(k)?;
        for &reg in &settings.regs {
            out.push(evaluate(system, &m, reg, settings.filter, spec.noise_level(), Some(spec.seed))?.record);
        }
    }
    Ok(out)
}

fn map_runs<F>(n_runs: usize, f: F) -> Result<Vec<Vec<ExperimentRecord>>>
where
    F: Fn(usize) -> Result<Vec<ExperimentRecord>> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_runs).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_runs).map(f).collect()
    }
}

/// Independent sampling runs with seeds `spec.seed + run`, aggregated per
/// iteration and regularization method.
pub fn run_noisy_ensemble(
    system: &System,
    cfg: KrylovConfig,
    settings: &SweepSettings,
    n_runs: usize,
    spec: NoiseSpec,
) -> Result<EnsembleReport> {
    if n_runs < 2 {
        return Err(Error::Config("a noise ensemble needs at least 2 runs".into()));
    }
    spec.validate()?;
    let runs = map_runs(n_runs, |run| {
        let run_spec = NoiseSpec { seed: spec.seed.wrapping_add(run as u64), ..spec };
        noisy_run(system, cfg, run_spec, settings)
    })?;
    let records: Vec<ExperimentRecord> = runs.into_iter().flatten().collect();

    let stats = settings
        .regs
        .iter()
        .map(|&reg| {
            let label = reg.to_string();
            let per_k = (0..=cfg.k)
                .map(|k| {
                    let cell: Vec<&ExperimentRecord> =
                        records.iter().filter(|r| r.k == k && r.reg_method == label).collect();
                    let collect = |f: &dyn Fn(&ExperimentRecord) -> Option<f64>| -> Option<EnsembleStats> {
                        geometric_stats(&cell.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
                    };
                    IterationStats {
                        reg_method: label.clone(),
                        k,
                        eliminated_runs: cell.iter().filter(|r| r.eliminated).count(),
                        abs_error: collect(&|r| r.abs_error),
                        deviation: collect(&|r| r.deviation),
                        kappa_pre: collect(&|r| Some(r.kappa_pre)),
                        kappa_post: collect(&|r| r.kappa_post),
                    }
                })
                .collect();
            (reg, per_k)
        })
        .collect();
    Ok(EnsembleReport { records, stats })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularValueRun {
    pub seed: Option<u64>,
    /// log10 of the singular values of S, descending.
    pub log10_sigma: Vec<f64>,
    pub elbow_index: Option<usize>,
}

/// Singular-value spectra of S at fixed K: one noiseless run when `spec` is
/// `None`, otherwise `n_runs` sampled runs.
pub fn dump_singular_values(
    system: &System,
    cfg: KrylovConfig,
    spec: Option<NoiseSpec>,
    n_runs: usize,
) -> Result<Vec<SingularValueRun>> {
    let one = |source: ElementSource, seed: Option<u64>| -> Result<SingularValueRun> {
        let mut asm = system.assembler(cfg, source)?;
        asm.grow_to(cfg.k)?;
        let sigma = gevp::svd(&asm.matrices().s)?.sigma;
        Ok(SingularValueRun {
            seed,
            elbow_index: gevp::elbow_index(&sigma),
            log10_sigma: sigma.iter().map(|s| s.max(f64::MIN_POSITIVE).log10()).collect(),
        })
    };
    match spec {
        None => Ok(vec![one(ElementSource::Exact, None)?]),
        Some(spec) => {
            spec.validate()?;
            (0..n_runs.max(1))
                .map(|run| {
                    let seed = spec.seed.wrapping_add(run as u64);
                    one(ElementSource::Sampled(NoiseSpec { seed, ..spec }), Some(seed))
                })
                .collect()
        }
    }
}

/// Per-index geometric statistics over singular-value runs of equal length.
pub fn singular_value_stats(runs: &[SingularValueRun]) -> Vec<EnsembleStats> {
    let len = runs.iter().map(|r| r.log10_sigma.len()).min().unwrap_or(0);
    (0..len)
        .filter_map(|i| {
            let xs: Vec<f64> = runs.iter().map(|r| 10f64.powf(r.log10_sigma[i])).collect();
            geometric_stats(&xs)
        })
        .collect()
}
