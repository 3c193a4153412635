//! Command-line front end.
//!
//! Settings come from an optional TOML file (`--config`) and are overridden
//! by flags. Output goes to `--out <dir>` or, without it, to stdout.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiment::{self, EnsembleReport, SingularValueRun, SweepSettings, System, SystemOptions};
use crate::filters::FilterMode;
use crate::gevp::RegularizationMethod;
use crate::hamiltonian_io::SystemSource;
use crate::krylov::{ElementSource, KrylovConfig, Variant};
use crate::noise::NoiseSpec;
use crate::record::{self, format_float, Format};
use crate::reference::OrbitalPairing;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const DEFAULT_K: usize = 15;
const DEFAULT_RUNS: usize = 100;
const DEFAULT_SHOTS: u64 = 1_000_000;
/// Default time-step sweep, in multiples of the variant's default step.
const DEFAULT_T_FACTORS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

#[derive(Parser, Debug)]
#[command(name = "qkrylov", version, about = "Quantum Krylov ground-state experiments on a statevector simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Noiseless error and conditioning over a (B, K) grid.
    SweepSubspace(CommonArgs),
    /// Noiseless convergence for several generation time steps.
    SweepTimestep(CommonArgs),
    /// Shot-noise ensemble with per-iteration geometric statistics.
    NoisyEnsemble(CommonArgs),
    /// Singular values of S at fixed K, with the detected elbow.
    SingularValues(CommonArgs),
    /// One GEVP solve at fixed (B, K).
    SolveOnce(CommonArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hamiltonian file (JSON or text) or `model:tfim:N[:J:g]` / `model:heisenberg:N[:J]`.
    #[arg(long)]
    pub system: Option<String>,
    /// qks-u or qks-h.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shots per real/imaginary part of each matrix element.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Output directory; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Krylov iterations (maximum for sweeps).
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Block size.
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// Comma-separated K values (sweep-subspace).
    #[arg(long = "K-list", value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    /// Comma-separated block sizes (sweep-subspace).
    #[arg(long = "B-list", value_delimiter = ',')]
    pub b_list: Option<Vec<usize>>,
    /// Comma-separated generation time steps in a.u. (sweep-timestep).
    #[arg(long = "t-list", value_delimiter = ',')]
    pub t_list: Option<Vec<f64>>,
    /// Generation time step in a.u.
    #[arg(long)]
    pub t: Option<f64>,
    /// Evolution time of the QKS-U T matrix in a.u.
    #[arg(long)]
    pub tau: Option<f64>,
    /// none, fixed:<sigma>, elbow, lit_a, lit_b; repeatable or comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub reg: Vec<String>,
    /// off, metric_only or filtering.
    #[arg(long)]
    pub filter: Option<String>,
    /// Largest Hilbert-space dimension handled densely.
    #[arg(long)]
    pub dense_cap: Option<usize>,
    /// Use single basis-state references without occupation grouping.
    #[arg(long)]
    pub no_grouping: bool,
    /// interleaved or blocked qubit-to-spin-orbital pairing.
    #[arg(long)]
    pub pairing: Option<String>,
    /// Sample noise in singular-values (noiseless otherwise).
    #[arg(long)]
    pub noisy: bool,
}

/// Contents of a `--config` TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<String>,
    pub variant: Option<String>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "K_list")]
    pub k_list: Option<Vec<usize>>,
    #[serde(rename = "B_list")]
    pub b_list: Option<Vec<usize>>,
    pub t_list: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub tau: Option<f64>,
    pub reg: Option<Vec<String>>,
    pub filter: Option<String>,
    pub dense_cap: Option<usize>,
    pub grouping: Option<bool>,
    pub pairing: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub noise: Option<NoiseConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub enabled: Option<bool>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Fully validated settings of one invocation.
#[derive(Debug)]
pub struct Resolved {
    pub source: SystemSource,
    pub variant: Variant,
    pub b: usize,
    pub k: usize,
    pub k_list: Option<Vec<usize>>,
    pub b_list: Option<Vec<usize>>,
    pub t_list: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub tau: Option<f64>,
    pub regs: Vec<RegularizationMethod>,
    pub filter: FilterMode,
    pub options: SystemOptions,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub shots: u64,
    pub seed: u64,
    pub runs: usize,
    pub noisy: bool,
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(name: &str, v: T) -> Result<T> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn positive_time(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be a positive number, got {v}")))
    }
}

pub fn resolve(args: &CommonArgs) -> Result<Resolved> {
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let noise = cfg.noise.unwrap_or_default();

    let system = args
        .system
        .clone()
        .or(cfg.system)
        .ok_or_else(|| Error::Config("--system is required (file path or model:<kind>:<N>[:params])".into()))?;
    let variant: Variant = args.variant.as_deref().or(cfg.variant.as_deref()).unwrap_or("qks-u").parse()?;
    let reg_strings =
        if args.reg.is_empty() { cfg.reg.unwrap_or_else(|| vec!["none".into()]) } else { args.reg.clone() };
    let regs = reg_strings.iter().map(|s| s.parse()).collect::<Result<Vec<RegularizationMethod>>>()?;
    let pairing = match args.pairing.as_deref().or(cfg.pairing.as_deref()).unwrap_or("interleaved") {
        "interleaved" => OrbitalPairing::Interleaved,
        "blocked" => OrbitalPairing::Blocked,
        other => return Err(Error::Config(format!("unknown pairing '{other}'"))),
    };
    let defaults = SystemOptions::default();
    let options = SystemOptions {
        dense_cap: positive("dense cap", args.dense_cap.or(cfg.dense_cap).unwrap_or(defaults.dense_cap))?,
        grouping: !args.no_grouping && cfg.grouping.unwrap_or(true),
        pairing,
        ..defaults
    };
    let t_list = args.t_list.clone().or(cfg.t_list);
    if let Some(ts) = &t_list {
        if ts.is_empty() {
            return Err(Error::Config("empty t list".into()));
        }
        for &t in ts {
            positive_time("t", t)?;
        }
    }
    let b_list = args.b_list.clone().or(cfg.b_list);
    if let Some(bs) = &b_list {
        if bs.is_empty() {
            return Err(Error::Config("empty B list".into()));
        }
        for &b in bs {
            positive("B", b)?;
        }
    }
    let k_list = args.k_list.clone().or(cfg.k_list);
    if k_list.as_ref().is_some_and(Vec::is_empty) {
        return Err(Error::Config("empty K list".into()));
    }
    Ok(Resolved {
        source: SystemSource::parse(&system)?,
        variant,
        b: positive("B", args.b.or(cfg.b).unwrap_or(1))?,
        k: args.k.or(cfg.k).unwrap_or(DEFAULT_K),
        k_list,
        b_list,
        t_list,
        t: args.t.or(cfg.t).map(|t| positive_time("t", t)).transpose()?,
        tau: args.tau.or(cfg.tau).map(|t| positive_time("tau", t)).transpose()?,
        regs,
        filter: args.filter.as_deref().or(cfg.filter.as_deref()).map_or(Ok(FilterMode::MetricOnly), str::parse)?,
        options,
        out: args.out.clone().or(cfg.out),
        format: args.format.as_deref().or(cfg.format.as_deref()).map_or(Ok(Format::Csv), str::parse)?,
        shots: positive("shots", args.shots.or(noise.shots).unwrap_or(DEFAULT_SHOTS))?,
        seed: args.seed.or(noise.seed).unwrap_or(0),
        runs: positive("runs", args.runs.or(noise.runs).unwrap_or(DEFAULT_RUNS))?,
        noisy: args.noisy || noise.enabled.unwrap_or(false),
    })
}

impl Resolved {
    pub fn load_system(&self) -> Result<System> {
        let h = self.source.load().map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read {}: {io}", self.source.id())),
            Error::InvalidInput(msg) => Error::Config(msg),
            other => other,
        })?;
        System::new(self.source.id(), h, self.options)
    }

    /// Krylov configuration at `k`, with `t`/`tau` overrides applied and validated.
    pub fn krylov_config(&self, system: &System, k: usize) -> Result<KrylovConfig> {
        let mut cfg = system.default_config(self.variant, k, self.b);
        if let Some(t) = self.t {
            cfg.t = t;
            if self.tau.is_none() {
                cfg.tau = t;
            }
        }
        if let Some(tau) = self.tau {
            cfg.tau = tau;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn settings(&self) -> SweepSettings {
        SweepSettings { regs: self.regs.clone(), filter: self.filter }
    }

    fn noise(&self) -> NoiseSpec {
        NoiseSpec::with_shots(self.shots, self.seed)
    }

    fn extension(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Destination for the named output files of one command.
struct Sink<'a> {
    dir: Option<&'a Path>,
    stdout: &'a mut dyn Write,
}

impl Sink<'_> {
    fn emit(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        match self.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let file = std::fs::File::create(dir.join(name))?;
                let mut buf = std::io::BufWriter::new(file);
                write(&mut buf)?;
                buf.flush()?;
                Ok(())
            }
            None => write(&mut *self.stdout),
        }
    }
}

fn stats_rows(report: &EnsembleReport) -> Vec<[String; 12]> {
    let cell = |s: Option<experiment::EnsembleStats>| match s {
        Some(s) => (format_float(s.geo_mean), format_float(s.geo_std)),
        None => (String::new(), String::new()),
    };
    let mut rows = Vec::new();
    for (_, per_k) in &report.stats {
        for it in per_k {
            let (err_m, err_s) = cell(it.abs_error);
            let (dev_m, dev_s) = cell(it.deviation);
            let (kp_m, kp_s) = cell(it.kappa_pre);
            let (kq_m, kq_s) = cell(it.kappa_post);
            let n_runs = it.kappa_pre.map_or(0, |s| s.n_runs);
            rows.push([
                it.reg_method.clone(),
                it.k.to_string(),
                n_runs.to_string(),
                it.eliminated_runs.to_string(),
                err_m,
                err_s,
                dev_m,
                dev_s,
                kp_m,
                kp_s,
                kq_m,
                kq_s,
            ]);
        }
    }
    rows
}

pub const STATS_COLUMNS: [&str; 12] = [
    "reg_method",
    "K",
    "n_runs",
    "eliminated_runs",
    "abs_error_geo_mean",
    "abs_error_geo_std",
    "deviation_geo_mean",
    "deviation_geo_std",
    "kappa_pre_geo_mean",
    "kappa_pre_geo_std",
    "kappa_post_geo_mean",
    "kappa_post_geo_std",
];

pub const SINGULAR_COLUMNS: [&str; 5] = ["run", "seed", "index", "log10_sigma", "elbow"];

fn write_csv<const N: usize>(out: &mut dyn Write, header: [&str; N], rows: &[[String; N]]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn singular_rows(runs: &[SingularValueRun]) -> Vec<[String; 5]> {
    let mut rows = Vec::new();
    for (run, r) in runs.iter().enumerate() {
        for (i, &v) in r.log10_sigma.iter().enumerate() {
            rows.push([
                run.to_string(),
                r.seed.map_or_else(|| "exact".to_string(), |s| s.to_string()),
                i.to_string(),
                format_float(v),
                (r.elbow_index == Some(i)).to_string(),
            ]);
        }
    }
    rows
}

/// Runs one parsed command, writing results to `--out` or `stdout`.
pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<()> {
    let (args, name) = match command {
        Command::SweepSubspace(a) => (a, "sweep-subspace"),
        Command::SweepTimestep(a) => (a, "sweep-timestep"),
        Command::NoisyEnsemble(a) => (a, "noisy-ensemble"),
        Command::SingularValues(a) => (a, "singular-values"),
        Command::SolveOnce(a) => (a, "solve-once"),
    };
    let r = resolve(args)?;
    let system = r.load_system()?;
    let ext = r.extension();
    let mut sink = Sink { dir: r.out.as_deref(), stdout };
    let records_name = format!("{name}.{ext}");

    match command {
        Command::SweepSubspace(_) => {
            let base = r.krylov_config(&system, r.k)?;
            let ks = r.k_list.clone().unwrap_or_else(|| (0..=r.k).collect());
            let bs = r.b_list.clone().unwrap_or_else(|| vec![r.b]);
            for &b in &bs {
                r.krylov_config(&system, 0).map(|c| KrylovConfig { b, ..c })?.validate()?;
                system.references(b)?;
            }
            let records = experiment::sweep_subspace(&system, base, &bs, &ks, &r.settings())?;
            sink.emit(&records_name, |w| record::write_records_to(&records, r.format, w))
        }
        Command::SweepTimestep(_) => {
            let base = r.krylov_config(&system, r.k)?;
            let ts = r.t_list.clone().unwrap_or_else(|| DEFAULT_T_FACTORS.iter().map(|f| f * base.t).collect());
            let records = experiment::sweep_timestep(&system, base, &ts, r.k, &r.settings())?;
            sink.emit(&records_name, |w| record::write_records_to(&records, r.format, w))
        }
        Command::NoisyEnsemble(_) => {
            let cfg = r.krylov_config(&system, r.k)?;
            let report = experiment::run_noisy_ensemble(&system, cfg, &r.settings(), r.runs, r.noise())?;
            sink.emit(&records_name, |w| record::write_records_to(&report.records, r.format, w))?;
            let stats_name = format!("ensemble_stats.{ext}");
            match r.format {
                Format::Csv => sink.emit(&stats_name, |w| write_csv(w, STATS_COLUMNS, &stats_rows(&report))),
                Format::Json => sink.emit(&stats_name, |w| {
                    let flat: Vec<_> = report.stats.iter().flat_map(|(_, v)| v.iter()).collect();
                    serde_json::to_writer_pretty(&mut *w, &flat)?;
                    w.write_all(b"\n")?;
                    Ok(())
                }),
            }
        }
        Command::SingularValues(_) => {
            let cfg = r.krylov_config(&system, r.k)?;
            let spec = r.noisy.then(|| r.noise());
            let runs = experiment::dump_singular_values(&system, cfg, spec, r.runs)?;
            let name = format!("singular_values.{ext}");
            match r.format {
                Format::Csv => sink.emit(&name, |w| write_csv(w, SINGULAR_COLUMNS, &singular_rows(&runs))),
                Format::Json => sink.emit(&name, |w| {
                    serde_json::to_writer_pretty(&mut *w, &runs)?;
                    w.write_all(b"\n")?;
                    Ok(())
                }),
            }
        }
        Command::SolveOnce(_) => {
            let cfg = r.krylov_config(&system, r.k)?;
            let (source, noise_level, seed) = if r.noisy {
                let spec = r.noise();
                (ElementSource::Sampled(spec), spec.noise_level(), Some(spec.seed))
            } else {
                (ElementSource::Exact, 0.0, None)
            };
            let mut asm = system.assembler(cfg, source)?;
            asm.grow_to(cfg.k)?;
            let m = asm.matrices();
            let mut records = Vec::with_capacity(r.regs.len());
            for &reg in &r.regs {
                records.push(experiment::evaluate(&system, &m, reg, r.filter, noise_level, seed)?.record);
            }
            if r.out.is_some() {
                sink.emit(&records_name, |w| record::write_records_to(&records, r.format, w))?;
            }
            let out = &mut *sink.stdout;
            writeln!(out, "system      {}", system.id)?;
            writeln!(out, "exact E0    {}", format_float(system.exact_gs))?;
            writeln!(out, "variant     {}  B={}  K={}  t={}  tau={}", cfg.variant, cfg.b, cfg.k, cfg.t, cfg.tau)?;
            for rec in &records {
                let energy = rec.gs_energy.map_or_else(|| "eliminated".into(), format_float);
                let err = rec.abs_error.map_or_else(String::new, |e| format!("  |E-E0|={e:.3e}"));
                writeln!(
                    out,
                    "{:<14} E={energy}{err}  kappa(S)={:.3e}  kappa_kept={}",
                    rec.reg_method,
                    rec.kappa_pre,
                    rec.kappa_post.map_or_else(|| "-".into(), |k| format!("{k:.3e}"))
                )?;
            }
            Ok(())
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("QKRYLOV_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("QKRYLOV_THREADS must be a positive integer, got '{value}'")))?;
    // Fails only if a global pool already exists, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<()> {
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = configure_threads().and_then(|()| execute(&cli.command, stdout));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(stderr, "error: {e}");
            if code == EXIT_CONFIG {
                let _ = writeln!(stderr, "\n{}", Cli::command().render_usage());
            }
            code
        }
    }
}
