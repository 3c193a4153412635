//! Block Krylov bases and the projected (S, T) matrices.
//!
//! The basis is ordered by power first and reference second:
//! `[ψ⁽¹⁾, …, ψ⁽ᴮ⁾, Vψ⁽¹⁾, …, Vψ⁽ᴮ⁾, …, Vᴷψ⁽ᴮ⁾]`. With a time-evolution
//! generator every matrix element reduces to a single expectation value
//! `⟨ψ⁽ᵇ⁾| O U(Δ) |ψ⁽ᵇ'⁾⟩`, so elements sharing `(b, b', Δ, O)` are one
//! circuit. [`KrylovAssembler`] evaluates each distinct circuit once and grows
//! the matrices one block row/column at a time.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::SpectralDecomposition;
use crate::noise::{self, NoiseSpec};
use crate::pauli::{PauliSum, StateVector};
use crate::reference::ReferenceState;

const INTEGER_RATIO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// T_ij = ⟨i|e^{−iHτ}|j⟩
    #[serde(rename = "qks-u")]
    QksU,
    /// T_ij = ⟨i|H|j⟩
    #[serde(rename = "qks-h")]
    QksH,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::QksU => "qks-u",
            Variant::QksH => "qks-h",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "qks-u" | "qksu" | "u" => Ok(Variant::QksU),
            "qks-h" | "qksh" | "h" => Ok(Variant::QksH),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

/// Operator whose repeated application generates the basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// V = e^{−iHt}
    #[default]
    TimeEvolution,
    /// V = H, states not renormalized between applications.
    HamiltonianPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovConfig {
    pub variant: Variant,
    pub generator: Generator,
    /// Krylov iterations; the basis holds K+1 powers.
    pub k: usize,
    /// Block size (number of references).
    pub b: usize,
    /// Generation time step in a.u.
    pub t: f64,
    /// Evolution time of the QKS-U T matrix in a.u.
    pub tau: f64,
    /// Evolve with H/‖H‖ instead of H.
    pub normalize_hamiltonian: bool,
}

impl KrylovConfig {
    /// QKS-U with t = τ = 1 a.u. on the normalized Hamiltonian.
    pub fn qks_u(k: usize, b: usize) -> Self {
        Self {
            variant: Variant::QksU,
            generator: Generator::TimeEvolution,
            k,
            b,
            t: 1.0,
            tau: 1.0,
            normalize_hamiltonian: true,
        }
    }

    /// QKS-H with t = τ = 1/‖H‖ a.u. on the raw Hamiltonian.
    pub fn qks_h(k: usize, b: usize, h_norm: f64) -> Self {
        Self {
            variant: Variant::QksH,
            generator: Generator::TimeEvolution,
            k,
            b,
            t: 1.0 / h_norm,
            tau: 1.0 / h_norm,
            normalize_hamiltonian: false,
        }
    }

    /// Default configuration of `variant`.
    pub fn for_variant(variant: Variant, k: usize, b: usize, h_norm: f64) -> Self {
        match variant {
            Variant::QksU => Self::qks_u(k, b),
            Variant::QksH => Self::qks_h(k, b, h_norm),
        }
    }

    pub fn dim(&self) -> usize {
        (self.k + 1) * self.b
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::Config("block size B must be at least 1".into()));
        }
        let mut times = Vec::with_capacity(2);
        if self.generator == Generator::TimeEvolution {
            times.push(("t", self.t));
        }
        if self.generator == Generator::TimeEvolution || self.variant == Variant::QksU {
            times.push(("tau", self.tau));
        }
        for (name, v) in times {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.variant == Variant::QksU
            && self.normalize_hamiltonian
            && ((self.generator == Generator::TimeEvolution && self.t > std::f64::consts::PI)
                || self.tau > std::f64::consts::PI)
        {
            return Err(Error::Config(format!(
                "QKS-U times must lie in (0, π], got t = {}, tau = {}",
                self.t, self.tau
            )));
        }
        Ok(())
    }

    /// Multiplier turning configured times into physical evolution times.
    fn time_scale(&self, h_norm: f64) -> f64 {
        if self.normalize_hamiltonian {
            1.0 / h_norm
        } else {
            1.0
        }
    }

    /// `Some(m)` when τ = m·t for a (possibly zero or negative) integer m.
    fn tau_in_steps(&self) -> Option<i64> {
        let ratio = self.tau / self.t;
        let m = ratio.round();
        ((ratio - m).abs() <= INTEGER_RATIO_TOL * ratio.abs().max(1.0)).then_some(m as i64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    Identity,
    Hamiltonian,
}

/// One expectation value ⟨ψ⁽ᵇʳᵃ⁾| O · G(steps, tau_units) |ψ⁽ᵏᵉᵗ⁾⟩, where G is
/// U(steps·t + tau_units·τ) for time evolution and H^steps for the power generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CircuitKey {
    pub observable: Observable,
    pub bra: usize,
    pub ket: usize,
    pub steps: i64,
    pub tau_units: i64,
}

impl CircuitKey {
    fn conjugate(self, generator: Generator) -> Self {
        match generator {
            Generator::TimeEvolution => {
                Self { bra: self.ket, ket: self.bra, steps: -self.steps, tau_units: -self.tau_units, ..self }
            }
            Generator::HamiltonianPower => Self { bra: self.ket, ket: self.bra, ..self },
        }
    }

    /// Canonical representative and whether `self` is its complex conjugate.
    fn canonical(self, generator: Generator) -> (Self, bool) {
        let conj = self.conjugate(generator);
        if conj < self {
            (conj, true)
        } else {
            (self, false)
        }
    }

    fn is_self_conjugate(self, generator: Generator) -> bool {
        self.conjugate(generator) == self
    }

    fn words(self) -> [u64; 5] {
        [self.observable as u64, self.bra as u64, self.ket as u64, self.steps as u64, self.tau_units as u64]
    }
}

/// Circuit specifications for the S and T entries between basis positions
/// i = (power p, reference b) and j = (q, b').
fn element_keys(cfg: &KrylovConfig, (p, b): (usize, usize), (q, bp): (usize, usize)) -> (CircuitKey, CircuitKey) {
    let overlap =
        |steps: i64, tau_units: i64| CircuitKey { observable: Observable::Identity, bra: b, ket: bp, steps, tau_units };
    match cfg.generator {
        Generator::TimeEvolution => {
            let d = q as i64 - p as i64;
            let s = overlap(d, 0);
            let t = match cfg.variant {
                Variant::QksU => match cfg.tau_in_steps() {
                    Some(m) => overlap(d + m, 0),
                    None => overlap(d, 1),
                },
                Variant::QksH => CircuitKey { observable: Observable::Hamiltonian, ..s },
            };
            (s, t)
        }
        Generator::HamiltonianPower => {
            let pow = (p + q) as i64;
            let s = overlap(pow, 0);
            let t = match cfg.variant {
                Variant::QksH => overlap(pow + 1, 0),
                Variant::QksU => overlap(pow, 1),
            };
            (s, t)
        }
    }
}

fn position(index: usize, b: usize) -> (usize, usize) {
    (index / b, index % b)
}

/// Number of distinct expectation values needed for every S and T entry after
/// merging Hermitian-conjugate pairs and coinciding S/T specifications.
pub fn count_distinct_circuits(cfg: &KrylovConfig) -> usize {
    let dim = cfg.dim();
    let mut seen = BTreeSet::new();
    for i in 0..dim {
        for j in 0..dim {
            let (s, t) = element_keys(cfg, position(i, cfg.b), position(j, cfg.b));
            seen.insert(s.canonical(cfg.generator).0);
            seen.insert(t.canonical(cfg.generator).0);
        }
    }
    seen.len()
}

/// Explicit basis vectors in power-major order.
pub fn build_basis(
    refs: &[ReferenceState],
    d: &SpectralDecomposition,
    h: &PauliSum,
    cfg: &KrylovConfig,
) -> Result<Vec<StateVector>> {
    if refs.is_empty() {
        return Err(Error::invalid("at least one reference state is required"));
    }
    if refs.len() != cfg.b {
        return Err(Error::invalid(format!("configured block size {} but {} references supplied", cfg.b, refs.len())));
    }
    cfg.validate()?;
    let mut basis = Vec::with_capacity(cfg.dim());
    let mut current: Vec<StateVector> = refs.iter().map(|r| r.state.clone()).collect();
    let step = cfg.t * cfg.time_scale(d.spectral_norm());
    for power in 0..=cfg.k {
        if power > 0 {
            current = current
                .iter()
                .map(|v| match cfg.generator {
                    Generator::TimeEvolution => d.evolve(v, step),
                    Generator::HamiltonianPower => h.apply(v),
                })
                .collect::<Result<_>>()?;
        }
        basis.extend(current.iter().cloned());
    }
    Ok(basis)
}

#[derive(Clone, Debug)]
pub struct KrylovMatrices {
    pub s: DMatrix<Complex64>,
    pub t: DMatrix<Complex64>,
    pub config: KrylovConfig,
    pub distinct_circuits: usize,
}

impl KrylovMatrices {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Leading block for a smaller iteration count (nesting property).
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.config.k {
            return Err(Error::invalid(format!("cannot truncate K = {} matrices to K = {k}", self.config.k)));
        }
        let config = KrylovConfig { k, ..self.config };
        let n = config.dim();
        Ok(Self {
            s: self.s.view((0, 0), (n, n)).into_owned(),
            t: self.t.view((0, 0), (n, n)).into_owned(),
            distinct_circuits: count_distinct_circuits(&config),
            config,
        })
    }
}

/// Direct route: S_ij = ⟨i|j⟩ and T_ij = ⟨i|f(H)|j⟩ over explicit basis vectors.
pub fn assemble_exact(
    basis: &[StateVector],
    d: &SpectralDecomposition,
    h: &PauliSum,
    cfg: &KrylovConfig,
) -> Result<KrylovMatrices> {
    if basis.is_empty() {
        return Err(Error::invalid("empty Krylov basis"));
    }
    let n = basis.len();
    let tau = cfg.tau * cfg.time_scale(d.spectral_norm());
    let images = basis
        .iter()
        .map(|v| match cfg.variant {
            Variant::QksU => d.evolve(v, tau),
            Variant::QksH => h.apply(v),
        })
        .collect::<Result<Vec<_>>>()?;
    let s = DMatrix::from_fn(n, n, |i, j| basis[i].dotc(&basis[j]));
    let t = DMatrix::from_fn(n, n, |i, j| basis[i].dotc(&images[j]));
    Ok(KrylovMatrices {
        s,
        t,
        config: KrylovConfig { k: n / cfg.b.max(1) - 1, ..*cfg },
        distinct_circuits: count_distinct_circuits(cfg),
    })
}

/// How circuit values are obtained.
#[derive(Clone, Copy, Debug)]
pub enum ElementSource {
    Exact,
    Sampled(NoiseSpec),
}

/// Incremental assembler over distinct circuits.
pub struct KrylovAssembler<'a> {
    d: &'a SpectralDecomposition,
    h: &'a PauliSum,
    cfg: KrylovConfig,
    refs: Vec<StateVector>,
    /// References expressed in the eigenbasis of H.
    ref_coeffs: Vec<StateVector>,
    source: ElementSource,
    time_scale: f64,
    cache: HashMap<CircuitKey, Complex64>,
    s: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
    k: Option<usize>,
}

impl<'a> KrylovAssembler<'a> {
    /// `cfg.k` is ignored; matrices start empty and grow with [`Self::grow`].
    pub fn new(
        refs: &[ReferenceState],
        d: &'a SpectralDecomposition,
        h: &'a PauliSum,
        cfg: KrylovConfig,
        source: ElementSource,
    ) -> Result<Self> {
        if refs.is_empty() {
            return Err(Error::invalid("at least one reference state is required"));
        }
        if refs.len() != cfg.b {
            return Err(Error::invalid(format!(
                "configured block size {} but {} references supplied",
                cfg.b,
                refs.len()
            )));
        }
        cfg.validate()?;
        if let ElementSource::Sampled(spec) = source {
            spec.validate()?;
            if spec.enabled && cfg.generator == Generator::HamiltonianPower {
                return Err(Error::Config(
                    "shot-noise sampling needs bounded (unitary) circuits; the Hamiltonian-power generator is exact-only".into(),
                ));
            }
        }
        for r in refs {
            if r.state.len() != d.dim() {
                return Err(Error::DimensionMismatch { expected: d.dim(), found: r.state.len() });
            }
        }
        let states: Vec<StateVector> = refs.iter().map(|r| r.state.clone()).collect();
        let ref_coeffs = states.iter().map(|v| d.eigenvectors().ad_mul(v)).collect();
        Ok(Self {
            d,
            h,
            time_scale: cfg.time_scale(d.spectral_norm()),
            cfg,
            refs: states,
            ref_coeffs,
            source,
            cache: HashMap::new(),
            s: DMatrix::zeros(0, 0),
            t: DMatrix::zeros(0, 0),
            k: None,
        })
    }

    pub fn config(&self) -> KrylovConfig {
        KrylovConfig { k: self.k.unwrap_or(0), ..self.cfg }
    }

    /// Distinct circuits evaluated so far.
    pub fn circuits_evaluated(&self) -> usize {
        self.cache.len()
    }

    fn evolution_time(&self, key: CircuitKey) -> f64 {
        (key.steps as f64 * self.cfg.t + key.tau_units as f64 * self.cfg.tau) * self.time_scale
    }

    /// Exact value of a canonical circuit via the eigenbasis.
    fn exact_value(&self, key: CircuitKey) -> Complex64 {
        let a = &self.ref_coeffs[key.bra];
        let c = &self.ref_coeffs[key.ket];
        let lams = self.d.eigenvalues();
        let weight = |lam: f64| -> Complex64 {
            match self.cfg.generator {
                Generator::TimeEvolution => {
                    let phase = Complex64::from_polar(1.0, -lam * self.evolution_time(key));
                    match key.observable {
                        Observable::Identity => phase,
                        Observable::Hamiltonian => phase * lam,
                    }
                }
                Generator::HamiltonianPower => {
                    let base = Complex64::new(lam.powi(key.steps as i32), 0.0);
                    if key.tau_units != 0 {
                        base * Complex64::from_polar(1.0, -lam * key.tau_units as f64 * self.cfg.tau * self.time_scale)
                    } else {
                        base
                    }
                }
            }
        };
        a.iter().zip(c.iter()).zip(lams).map(|((x, y), &lam)| x.conj() * y * weight(lam)).sum()
    }

    fn sampled_value(&self, key: CircuitKey, spec: &NoiseSpec) -> Result<Complex64> {
        let self_conj = key.is_self_conjugate(self.cfg.generator);
        let exact_if_skipped = self_conj && !spec.sample_diagonal;
        let mut rng = noise::stream(spec.seed, &key.words());
        match key.observable {
            Observable::Identity => {
                let exact = self.exact_value(key);
                if exact_if_skipped {
                    return Ok(Complex64::new(exact.re, 0.0));
                }
                let exact = if self_conj { Complex64::new(exact.re, 0.0) } else { exact };
                noise::noisy_overlap(exact, spec, self_conj, &mut rng)
            }
            Observable::Hamiltonian => {
                if exact_if_skipped {
                    return Ok(Complex64::new(self.exact_value(key).re, 0.0));
                }
                let bra = &self.refs[key.bra];
                let ket = self.d.evolve(&self.refs[key.ket], self.evolution_time(key))?;
                noise::noisy_hamiltonian_element(bra, &ket, self.h, spec, self_conj, &mut rng)
            }
        }
    }

    fn value(&mut self, key: CircuitKey) -> Result<Complex64> {
        let (canon, conjugated) = key.canonical(self.cfg.generator);
        let v = match self.cache.get(&canon) {
            Some(v) => *v,
            None => {
                let v = match self.source {
                    ElementSource::Exact => self.exact_value(canon),
                    ElementSource::Sampled(spec) => self.sampled_value(canon, &spec)?,
                };
                self.cache.insert(canon, v);
                v
            }
        };
        Ok(if conjugated { v.conj() } else { v })
    }

    /// Appends one block row and column (the next Krylov power).
    pub fn grow(&mut self) -> Result<&DMatrix<Complex64>> {
        let k = self.k.map_or(0, |k| k + 1);
        let b = self.cfg.b;
        let old = self.s.nrows();
        let n = (k + 1) * b;
        let mut s = DMatrix::zeros(n, n);
        let mut t = DMatrix::zeros(n, n);
        s.view_mut((0, 0), (old, old)).copy_from(&self.s);
        t.view_mut((0, 0), (old, old)).copy_from(&self.t);
        for i in 0..n {
            for j in 0..n {
                if i < old && j < old {
                    continue;
                }
                let (sk, tk) = element_keys(&self.cfg, position(i, b), position(j, b));
                s[(i, j)] = self.value(sk)?;
                t[(i, j)] = self.value(tk)?;
            }
        }
        self.s = s;
        self.t = t;
        self.k = Some(k);
        Ok(&self.s)
    }

    /// Grows until the basis holds `k` Krylov iterations.
    pub fn grow_to(&mut self, k: usize) -> Result<()> {
        while self.k.is_none_or(|cur| cur < k) {
            self.grow()?;
        }
        Ok(())
    }

    pub fn matrices(&self) -> KrylovMatrices {
        let config = self.config();
        KrylovMatrices {
            s: self.s.clone(),
            t: self.t.clone(),
            distinct_circuits: count_distinct_circuits(&config),
            config,
        }
    }
}
