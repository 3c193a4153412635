//! Reference-state selection from the exact ground state.
//!
//! Basis configurations are read as spin-orbital occupations. With grouping
//! enabled, open-shell configurations sharing a spatial-orbital occupation
//! pattern are merged into one state weighted by the ground-state amplitudes;
//! closed-shell configurations stay single basis states.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{basis_state, StateVector};

const NORM_TOL: f64 = 1e-10;
const MIN_OVERLAP: f64 = 1e-14;
/// Overlaps are compared after rounding to this many decimals so that
/// symmetry-equivalent configurations tie exactly.
const OVERLAP_DECIMALS: f64 = 1e12;

/// How qubits map onto (α, β) spin orbitals of a spatial orbital.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalPairing {
    /// Spatial orbital k owns qubits (2k, 2k+1).
    #[default]
    Interleaved,
    /// Spatial orbital k owns qubits (k, k + n/2).
    Blocked,
}

#[derive(Clone, Debug)]
pub struct ReferenceState {
    pub state: StateVector,
    pub label: String,
    pub overlap_sq: f64,
}

struct Candidate {
    label: String,
    first_index: usize,
    members: Vec<usize>,
    weight: f64,
}

fn bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).map(|q| if index >> (n_qubits - 1 - q) & 1 == 1 { '1' } else { '0' }).collect()
}

fn occupations(index: usize, n_qubits: usize, pairing: OrbitalPairing) -> Vec<u8> {
    let bit = |q: usize| (index >> (n_qubits - 1 - q) & 1) as u8;
    let n_orb = n_qubits / 2;
    (0..n_orb)
        .map(|k| match pairing {
            OrbitalPairing::Interleaved => bit(2 * k) + bit(2 * k + 1),
            OrbitalPairing::Blocked => bit(k) + bit(k + n_orb),
        })
        .collect()
}

/// Ranked references, at most `max_refs`, by descending overlap with `gs`.
pub fn select_references(
    gs: &StateVector,
    n_qubits: usize,
    max_refs: usize,
    grouping: bool,
    pairing: OrbitalPairing,
) -> Result<Vec<ReferenceState>> {
    if max_refs == 0 {
        return Err(Error::invalid("max_refs must be at least 1"));
    }
    let dim = 1usize << n_qubits;
    if gs.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: gs.len() });
    }
    let norm = gs.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    if grouping && !n_qubits.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "occupation grouping needs an even number of qubits (spin-orbital pairs), got {n_qubits}"
        )));
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut by_pattern: HashMap<Vec<u8>, usize> = HashMap::new();
    for (index, amp) in gs.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let pattern = grouping.then(|| occupations(index, n_qubits, pairing)).filter(|occ| occ.contains(&1));
        match pattern {
            Some(occ) => {
                let slot = *by_pattern.entry(occ.clone()).or_insert_with(|| {
                    let mut label = String::from("occ[");
                    for (i, o) in occ.iter().enumerate() {
                        if i > 0 {
                            label.push(',');
                        }
                        let _ = write!(label, "{o}");
                    }
                    label.push(']');
                    candidates.push(Candidate { label, first_index: index, members: Vec::new(), weight: 0.0 });
                    candidates.len() - 1
                });
                candidates[slot].members.push(index);
                candidates[slot].weight += w;
            }
            None => candidates.push(Candidate {
                label: format!("|{}⟩", bitstring(index, n_qubits)),
                first_index: index,
                members: vec![index],
                weight: w,
            }),
        }
    }

    candidates.retain(|c| c.weight >= MIN_OVERLAP);
    if candidates.is_empty() {
        return Err(Error::ZeroOverlap);
    }
    let rounded = |w: f64| (w * OVERLAP_DECIMALS).round() as i64;
    candidates.sort_by(|a, b| rounded(b.weight).cmp(&rounded(a.weight)).then(a.first_index.cmp(&b.first_index)));

    Ok(candidates
        .into_iter()
        .take(max_refs)
        .map(|c| {
            let state = if c.members.len() == 1 {
                basis_state(dim, c.members[0])
            } else {
                let scale = 1.0 / c.weight.sqrt();
                let mut v = StateVector::zeros(dim);
                for &i in &c.members {
                    v[i] = gs[i] * Complex64::new(scale, 0.0);
                }
                v
            };
            let overlap_sq = state.dotc(gs).norm_sqr();
            ReferenceState { state, label: c.label, overlap_sq }
        })
        .collect())
}

/// The highest-overlap reference.
pub fn single_reference(
    gs: &StateVector,
    n_qubits: usize,
    grouping: bool,
    pairing: OrbitalPairing,
) -> Result<ReferenceState> {
    let mut refs = select_references(gs, n_qubits, 1, grouping, pairing)?;
    Ok(refs.remove(0))
}
