//! Reliability criteria for GEVP eigenvalues and ground-energy extraction.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chemical accuracy, 1 kcal/mol in Hartree.
pub const CHEMICAL_ACCURACY: f64 = 1.6e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterVerdict {
    pub eigenvalue: Complex64,
    pub accepted: bool,
    /// |1 − |Λ|| (unitary) or |Im Λ| (imaginary).
    pub deviation: f64,
    pub threshold: f64,
    pub energy: f64,
    /// The eigenphase sits within the acceptance level of the ±π branch cut.
    pub near_branch_cut: bool,
}

/// Acceptance by |1 − |Λ|| < 1.6e−3·τ/‖H‖; energies from E = −arg(Λ)·‖H‖/τ.
pub fn unitary_filter(lams: &[Complex64], tau: f64, h_norm: f64) -> Result<Vec<FilterVerdict>> {
    if !(tau > 0.0) || !(h_norm > 0.0) {
        return Err(Error::invalid("unitary filter needs tau > 0 and ‖H‖ > 0"));
    }
    let threshold = CHEMICAL_ACCURACY * tau / h_norm;
    Ok(lams
        .iter()
        .map(|&lam| {
            let deviation = (1.0 - lam.norm()).abs();
            // Complex64::arg lies in [−π, π]; fold −π onto π.
            let mut phase = lam.arg();
            if phase <= -PI {
                phase = PI;
            }
            FilterVerdict {
                eigenvalue: lam,
                accepted: deviation < threshold,
                deviation,
                threshold,
                energy: -phase * h_norm / tau,
                near_branch_cut: PI - phase.abs() < CHEMICAL_ACCURACY,
            }
        })
        .collect())
}

/// Acceptance by |Im Λ| < 1.6e−3 Hartree; energies E = Re Λ.
pub fn imaginary_filter(lams: &[Complex64]) -> Vec<FilterVerdict> {
    lams.iter()
        .map(|&lam| {
            let deviation = lam.im.abs();
            FilterVerdict {
                eigenvalue: lam,
                accepted: deviation < CHEMICAL_ACCURACY,
                deviation,
                threshold: CHEMICAL_ACCURACY,
                energy: lam.re,
                near_branch_cut: false,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Lowest energy among all eigenvalues; no reliability metric reported.
    Off,
    /// Lowest energy among all eigenvalues; its deviation is reported.
    #[default]
    MetricOnly,
    /// Lowest energy among accepted eigenvalues only.
    Filtering,
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMode::Off => "off",
            FilterMode::MetricOnly => "metric_only",
            FilterMode::Filtering => "filtering",
        })
    }
}

impl FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "off" | "none" => Ok(FilterMode::Off),
            "metric_only" | "metric" => Ok(FilterMode::MetricOnly),
            "filtering" | "filter" | "on" => Ok(FilterMode::Filtering),
            other => Err(Error::Config(format!("unknown filter mode '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroundEnergy {
    Selected { energy: f64, verdict: FilterVerdict },
    AllEliminated,
}

/// Minimum extracted energy, restricted to accepted verdicts when filtering.
pub fn ground_energy(verdicts: &[FilterVerdict], filtering: bool) -> Result<GroundEnergy> {
    if verdicts.is_empty() {
        return Err(Error::invalid("no eigenvalues to select from"));
    }
    let best = verdicts
        .iter()
        .filter(|v| !filtering || v.accepted)
        .filter(|v| v.energy.is_finite())
        .min_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(match best {
        Some(v) => GroundEnergy::Selected { energy: v.energy, verdict: *v },
        None => GroundEnergy::AllEliminated,
    })
}
