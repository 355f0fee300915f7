//! Schmidt spectra: shells `(n, l)` with per-state coefficient `λ_{nl}`,
//! degeneracy `2l + 1` and single-particle energy, flattened into one index
//! `j` ordered by energy.

mod io;
mod params;
mod radial;
mod schmidt;
mod synth;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::numeric::compensated_sum;

pub use io::{read_any, read_plain, read_shells, read_structured, write_plain, write_shells, write_structured};
pub use params::{preset, preset_names, PhysicalParams, Preset, SolverConfig, PRESET_NAMES, PRESET_REFERENCE_PAIRS};
pub use radial::{
    calibrate_depth, ground_energy_drift, scattering_length, solve_two_body, GridSpec, PairPotentialSpec,
    RadialSolution, RadialState,
};
pub use schmidt::{
    decompose_discrete, mehler_spectrum, schmidt_decompose, CobosonPair, DecomposeOptions, DiscreteKernel, GaussianPair,
    PairFunction,
};
pub use synth::{synth_spectrum, SynthKind};

/// Cumulative weight at which solver spectra are truncated.
pub const TRUNCATION_WEIGHT: f64 = 1.0 - 1e-10;
/// Tolerance on `Σ_j λ_j = 1` for emitted spectra.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Relative energy difference under which two shells count as degenerate.
pub const ENERGY_TIE_TOLERANCE: f64 = 1e-9;

/// One `(n, l)` shell of `2l + 1` states sharing coefficient and energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub n: u32,
    pub l: u32,
    /// Coefficient of each of the `2l + 1` states.
    pub lambda: f64,
    pub energy: Option<f64>,
}

impl Shell {
    pub fn degeneracy(&self) -> usize {
        2 * self.l as usize + 1
    }
}

/// Position of a flattened state `j` inside the shell list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateRef {
    pub shell: usize,
    pub m: i32,
}

/// Weight removed by truncation and the factor applied afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub discarded_weight: f64,
    pub renormalization: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            discarded_weight: 0.0,
            renormalization: 1.0,
        }
    }
}

/// Where a spectrum came from, as ordered `key = value` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub source: String,
    pub details: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(source: impl Into<String>) -> Self {
        Provenance {
            source: source.into(),
            details: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.details.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// An immutable, normalized Schmidt distribution `Λ`.
#[derive(Debug, Clone)]
pub struct SchmidtSpectrum {
    shells: Vec<Shell>,
    states: Vec<StateRef>,
    weights: Vec<f64>,
    truncation: Truncation,
    provenance: Provenance,
}

impl SchmidtSpectrum {
    /// Builds a spectrum from shells, ordering them with [`flatten_order`]
    /// and rescaling so the weights sum to one. Shells with zero coefficient
    /// are dropped.
    pub fn from_shells(shells: Vec<Shell>, truncation: Truncation, provenance: Provenance) -> Result<Self> {
        Self::build(shells, truncation, provenance, false)
    }

    /// Like [`from_shells`](Self::from_shells), but keeps the coefficients
    /// bit-for-bit when they already sum to one within tolerance.
    pub(crate) fn restore(shells: Vec<Shell>, truncation: Truncation, provenance: Provenance) -> Result<Self> {
        Self::build(shells, truncation, provenance, true)
    }

    fn build(shells: Vec<Shell>, truncation: Truncation, provenance: Provenance, keep: bool) -> Result<Self> {
        for s in &shells {
            if !(s.lambda.is_finite() && s.lambda >= 0.0) {
                return Err(Error::invalid(format!(
                    "shell (n={}, l={}) has coefficient {}",
                    s.n, s.l, s.lambda
                )));
            }
        }
        let shells: Vec<Shell> = shells.into_iter().filter(|s| s.lambda > 0.0).collect();
        let total = compensated_sum(shells.iter().map(|s| s.lambda * s.degeneracy() as f64));
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalizable { total });
        }
        let total = if keep && (total - 1.0).abs() <= NORMALIZATION_TOLERANCE {
            1.0
        } else {
            if keep {
                log::warn!("spectrum sums to {total}, rescaling");
            }
            total
        };
        let order = flatten_order(&shells)?;
        let mut ordered: Vec<Shell> = order.into_iter().map(|i| shells[i].clone()).collect();
        if total != 1.0 {
            for s in &mut ordered {
                s.lambda /= total;
            }
        }
        let truncation = Truncation {
            discarded_weight: truncation.discarded_weight,
            renormalization: truncation.renormalization / total,
        };
        let mut states = Vec::new();
        let mut weights = Vec::new();
        for (i, s) in ordered.iter().enumerate() {
            let l = s.l as i32;
            for m in -l..=l {
                states.push(StateRef { shell: i, m });
                weights.push(s.lambda);
            }
        }
        Ok(SchmidtSpectrum {
            shells: ordered,
            states,
            weights,
            truncation,
            provenance,
        })
    }

    /// Schmidt rank `S`.
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    /// `λ_1..λ_S` in flattened order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    /// Shell and magnetic number of zero-based state `j`.
    pub fn state(&self, j: usize) -> StateRef {
        self.states[j]
    }

    pub fn states(&self) -> &[StateRef] {
        &self.states
    }

    /// Zero-based flattened index of the first state of each shell.
    pub fn shell_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.shells.len());
        let mut j = 0;
        for s in &self.shells {
            out.push(j);
            j += s.degeneracy();
        }
        out
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::of_weights(&self.weights)
    }

    pub fn has_energies(&self) -> bool {
        self.shells.iter().all(|s| s.energy.is_some())
    }

    /// `Σ_j λ_j`, compensated.
    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.shells.iter().map(|s| s.lambda * s.degeneracy() as f64))
    }

    /// Effective number of modes `1 / Σ_j λ_j²`.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / compensated_sum(self.shells.iter().map(|s| s.lambda * s.lambda * s.degeneracy() as f64))
    }
}

/// Order in which shells are flattened.
///
/// With energies present the key is `(E, l, n)`, where energies within
/// [`ENERGY_TIE_TOLERANCE`] of each other count as equal. Without any
/// energies the given order is kept. A mix of both is an error.
pub fn flatten_order(shells: &[Shell]) -> Result<Vec<usize>> {
    let with_energy = shells.iter().filter(|s| s.energy.is_some()).count();
    if with_energy == 0 {
        return Ok((0..shells.len()).collect());
    }
    if let Some(s) = shells.iter().find(|s| s.energy.is_none()) {
        return Err(Error::MissingEnergy { n: s.n, l: s.l });
    }
    let energy = |i: usize| shells[i].energy.unwrap_or(f64::NAN);
    if let Some(i) = (0..shells.len()).find(|&i| !energy(i).is_finite()) {
        return Err(Error::MissingEnergy {
            n: shells[i].n,
            l: shells[i].l,
        });
    }
    let mut idx: Vec<usize> = (0..shells.len()).collect();
    idx.sort_by(|&a, &b| {
        energy(a)
            .partial_cmp(&energy(b))
            .unwrap_or(Ordering::Equal)
            .then_with(|| shells[a].l.cmp(&shells[b].l))
            .then_with(|| shells[a].n.cmp(&shells[b].n))
    });
    // regroup near-degenerate runs so the tie break is by (l, n)
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() {
            let (e0, e1) = (energy(idx[end - 1]), energy(idx[end]));
            if (e1 - e0).abs() > ENERGY_TIE_TOLERANCE * e0.abs().max(e1.abs()).max(1.0) {
                break;
            }
            end += 1;
        }
        idx[start..end].sort_by_key(|&i| (shells[i].l, shells[i].n));
        start = end;
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shell(n: u32, l: u32, lambda: f64, energy: Option<f64>) -> Shell {
        Shell { n, l, lambda, energy }
    }

    #[test]
    fn s_then_p_shell() {
        let s = SchmidtSpectrum::from_shells(
            vec![shell(0, 1, 0.2, Some(2.5)), shell(0, 0, 0.4, Some(1.5))],
            Truncation::default(),
            Provenance::new("test"),
        )
        .unwrap();
        assert_eq!(s.rank(), 4);
        assert_eq!(s.state(0).shell, 0);
        assert_eq!(s.shells()[0].l, 0);
        assert!((1..4).all(|j| s.shells()[s.state(j).shell].l == 1));
        assert_eq!(s.weights(), &[0.4, 0.2, 0.2, 0.2]);
        assert_eq!(s.shell_offsets(), vec![0, 1]);
    }

    #[test]
    fn single_d_shell() {
        let s = SchmidtSpectrum::from_shells(
            vec![shell(0, 2, 1.0, Some(3.5))],
            Truncation::default(),
            Provenance::new("test"),
        )
        .unwrap();
        assert_eq!(s.weights(), &[0.2; 5]);
        let ms: Vec<i32> = s.states().iter().map(|r| r.m).collect();
        assert_eq!(ms, vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn equal_energy_prefers_lower_l() {
        let shells = vec![
            shell(0, 2, 0.1, Some(3.5)),
            shell(1, 0, 0.1, Some(3.5 * (1.0 + 1e-12))),
        ];
        assert_eq!(flatten_order(&shells).unwrap(), vec![1, 0]);
        // repeated runs give the same answer
        assert_eq!(flatten_order(&shells).unwrap(), flatten_order(&shells).unwrap());
    }

    #[test]
    fn missing_energy_rejected() {
        let shells = vec![shell(0, 0, 0.5, Some(1.5)), shell(1, 0, 0.5, None)];
        assert!(matches!(flatten_order(&shells), Err(Error::MissingEnergy { n: 1, l: 0 })));
        let synthetic = vec![shell(0, 0, 0.5, None), shell(1, 0, 0.5, None)];
        assert_eq!(flatten_order(&synthetic).unwrap(), vec![0, 1]);
    }

    #[test]
    fn all_zero_not_normalizable() {
        let r = SchmidtSpectrum::from_shells(
            vec![shell(0, 0, 0.0, None)],
            Truncation::default(),
            Provenance::new("test"),
        );
        assert!(matches!(r, Err(Error::NotNormalizable { .. })));
    }
}
