use crate::error::{Error, Result};

use super::{Provenance, SchmidtSpectrum, Shell, Truncation};

/// Synthetic spectrum families.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthKind {
    /// `λ_j = 1/S`.
    Flat { size: usize },
    /// `λ_j ∝ q^{j-1}`, `j = 1..S`.
    Geometric { ratio: f64, size: usize },
    /// Arbitrary nonnegative weights, rescaled to unit sum. Zeros are dropped.
    Custom { weights: Vec<f64> },
}

/// Synthetic spectra carry no energies; every coefficient is its own
/// `l = 0` shell with `n` equal to its zero-based position.
pub fn synth_spectrum(kind: &SynthKind) -> Result<SchmidtSpectrum> {
    let (weights, provenance) = match kind {
        SynthKind::Flat { size } => {
            if *size == 0 {
                return Err(Error::invalid("flat spectrum needs size >= 1"));
            }
            (
                vec![1.0; *size],
                Provenance::new("synthetic").with("kind", "flat").with("size", size),
            )
        }
        SynthKind::Geometric { ratio, size } => {
            if *size == 0 {
                return Err(Error::invalid("geometric spectrum needs size >= 1"));
            }
            if !(*ratio > 0.0 && *ratio < 1.0) {
                return Err(Error::invalid(format!("geometric ratio must lie in (0, 1), got {ratio}")));
            }
            let ln_q = ratio.ln();
            let w = (0..*size).map(|j| (j as f64 * ln_q).exp()).collect();
            (
                w,
                Provenance::new("synthetic")
                    .with("kind", "geometric")
                    .with("ratio", ratio)
                    .with("size", size),
            )
        }
        SynthKind::Custom { weights } => {
            if weights.is_empty() {
                return Err(Error::invalid("custom spectrum needs at least one weight"));
            }
            if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                return Err(Error::invalid(format!("custom weights must be finite and nonnegative, got {w}")));
            }
            (
                weights.clone(),
                Provenance::new("synthetic")
                    .with("kind", "custom")
                    .with("size", weights.len()),
            )
        }
    };
    let shells = weights
        .into_iter()
        .enumerate()
        .map(|(i, lambda)| Shell {
            n: i as u32,
            l: 0,
            lambda,
            energy: None,
        })
        .collect();
    SchmidtSpectrum::from_shells(shells, Truncation::default(), provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_four() {
        let s = synth_spectrum(&SynthKind::Flat { size: 4 }).unwrap();
        assert_eq!(s.weights(), &[0.25; 4]);
    }

    #[test]
    fn geometric_half() {
        let s = synth_spectrum(&SynthKind::Geometric { ratio: 0.5, size: 3 }).unwrap();
        let expect = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        for (a, b) in s.weights().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn custom_rescaled() {
        let s = synth_spectrum(&SynthKind::Custom {
            weights: vec![5.0, 3.0, 2.0],
        })
        .unwrap();
        assert_eq!(s.weights(), &[0.5, 0.3, 0.2]);
        let s = synth_spectrum(&SynthKind::Custom {
            weights: vec![1.0, 0.0, 1.0],
        })
        .unwrap();
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn bad_inputs() {
        assert!(synth_spectrum(&SynthKind::Custom { weights: vec![0.0, 0.0] }).is_err());
        assert!(synth_spectrum(&SynthKind::Geometric { ratio: 1.0, size: 3 }).is_err());
        assert!(synth_spectrum(&SynthKind::Flat { size: 0 }).is_err());
    }
}
