//! Tables of the spectrum with one coefficient removed.
//!
//! The default route peels `λ_j` off an existing table with
//! `ê_k^{(j)} = ê_k − λ_j ê_{k−1}^{(j)}`, tracking a running bound on the
//! relative error. When the bound grows past [`REL_ERROR_LIMIT`] the table is
//! recomputed directly by the dynamic program over `Λ \ {λ_j}`.

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

use super::{chi_table, ChiTable, Fallback, Method};

/// Largest tolerated relative residual of `ê_k = ê_k^{(j)} + λ_j ê_{k−1}^{(j)}`.
pub const LOO_IDENTITY_TOLERANCE: f64 = 1e-8;

const REL_ERROR_LIMIT: f64 = 1e-9;

/// Table of order `k_max` for `weights` with entry `j` (zero-based) removed.
///
/// `table` must have been built from `weights`.
pub fn chi_leave_one_out(table: &ChiTable, weights: &[f64], j: usize, k_max: usize) -> Result<ChiTable> {
    if j >= weights.len() {
        return Err(Error::invalid(format!("index {j} outside spectrum of size {}", weights.len())));
    }
    if table.fingerprint() != Fingerprint::of_weights(weights) {
        return Err(Error::invalid("table was not computed from these weights"));
    }
    table.require(k_max)?;
    let lam = weights[j];
    let fingerprint = table.fingerprint().derive(&format!("loo:{j}"));
    if lam == 0.0 {
        let log_e = table.log_values()[..=k_max].to_vec();
        return Ok(ChiTable::from_log_values(log_e, fingerprint, table.method()));
    }
    let rank = weights.iter().filter(|w| **w > 0.0).count();
    match peel(table, lam, rank - 1, k_max) {
        Ok(log_e) => Ok(ChiTable::from_log_values(log_e, fingerprint, table.method())),
        Err(at_k) => {
            log::debug!("leave-one-out for index {j} recomputed by dp from k={at_k}");
            let rest: Vec<f64> = weights
                .iter()
                .enumerate()
                .filter_map(|(i, w)| (i != j).then_some(*w))
                .collect();
            let direct = chi_table(&rest, k_max)?;
            let worst = identity_residual(table, &direct, lam, k_max);
            if worst > LOO_IDENTITY_TOLERANCE {
                return Err(Error::NumericalInstability(format!(
                    "leave-one-out identity residual {worst:.3e} for index {j}"
                )));
            }
            let log_e = direct.log_values().to_vec();
            Ok(ChiTable::from_log_values(log_e, fingerprint, Method::Dp).with_fallback(Fallback {
                at_k,
                reason: "peeling lost precision".into(),
            }))
        }
    }
}

/// Upward peeling; returns the order at which the error bound failed.
fn peel(table: &ChiTable, lam: f64, rank: usize, k_max: usize) -> std::result::Result<Vec<f64>, usize> {
    // per-entry error of the input table, grown with the spectrum size
    let eps = 1e-15 * (rank as f64 + 1.0).sqrt();
    let ln_lam = lam.ln();
    let mut out = vec![f64::NEG_INFINITY; k_max + 1];
    out[0] = 0.0;
    let mut rel = 0.0f64;
    for k in 1..=k_max.min(rank) {
        let ln_e = table.log_e(k);
        let r = (ln_lam + out[k - 1] - ln_e).exp();
        // r >= 1 would make the peeled value nonpositive
        if !(r < 1.0) {
            return Err(k);
        }
        rel = (eps + r * (rel + eps)) / (1.0 - r);
        if rel > REL_ERROR_LIMIT {
            return Err(k);
        }
        out[k] = ln_e + (-r).ln_1p();
    }
    Ok(out)
}

fn identity_residual(full: &ChiTable, without: &ChiTable, lam: f64, k_max: usize) -> f64 {
    let ln_lam = lam.ln();
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        let ln_e = full.log_e(k);
        if ln_e == f64::NEG_INFINITY {
            continue;
        }
        let a = (without.log_e(k) - ln_e).exp();
        let b = (ln_lam + without.log_e(k - 1) - ln_e).exp();
        worst = worst.max((1.0 - a - b).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAM: [f64; 3] = [0.5, 0.3, 0.2];

    #[test]
    fn remove_first() {
        let t = chi_table(&LAM, 3).unwrap();
        let l = chi_leave_one_out(&t, &LAM, 0, 3).unwrap();
        assert!((l.e(1) - 0.5).abs() < 1e-15);
        assert!((l.e(2) - 0.06).abs() < 1e-15);
        assert!(l.is_zero(3));
        assert!((l.e(2) + 0.5 * l.e(1) - t.e(2)).abs() < 1e-15);
    }

    #[test]
    fn rank_one() {
        let w = [1.0];
        let t = chi_table(&w, 2).unwrap();
        let l = chi_leave_one_out(&t, &w, 0, 2).unwrap();
        assert_eq!(l.log_e(0), 0.0);
        assert!(l.is_zero(1) && l.is_zero(2));
    }

    #[test]
    fn dominant_weight_uses_direct_table() {
        let mut w = vec![0.5];
        w.extend(std::iter::repeat(0.5 / 200.0).take(200));
        let t = chi_table(&w, 150).unwrap();
        let l = chi_leave_one_out(&t, &w, 0, 150).unwrap();
        let direct = chi_table(&w[1..], 150).unwrap();
        for k in 0..=150 {
            let (a, b) = (l.log_e(k), direct.log_e(k));
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn mismatched_table_rejected() {
        let t = chi_table(&LAM, 2).unwrap();
        assert!(chi_leave_one_out(&t, &[0.5, 0.5], 0, 2).is_err());
        assert!(chi_leave_one_out(&t, &LAM, 0, 3).is_err());
    }
}
