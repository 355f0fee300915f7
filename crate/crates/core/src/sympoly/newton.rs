//! Power-sum (Newton identity) route to the elementary symmetric
//! polynomials: `k ê_k = Σ_{m=1}^{k} (-1)^{m-1} M(m) ê_{k-m}`.

use crate::error::Result;
use crate::numeric::signed_log_sum;

use super::{chi_table, power_sums, ChiTable, Fallback, Method, PowerSums};

/// Limit on the estimated condition number of each recursion step.
///
/// The estimate follows the first-order error bound
/// `cond_k = Σ_m |t_m| (cond_{k-m} + 1) / |Σ_m t_m|`, so `cond_k · 2^-52`
/// bounds the relative error of `ê_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonGuard {
    pub condition_limit: f64,
}

impl Default for NewtonGuard {
    fn default() -> Self {
        NewtonGuard {
            condition_limit: 1e6,
        }
    }
}

/// The recursion lost too many digits at order `at_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cancellation {
    pub at_k: usize,
    pub condition: f64,
    pub negative: bool,
}

impl Cancellation {
    fn describe(&self) -> String {
        if self.negative {
            format!("alternating sum turned negative (condition {:.3e})", self.condition)
        } else {
            format!("condition {:.3e} exceeds guard", self.condition)
        }
    }
}

/// Runs the recursion on precomputed power sums. Orders above the rank are
/// set to exactly zero without evaluating the alternating sum.
pub fn newton_from_power_sums(
    sums: &PowerSums,
    k_max: usize,
    guard: NewtonGuard,
) -> std::result::Result<ChiTable, Cancellation> {
    let top = k_max.min(sums.rank());
    assert!(
        top <= sums.m_max(),
        "power sums to order {} cannot feed order {top}",
        sums.m_max()
    );
    let mut log_e = vec![f64::NEG_INFINITY; k_max + 1];
    let mut cond = vec![0.0f64; k_max + 1];
    log_e[0] = 0.0;
    cond[0] = 0.0;
    let mut terms = Vec::with_capacity(top);
    for k in 1..=top {
        terms.clear();
        for m in 1..=k {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            let l = sums.log_value(m) + log_e[k - m];
            terms.push((sign, l));
        }
        let (sign, ln_abs, _) = signed_log_sum(&terms);
        // measured relative to the result so nothing underflows
        let c = if ln_abs == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            terms
                .iter()
                .enumerate()
                .map(|(i, &(_, l))| (l - ln_abs).exp() * (cond[k - 1 - i] + 1.0))
                .sum()
        };
        if sign < 0.0 || !c.is_finite() || c > guard.condition_limit {
            return Err(Cancellation {
                at_k: k,
                condition: c,
                negative: sign < 0.0,
            });
        }
        cond[k] = c;
        log_e[k] = ln_abs - (k as f64).ln();
    }
    Ok(ChiTable::from_log_values(log_e, sums.fingerprint(), Method::Newton))
}

/// Newton route with automatic degradation: when the guard trips, the
/// table is recomputed by the dynamic program and the event is recorded in
/// [`ChiTable::fallback`].
pub fn chi_newton(weights: &[f64], k_max: usize, guard: NewtonGuard) -> Result<ChiTable> {
    let rank = weights.iter().filter(|w| **w > 0.0).count();
    let sums = power_sums(weights, k_max.min(rank).max(1))?;
    match newton_from_power_sums(&sums, k_max, guard) {
        Ok(t) => Ok(t),
        Err(c) => {
            log::warn!("newton recursion degraded to dp at k={}: {}", c.at_k, c.describe());
            let fallback = Fallback {
                at_k: c.at_k,
                reason: c.describe(),
            };
            Ok(chi_table(weights, k_max)?.with_fallback(fallback))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_spectrum() {
        let t = chi_newton(&[0.5, 0.3, 0.2], 4, NewtonGuard::default()).unwrap();
        assert_eq!(t.method(), Method::Newton);
        assert!((t.e(1) - 1.0).abs() < 1e-15);
        assert!((t.e(2) - 0.31).abs() < 1e-15);
        assert!((t.e(3) - 0.03).abs() < 1e-15);
        assert!(t.is_zero(4));
    }

    #[test]
    fn flat_top_order() {
        let t = chi_newton(&[0.25; 4], 4, NewtonGuard::default()).unwrap();
        assert!((t.e(4) - 1.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn order_one_is_total_weight() {
        let t = chi_newton(&[0.6, 0.4], 1, NewtonGuard::default()).unwrap();
        assert!((t.e(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cancellation_falls_back() {
        let w = vec![1.0 / 400.0; 400];
        let strict = NewtonGuard {
            condition_limit: 10.0,
        };
        let t = chi_newton(&w, 100, strict).unwrap();
        assert_eq!(t.method(), Method::Dp);
        assert!(t.fallback().is_some());
        let sums = power_sums(&w, 100).unwrap();
        assert!(newton_from_power_sums(&sums, 100, strict).is_err());
    }
}
