//! Splitting `N` pairs into two spatial modes: binomial mode distribution,
//! the `α` coefficients of the purity expansion, the purity `P₁` of the
//! projected state `|Φ_{M,N−M}⟩`, and counting statistics after the split.
//!
//! Purity is expanded as
//! `P₁ = C(N,M)^{-1} + Σ_{m=0}^{N−2} α_m χ_m χ_{2N−m} / χ_N²`.
//! Internally the coefficients are kept as `β_m = α_m m!(2N−m)!/N!²`, which
//! multiply `ê_m ê_{2N−m}/ê_N²` directly. They satisfy the triangular system
//!
//! `β_L = d_L − C(N,M)^{-1} C(2N−2L, N−L) − Σ_{m>L} β_m C(2N−2L, m−L)`
//!
//! with `d_L = N!^{-2} (2N−2L)! Σ_{L₁+L₂=L} C(L,L₁) [M!/(M−L₁)!]² [(N−M)!/(N−M−L₂)!]²`,
//! solved downward from `L = N−2`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::ensemble::{ln_choose, CountWindow, Ensemble};
use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, Neumaier};
use crate::sympoly::ChiTable;

/// Relative size, against the largest coefficient, above which a negative
/// `α_m` is reported as an instability.
pub const ALPHA_NEGATIVITY_TOLERANCE: f64 = 1e-8;

/// Largest estimated relative error of the floating-point recursion before
/// the exact recursion takes over.
const FLOAT_ERROR_LIMIT: f64 = 1e-9;

/// How the `α` recursion is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Log-domain floating point only; loss of precision is an error.
    Double,
    /// Floating point, recomputed in exact integer arithmetic whenever the
    /// error estimate exceeds its limit.
    #[default]
    ExtendedFallback,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::ExtendedFallback => "extended-fallback",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" => Ok(Precision::Double),
            "extended-fallback" => Ok(Precision::ExtendedFallback),
            other => Err(Error::invalid(format!(
                "unknown precision mode {other:?}, expected double or extended-fallback"
            ))),
        }
    }
}

/// Beam-splitter settings: reflection probability and projection sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    r: f64,
    n: usize,
    m: usize,
}

impl SplitConfig {
    pub fn new(r: f64, n: usize, m: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::invalid(format!("reflection probability {r} outside [0, 1]")));
        }
        if m > n {
            return Err(Error::invalid(format!("M={m} exceeds N={n}")));
        }
        Ok(SplitConfig { r, n, m })
    }

    pub fn reflection(&self) -> f64 {
        self.r
    }

    pub fn transmission(&self) -> f64 {
        1.0 - self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// `√(R^M T^{N−M} C(N,M))` for `M = 0..=N`.
pub fn split_amplitudes(n: usize, r: f64) -> Result<Vec<f64>> {
    let cfg = SplitConfig::new(r, n, 0)?;
    let (r, t) = (cfg.reflection(), cfg.transmission());
    Ok((0..=n)
        .map(|m| {
            let ln_p = ln_choose(n, m) + ln_pow(r, m) + ln_pow(t, n - m);
            (0.5 * ln_p).exp()
        })
        .collect())
}

fn ln_pow(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// `α_0..α_{N−2}` for one `(N, M)`, held as sign and `ln |β_m|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCoefficients {
    n: usize,
    m: usize,
    sign: Vec<i8>,
    ln_beta: Vec<f64>,
    exact: bool,
}

impl AlphaCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of coefficients, `max(N − 1, 0)`.
    pub fn len(&self) -> usize {
        self.sign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sign.is_empty()
    }

    /// Whether the exact recursion produced the values.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Sign of `α_k`: `-1`, `0` or `1`.
    pub fn sign(&self, k: usize) -> i8 {
        self.sign[k]
    }

    /// `ln |β_k|` with `β_k = α_k k!(2N−k)!/N!²`.
    pub fn ln_beta(&self, k: usize) -> f64 {
        self.ln_beta[k]
    }

    /// `ln |α_k|`.
    pub fn ln_alpha(&self, k: usize) -> f64 {
        let n = self.n as u64;
        self.ln_beta[k] + 2.0 * ln_factorial(n) - ln_factorial(k as u64) - ln_factorial(2 * n - k as u64)
    }

    /// `α_k` as a float; may under- or overflow for large `N`.
    pub fn alpha(&self, k: usize) -> f64 {
        self.sign[k] as f64 * self.ln_alpha(k).exp()
    }
}

/// `α` coefficients with the default precision mode.
pub fn alpha_coeffs(n: usize, m: usize) -> Result<AlphaCoefficients> {
    alpha_coeffs_with(n, m, Precision::default())
}

pub fn alpha_coeffs_with(n: usize, m: usize, precision: Precision) -> Result<AlphaCoefficients> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if m > n {
        return Err(Error::invalid(format!("M={m} exceeds N={n}")));
    }
    let coeffs = match float_recursion(n, m) {
        Ok(c) => c,
        Err(detail) => match precision {
            Precision::Double => {
                return Err(Error::NumericalInstability(format!(
                    "alpha recursion for N={n}, M={m}: {detail}"
                )))
            }
            Precision::ExtendedFallback => {
                log::debug!("alpha recursion for N={n}, M={m} switched to exact arithmetic: {detail}");
                exact_recursion(n, m)
            }
        },
    };
    check_negativity(&coeffs)?;
    Ok(coeffs)
}

fn check_negativity(c: &AlphaCoefficients) -> Result<()> {
    let max = (0..c.len())
        .filter(|&k| c.sign[k] > 0)
        .map(|k| c.ln_alpha(k))
        .fold(f64::NEG_INFINITY, f64::max);
    for k in 0..c.len() {
        if c.sign[k] < 0 {
            let rel = (c.ln_alpha(k) - max).exp();
            if rel > ALPHA_NEGATIVITY_TOLERANCE || max == f64::NEG_INFINITY {
                return Err(Error::NumericalInstability(format!(
                    "alpha_{k}(N={}, M={}) is negative, {rel:.3e} of the largest coefficient",
                    c.n, c.m
                )));
            }
            log::warn!("alpha_{k}(N={}, M={}) is negative at relative size {rel:.3e}", c.n, c.m);
        }
    }
    Ok(())
}

fn float_recursion(n: usize, m: usize) -> std::result::Result<AlphaCoefficients, String> {
    let lf = |k: usize| ln_factorial(k as u64);
    let eps = f64::EPSILON;
    let len = n.saturating_sub(1);
    let mut sign = vec![0i8; len];
    let mut ln_beta = vec![f64::NEG_INFINITY; len];
    let mut rel_err = vec![0.0f64; len];
    let ln_cinv = lf(m) + lf(n - m) - lf(n);
    for l in (0..len).rev() {
        let big = 2 * n - 2 * l;
        // (sign, ln|term|, relative error of term)
        let mut terms: Vec<(f64, f64, f64)> = Vec::new();
        let lo = l.saturating_sub(n - m);
        for l1 in lo..=l.min(m) {
            let l2 = l - l1;
            let parts = [lf(big), lf(l), lf(l1), lf(l2), lf(m), lf(n - m), lf(m - l1), lf(n - m - l2), lf(n)];
            let ln_t = parts[0] + parts[1] - parts[2] - parts[3] + 2.0 * (parts[4] + parts[5] - parts[6] - parts[7])
                - 2.0 * parts[8];
            // each log-factorial carries a relative rounding error
            let scale: f64 = parts.iter().sum::<f64>() + parts[4..].iter().sum::<f64>();
            terms.push((1.0, ln_t, eps * (1.0 + scale)));
        }
        let ln_c = ln_cinv + lf(big) - 2.0 * lf(n - l);
        terms.push((-1.0, ln_c, eps * (1.0 + ln_cinv.abs() + 2.0 * lf(n) + lf(big) + 2.0 * lf(n - l))));
        for k in l + 1..len {
            if sign[k] == 0 {
                continue;
            }
            let ln_t = ln_beta[k] + lf(big) - lf(k - l) - lf(big - (k - l));
            terms.push((-(sign[k] as f64), ln_t, rel_err[k] + eps * (1.0 + 2.0 * lf(big))));
        }
        let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            continue;
        }
        let mut sum = Neumaier::default();
        let mut abs_err = 0.0;
        let mut abs_sum = 0.0;
        let mut ordered = terms;
        ordered.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (s, ln_t, err) in ordered {
            let v = (ln_t - top).exp();
            sum.add(s * v);
            abs_sum += v;
            abs_err += v * err;
        }
        let total = sum.sum();
        let err = (abs_err + eps * abs_sum) / total.abs();
        // an exact zero shows up as a result at rounding level of the terms
        if total.abs() <= 64.0 * eps * abs_sum {
            if m == 0 || m == n {
                sign[l] = 0;
                continue;
            }
            return Err(format!("complete cancellation at L={l}"));
        }
        if !(err < FLOAT_ERROR_LIMIT) {
            return Err(format!("estimated relative error {err:.2e} at L={l}"));
        }
        sign[l] = if total > 0.0 { 1 } else { -1 };
        ln_beta[l] = top + total.abs().ln();
        rel_err[l] = err;
    }
    Ok(AlphaCoefficients {
        n,
        m,
        sign,
        ln_beta,
        exact: false,
    })
}


/// Natural logarithm of a positive big integer from its leading 64 bits.
fn ln_big(x: &BigUint) -> f64 {
    let shift = x.bits().saturating_sub(64);
    let top = (x >> shift).iter_u64_digits().next().unwrap_or(0);
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact recursion on `B_L = N!² β_L`, which are integers.
fn exact_recursion(n: usize, m: usize) -> AlphaCoefficients {
    let len = n.saturating_sub(1);
    let mut fact = vec![BigUint::one(); 2 * n + 1];
    for k in 1..=2 * n {
        fact[k] = &fact[k - 1] * BigUint::from(k);
    }
    // squared falling factorials a!/(a−k)!
    let falling_sq = |a: usize| -> Vec<BigUint> {
        let mut v = Vec::with_capacity(a + 1);
        let mut acc = BigUint::one();
        v.push(BigUint::one());
        for k in 0..a {
            acc *= BigUint::from(a - k);
            v.push(&acc * &acc);
        }
        v
    };
    let fm = falling_sq(m);
    let fnm = falling_sq(n - m);
    let slater = &fact[m] * &fact[n - m] * &fact[n];
    let mut b: Vec<BigInt> = vec![BigInt::zero(); len];
    for l in (0..len).rev() {
        let big = 2 * n - 2 * l;
        // binomial row C(big, j) for j = 0..=n−l
        let mut row = Vec::with_capacity(n - l + 1);
        let mut c = BigUint::one();
        row.push(c.clone());
        for j in 0..n - l {
            c = c * BigUint::from(big - j) / BigUint::from(j + 1);
            row.push(c.clone());
        }
        let mut d = BigUint::zero();
        let mut choose = BigUint::one();
        let lo = l.saturating_sub(n - m);
        // C(l, l1) built upward from l1 = 0
        for l1 in 0..=l.min(m) {
            if l1 > 0 {
                choose = choose * BigUint::from(l - l1 + 1) / BigUint::from(l1);
            }
            if l1 < lo {
                continue;
            }
            d += &choose * &fm[l1] * &fnm[l - l1];
        }
        let mut acc = BigInt::from_biguint(Sign::Plus, d * &fact[big]);
        acc -= BigInt::from_biguint(Sign::Plus, &slater * &row[n - l]);
        for k in l + 1..len {
            if !b[k].is_zero() {
                acc -= &b[k] * BigInt::from_biguint(Sign::Plus, row[k - l].clone());
            }
        }
        b[l] = acc;
    }
    let ln_norm = 2.0 * ln_factorial(n as u64);
    let mut sign = vec![0i8; len];
    let mut ln_beta = vec![f64::NEG_INFINITY; len];
    for (k, v) in b.iter().enumerate() {
        match v.sign() {
            Sign::NoSign => {}
            s => {
                sign[k] = if s == Sign::Plus { 1 } else { -1 };
                ln_beta[k] = ln_big(v.magnitude()) - ln_norm;
            }
        }
    }
    AlphaCoefficients {
        n,
        m,
        sign,
        ln_beta,
        exact: true,
    }
}

/// Purity of the projected state and its Slater lower bound, as logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Purity {
    pub ln_value: f64,
    pub ln_lower_bound: f64,
}

impl Purity {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    pub fn lower_bound(&self) -> f64 {
        self.ln_lower_bound.exp()
    }

    pub fn log10_value(&self) -> f64 {
        self.ln_value / std::f64::consts::LN_10
    }
}

/// `P₁` of `|Φ_{M,N−M}⟩` for the ensemble, whose table must reach `2N`.
pub fn purity(ensemble: &Ensemble<'_>, m: usize) -> Result<Purity> {
    purity_with(ensemble, m, Precision::default())
}

pub fn purity_with(ensemble: &Ensemble<'_>, m: usize, precision: Precision) -> Result<Purity> {
    let n = ensemble.n();
    let alpha = alpha_coeffs_with(n, m, precision)?;
    purity_from_table(ensemble.table(), &alpha)
}

/// `P₁` from a table of order `≥ 2N` and precomputed coefficients.
pub fn purity_from_table(table: &ChiTable, alpha: &AlphaCoefficients) -> Result<Purity> {
    let (n, m) = (alpha.n(), alpha.m());
    table.require(2 * n)?;
    let ln_n = table.log_e(n);
    if ln_n == f64::NEG_INFINITY {
        let rank = (0..=table.order()).filter(|&k| !table.is_zero(k)).max().unwrap_or(0);
        return Err(Error::VanishingState { n, rank });
    }
    let ln_lower = -ln_choose(n, m);
    let mut terms: Vec<(f64, f64)> = vec![(1.0, ln_lower)];
    for k in 0..alpha.len() {
        if alpha.sign(k) == 0 {
            continue;
        }
        let (a, b) = (table.log_e(k), table.log_e(2 * n - k));
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            continue;
        }
        terms.push((alpha.sign(k) as f64, alpha.ln_beta(k) + a + b - 2.0 * ln_n));
    }
    // smallest terms first
    terms.sort_by(|x, y| x.1.total_cmp(&y.1));
    let top = terms.last().map(|t| t.1).unwrap_or(ln_lower);
    let mut sum = Neumaier::default();
    for (s, ln_t) in &terms {
        sum.add(s * (ln_t - top).exp());
    }
    let total = sum.sum();
    if !(total > 0.0) {
        return Err(Error::NumericalInstability(format!(
            "purity series for N={n}, M={m} is not positive"
        )));
    }
    Ok(Purity {
        ln_value: top + total.ln(),
        ln_lower_bound: ln_lower,
    })
}

/// `𝒫₁,₂(n₁, n₂)` over `n₁ = 0..=min(M, t)`, `n₂ = 0..=min(N−M, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCounts {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    /// Row `n₁`, column `n₂`.
    pub p: Vec<Vec<f64>>,
}

impl JointCounts {
    /// `𝒫₁(n₁) = Σ_{n₂} 𝒫₁,₂(n₁, n₂)`.
    pub fn marginal(&self) -> Vec<f64> {
        self.p
            .iter()
            .map(|row| {
                let mut s = Neumaier::default();
                row.iter().for_each(|x| s.add(*x));
                s.sum()
            })
            .collect()
    }

    pub fn total(&self) -> f64 {
        let mut s = Neumaier::default();
        self.p.iter().flatten().for_each(|x| s.add(*x));
        s.sum()
    }
}

/// `𝒫₁,₂ = C(M,n₁) C(N−M,n₂) / C(N,n) · 𝒫(n)` with `n = n₁ + n₂`.
pub fn joint_count_distribution(ensemble: &Ensemble<'_>, m: usize, window: &CountWindow) -> Result<JointCounts> {
    let n = ensemble.n();
    if m > n {
        return Err(Error::invalid(format!("M={m} exceeds N={n}")));
    }
    ensemble.check_window_tables(window)?;
    let t = window.t();
    let ln_e = ensemble.table().log_e(n);
    let p: Vec<Vec<f64>> = (0..=m.min(t))
        .map(|n1| {
            (0..=(n - m).min(t))
                .map(|n2| {
                    let k = n1 + n2;
                    let w = window.ln_weight(k);
                    if k > t || w == f64::NEG_INFINITY {
                        return 0.0;
                    }
                    (ln_choose(m, n1) + ln_choose(n - m, n2) - ln_choose(n, k) + w - ln_e).exp()
                })
                .collect()
        })
        .collect();
    let joint = JointCounts { m, n, t, p };
    let total = joint.total();
    if (total - 1.0).abs() > crate::ensemble::COUNT_NORMALIZATION_TOLERANCE {
        return Err(Error::NumericalInstability(format!("joint counts sum to {total}")));
    }
    Ok(joint)
}

/// `𝒫₁(n₁)` for `n₁ = 0..=min(M, t)`.
pub fn marginal_count(ensemble: &Ensemble<'_>, m: usize, window: &CountWindow) -> Result<Vec<f64>> {
    Ok(joint_count_distribution(ensemble, m, window)?.marginal())
}

/// `C(t, k) / 2^t`, the reference of perfectly correlated halves.
pub fn half_binomial(t: usize) -> Vec<f64> {
    (0..=t)
        .map(|k| (ln_choose(t, k) - t as f64 * std::f64::consts::LN_2).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{synth_spectrum, SynthKind};

    fn spec(w: &[f64]) -> crate::spectrum::SchmidtSpectrum {
        synth_spectrum(&SynthKind::Custom { weights: w.to_vec() }).unwrap()
    }

    #[test]
    fn amplitudes_are_binomial() {
        let a = split_amplitudes(2, 0.5).unwrap();
        let p: Vec<f64> = a.iter().map(|x| x * x).collect();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && (p[2] - 0.25).abs() < 1e-15);
        let one = split_amplitudes(3, 1.0).unwrap();
        assert_eq!(one[..3], [0.0, 0.0, 0.0]);
        assert!((one[3] - 1.0).abs() < 1e-15);
        let q: f64 = split_amplitudes(4, 0.3).unwrap().iter().map(|x| x * x).sum();
        assert!((q - 1.0).abs() < 1e-12);
        assert!(split_amplitudes(3, 1.5).is_err());
    }

    #[test]
    fn alpha_two_pairs() {
        for p in [Precision::Double, Precision::ExtendedFallback] {
            let a = alpha_coeffs_with(2, 1, p).unwrap();
            assert_eq!(a.len(), 1);
            assert!((a.alpha(0) - 0.5).abs() < 1e-12);
            let z = alpha_coeffs_with(2, 0, p).unwrap();
            assert_eq!(z.sign(0), 0);
        }
        assert!(exact_recursion(2, 1).is_exact());
        assert!((exact_recursion(2, 1).alpha(0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn float_and_exact_agree() {
        for (n, m) in [(3, 1), (6, 3), (8, 1), (10, 4), (12, 6), (25, 12), (30, 7)] {
            let e = exact_recursion(n, m);
            let f = match float_recursion(n, m) {
                Ok(f) => f,
                Err(_) if n > 8 || m < 2 => continue,
                Err(e) => panic!("N={n} M={m}: {e}"),
            };
            for k in 0..e.len() {
                assert_eq!(f.sign(k), e.sign(k));
                assert!((f.ln_beta(k) - e.ln_beta(k)).abs() < 1e-10, "N={n} M={m} k={k}");
            }
        }
    }

    #[test]
    fn alpha_symmetric_and_positive() {
        for n in 2..=12 {
            for m in 1..n {
                let a = exact_recursion(n, m);
                let b = exact_recursion(n, n - m);
                for k in 0..a.len() {
                    assert_eq!(a.sign(k), 1, "N={n} M={m} k={k}");
                    assert!((a.ln_beta(k) - b.ln_beta(k)).abs() < 1e-12);
                }
            }
            let z = exact_recursion(n, 0);
            assert!((0..z.len()).all(|k| z.sign(k) == 0));
        }
    }

    #[test]
    fn large_n_falls_back_to_exact() {
        assert!(alpha_coeffs_with(120, 60, Precision::Double).is_err());
        let a = alpha_coeffs(120, 60).unwrap();
        assert!(a.is_exact());
        assert!((0..a.len()).all(|k| a.sign(k) == 1));
    }

    #[test]
    fn purity_anchors() {
        let s = spec(&[0.5, 0.3, 0.2]);
        let e = Ensemble::with_order(&s, 2, 4).unwrap();
        assert!((purity(&e, 1).unwrap().value() - 0.5).abs() < 1e-12);
        let s = spec(&[0.4, 0.3, 0.2, 0.1]);
        let e = Ensemble::with_order(&s, 2, 4).unwrap();
        let p = purity(&e, 1).unwrap().value();
        assert!((p - 0.558776).abs() < 1e-6, "{p}");
        assert!((purity(&e, 0).unwrap().value() - 1.0).abs() < 1e-12);
        let short = Ensemble::new(&s, 2).unwrap();
        assert!(matches!(purity(&short, 1), Err(Error::TableTooShort { required: 4, .. })));
    }

    #[test]
    fn slater_limit() {
        let s = spec(&[1.0; 8]);
        let e = Ensemble::with_order(&s, 8, 16).unwrap();
        for m in 0..=8 {
            let p = purity(&e, m).unwrap();
            assert!((p.value() - p.lower_bound()).abs() < 1e-14);
        }
    }

    #[test]
    fn two_pair_counts() {
        let s = spec(&[0.5, 0.3, 0.2]);
        let e = Ensemble::new(&s, 2).unwrap();
        let w = e.window(1).unwrap();
        let j = joint_count_distribution(&e, 1, &w).unwrap();
        assert!((j.p[0][0] - 0.193548).abs() < 1e-6);
        assert!((j.p[1][0] - 0.403226).abs() < 1e-6 && (j.p[0][1] - 0.403226).abs() < 1e-6);
        assert_eq!(j.p[1][1], 0.0);
        let marg = j.marginal();
        assert!((marg[0] - 0.596774).abs() < 1e-6 && (marg[1] - 0.403226).abs() < 1e-6);
        let m0 = marginal_count(&e, 0, &w).unwrap();
        assert_eq!(m0.len(), 1);
        assert!((m0[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn precision_parses() {
        assert_eq!("double".parse::<Precision>().unwrap(), Precision::Double);
        assert_eq!(
            "extended-fallback".parse::<Precision>().unwrap(),
            Precision::ExtendedFallback
        );
        assert!("quad".parse::<Precision>().is_err());
    }
}
