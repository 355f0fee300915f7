//! Small numeric helpers: log-factorials, log-domain accumulation and
//! compensated summation.

use std::sync::OnceLock;

const EXACT_TABLE: usize = 171;

fn small_ln_factorials() -> &'static [f64; EXACT_TABLE] {
    static TABLE: OnceLock<[f64; EXACT_TABLE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [0.0; EXACT_TABLE];
        let mut f = 1.0f64;
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            f *= k as f64;
            *slot = f.ln();
        }
        out
    })
}

/// ln(n!) for any n. Exact products below 171, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < EXACT_TABLE {
        return small_ln_factorials()[n as usize];
    }
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// ln C(n, k); negative infinity when k > n.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// ln(e^a + e^b) without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ e^{x_i}.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut acc = Neumaier::default();
    for &x in xs {
        acc.add((x - max).exp());
    }
    max + acc.sum().ln()
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.sum()
}

/// Sum of signed terms given as (sign, ln|term|). Returns (sign, ln|sum|,
/// ln Σ|term|); the last value measures how much cancellation occurred.
pub fn signed_log_sum(terms: &[(f64, f64)]) -> (f64, f64, f64) {
    let max = terms
        .iter()
        .map(|&(_, l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return (1.0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    }
    let mut signed = Neumaier::default();
    let mut abs = Neumaier::default();
    for &(s, l) in terms {
        let v = (l - max).exp();
        signed.add(s * v);
        abs.add(v);
    }
    let total = signed.sum();
    let sign = if total < 0.0 { -1.0 } else { 1.0 };
    let ln_abs = if total == 0.0 {
        f64::NEG_INFINITY
    } else {
        max + total.abs().ln()
    };
    (sign, ln_abs, max + abs.sum().ln())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Cached Gauss-Legendre rules with `16·k` nodes, `k = 1..=64`.
pub fn gauss_legendre_cached(min_nodes: usize) -> &'static (Vec<f64>, Vec<f64>) {
    const STEPS: usize = 64;
    static RULES: OnceLock<Vec<OnceLock<(Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..STEPS).map(|_| OnceLock::new()).collect());
    let k = min_nodes.div_ceil(16).clamp(1, STEPS);
    rules[k - 1].get_or_init(|| gauss_legendre(16 * k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials_match_direct_products() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-15);
        // continuity across the table boundary
        let a = ln_factorial(170) + 171f64.ln();
        assert!((ln_factorial(171) - a).abs() < 1e-11 * a);
        let direct: f64 = (1..=2000u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(2000) - direct).abs() < 1e-9);
    }

    #[test]
    fn binomials() {
        assert!((ln_binomial(10, 3).exp() - 120.0).abs() < 1e-10);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 97] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // x^(2n-2) integrates to 2/(2n-1)
            let p = (2 * n - 2) as i32;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 2.0 / (p as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
        let (x, _) = gauss_legendre_cached(20);
        assert_eq!(x.len(), 32);
    }

    #[test]
    fn log_sums() {
        let v = log_sum_exp(&[0.0, 0.0, (2f64).ln()]);
        assert!((v - 4f64.ln()).abs() < 1e-15);
        assert!((log_add(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let (s, l, a) = signed_log_sum(&[(1.0, 3f64.ln()), (-1.0, 2f64.ln())]);
        assert_eq!(s, 1.0);
        assert!(l.abs() < 1e-15);
        assert!((a - 5f64.ln()).abs() < 1e-15);
    }
}
