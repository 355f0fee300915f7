//! Elementary symmetric polynomials of Schmidt spectra.
//!
//! Tables store `ln ê_k`, where `ê_k = e_k(Λ)` is the standard elementary
//! symmetric polynomial. The coboson normalization `χ_k = k! ê_k` is only
//! reconstructed on demand through [`ChiTable::log_chi`]. Two independent
//! routes are available: a subtraction-free dynamic program
//! ([`chi_table`]) and the power-sum recursion ([`chi_newton`]).

mod dp;
mod ext;
mod loo;
mod newton;
mod runs;

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::numeric::{ln_binomial, ln_factorial};

pub use loo::{chi_leave_one_out, LOO_IDENTITY_TOLERANCE};
pub use newton::{chi_newton, newton_from_power_sums, Cancellation, NewtonGuard};
pub use runs::{leave_one_out_runs, runs_of, Run};

pub(crate) use ext::Ext;

/// Which route produced a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dp,
    Newton,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Newton => "newton",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Record of a guarded path that handed over to the dynamic program.
#[derive(Debug, Clone, PartialEq)]
pub struct Fallback {
    pub at_k: usize,
    pub reason: String,
}

/// `ln ê_k` for `k = 0..=K`.
#[derive(Debug, Clone)]
pub struct ChiTable {
    log_e: Vec<f64>,
    fingerprint: Fingerprint,
    method: Method,
    fallback: Option<Fallback>,
}

impl ChiTable {
    pub(crate) fn from_ext(values: &[Ext], fingerprint: Fingerprint, method: Method) -> Result<Self> {
        let mut log_e = Vec::with_capacity(values.len());
        for (k, v) in values.iter().enumerate() {
            let l = v.ln();
            if l.is_nan() || l == f64::INFINITY || (!v.is_zero() && !l.is_finite()) {
                return Err(Error::Range { k });
            }
            log_e.push(l);
        }
        Ok(ChiTable {
            log_e,
            fingerprint,
            method,
            fallback: None,
        })
    }

    pub(crate) fn from_log_values(log_e: Vec<f64>, fingerprint: Fingerprint, method: Method) -> Self {
        ChiTable {
            log_e,
            fingerprint,
            method,
            fallback: None,
        }
    }

    pub(crate) fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = Some(fallback);
        self
    }

    /// Largest order K held by the table.
    pub fn order(&self) -> usize {
        self.log_e.len() - 1
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn fallback(&self) -> Option<&Fallback> {
        self.fallback.as_ref()
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_e
    }

    /// Fails with [`Error::TableTooShort`] when order `k` is not held.
    pub fn require(&self, k: usize) -> Result<()> {
        if k > self.order() {
            Err(Error::TableTooShort {
                required: k,
                available: self.order(),
            })
        } else {
            Ok(())
        }
    }

    /// `ln ê_k`; negative infinity when `ê_k = 0`. Panics past the order.
    pub fn log_e(&self, k: usize) -> f64 {
        assert!(k <= self.order(), "order {k} beyond table order {}", self.order());
        self.log_e[k]
    }

    /// `ê_k` on the linear scale (may underflow to zero).
    pub fn e(&self, k: usize) -> f64 {
        self.log_e(k).exp()
    }

    pub fn is_zero(&self, k: usize) -> bool {
        self.log_e(k) == f64::NEG_INFINITY
    }

    /// `ln χ_k = ln k! + ln ê_k`.
    pub fn log_chi(&self, k: usize) -> f64 {
        ln_factorial(k as u64) + self.log_e(k)
    }

    /// Smallest slack of the normalized Newton inequality
    /// `(ê_k/C(S,k))² ≥ (ê_{k-1}/C(S,k-1))(ê_{k+1}/C(S,k+1))` in log units,
    /// over `1 ≤ k < min(K, S)`. Negative values are violations.
    pub fn newton_inequality_slack(&self, rank: usize) -> f64 {
        let s = rank as u64;
        let top = self.order().min(rank);
        let mut slack = f64::INFINITY;
        for k in 1..top {
            let k64 = k as u64;
            let mid = 2.0 * (self.log_e[k] - ln_binomial(s, k64));
            let side = self.log_e[k - 1] - ln_binomial(s, k64 - 1) + self.log_e[k + 1]
                - ln_binomial(s, k64 + 1);
            if side == f64::NEG_INFINITY {
                continue;
            }
            slack = slack.min(mid - side);
        }
        slack
    }

    /// Tabular export: a fingerprint line, then `k,log_e_k,method`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fingerprint = {}", self.fingerprint)?;
        if let Some(fb) = &self.fallback {
            writeln!(w, "# fallback = k={} {}", fb.at_k, fb.reason)?;
        }
        writeln!(w, "k,log_e_k,method")?;
        for (k, l) in self.log_e.iter().enumerate() {
            writeln!(w, "{k},{},{}", fmt_f64(*l), self.method)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut fingerprint = None;
        let mut method = None;
        let mut log_e = Vec::new();
        let mut header_seen = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some((key, val)) = rest.split_once('=') {
                    if key.trim() == "fingerprint" {
                        fingerprint = Fingerprint::parse(val);
                    }
                }
                continue;
            }
            if !header_seen {
                if t != "k,log_e_k,method" {
                    return Err(parse_err(lineno, format!("unexpected header {t:?}")));
                }
                header_seen = true;
                continue;
            }
            let cols: Vec<&str> = t.split(',').collect();
            if cols.len() != 3 {
                return Err(parse_err(lineno, "expected 3 columns"));
            }
            let k: usize = cols[0].parse().map_err(|_| parse_err(lineno, "bad k"))?;
            if k != log_e.len() {
                return Err(parse_err(lineno, "orders must be consecutive from 0"));
            }
            log_e.push(parse_f64(cols[1]).ok_or_else(|| parse_err(lineno, "bad log_e_k"))?);
            let m = match cols[2] {
                "dp" => Method::Dp,
                "newton" => Method::Newton,
                other => return Err(parse_err(lineno, format!("unknown method {other:?}"))),
            };
            if *method.get_or_insert(m) != m {
                return Err(parse_err(lineno, "mixed methods"));
            }
        }
        let fingerprint = fingerprint.ok_or_else(|| parse_err(0, "missing fingerprint line"))?;
        if log_e.is_empty() {
            return Err(parse_err(0, "empty table"));
        }
        Ok(ChiTable {
            log_e,
            fingerprint,
            method: method.unwrap_or(Method::Dp),
            fallback: None,
        })
    }
}

/// 17 significant digits; `-inf` for exact zeros on the log scale.
pub(crate) fn fmt_f64(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub(crate) fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::invalid(format!("weights must be finite and nonnegative, got {bad}")));
    }
    Ok(())
}

/// `ln ê_0..ln ê_K` of `weights` by the subtraction-free dynamic program.
pub fn chi_table(weights: &[f64], k_max: usize) -> Result<ChiTable> {
    validate_weights(weights)?;
    let values = dp::elementary(weights, k_max);
    ChiTable::from_ext(&values, Fingerprint::of_weights(weights), Method::Dp)
}

/// Table over the sub-spectrum selected by zero-based `indices`.
pub fn chi_subset(weights: &[f64], indices: &[usize], k_max: usize) -> Result<ChiTable> {
    let mut seen = vec![false; weights.len()];
    let mut sub = Vec::with_capacity(indices.len());
    for &i in indices {
        if i >= weights.len() {
            return Err(Error::invalid(format!("index {i} outside spectrum of size {}", weights.len())));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!("index {i} repeated")));
        }
        sub.push(weights[i]);
    }
    chi_table(&sub, k_max)
}

/// Power sums `M(m) = Σ_j λ_j^m` for `m = 1..=m_max`, held as logarithms.
#[derive(Debug, Clone)]
pub struct PowerSums {
    log_m: Vec<f64>,
    rank: usize,
    fingerprint: Fingerprint,
}

impl PowerSums {
    pub fn m_max(&self) -> usize {
        self.log_m.len()
    }

    /// Number of nonzero weights.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// `ln M(m)`, `1 ≤ m ≤ m_max`.
    pub fn log_value(&self, m: usize) -> f64 {
        assert!(m >= 1 && m <= self.m_max(), "power {m} outside 1..={}", self.m_max());
        self.log_m[m - 1]
    }

    pub fn value(&self, m: usize) -> f64 {
        self.log_value(m).exp()
    }
}

/// Compensated power sums. Each weight is scaled by the largest one and
/// raised by repeated multiplication, so `M(m)` keeps full relative
/// precision even when `λ^m` underflows.
pub fn power_sums(weights: &[f64], m_max: usize) -> Result<PowerSums> {
    validate_weights(weights)?;
    if m_max == 0 {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    let nonzero: Vec<f64> = weights.iter().copied().filter(|w| *w > 0.0).collect();
    let fingerprint = Fingerprint::of_weights(weights);
    if nonzero.is_empty() {
        return Ok(PowerSums {
            log_m: vec![f64::NEG_INFINITY; m_max],
            rank: 0,
            fingerprint,
        });
    }
    let top = nonzero.iter().copied().fold(0.0, f64::max);
    let ln_top = top.ln();
    let mut ratio: Vec<f64> = nonzero.iter().map(|w| w / top).collect();
    let mut power = ratio.clone();
    let mut log_m = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut acc = crate::numeric::Neumaier::default();
        for p in &power {
            acc.add(*p);
        }
        log_m.push(m as f64 * ln_top + acc.sum().ln());
        // drop terms that can no longer affect the sum
        let mut i = 0;
        while i < power.len() {
            power[i] *= ratio[i];
            if power[i] < 1e-40 {
                power.swap_remove(i);
                ratio.swap_remove(i);
            } else {
                i += 1;
            }
        }
    }
    Ok(PowerSums {
        log_m,
        rank: nonzero.len(),
        fingerprint,
    })
}
