//! `ê_k` of the spectrum with one coefficient removed, for every
//! coefficient at once.
//!
//! Consecutive equal coefficients form a run; removing any member of a run
//! gives the same value. For run `i` the result is the order-`k` coefficient
//! of `P_i(x)·(1 + λ_i x)^{g_i − 1}·Q_i(x)` where `P_i` and `Q_i` are the
//! generating polynomials of the runs before and after `i`. Every step adds
//! nonnegative terms, so the result carries no cancellation error at any
//! occupation. Suffix products are checkpointed every `√R` runs, which bounds
//! memory by `O(√R · k)` at the price of one extra pass.

use crate::error::{Error, Result};

use super::ext::Ext;

/// A maximal block of consecutive, bitwise equal weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub start: usize,
    pub len: usize,
    pub lambda: f64,
}

/// Splits `weights` into runs of equal values.
pub fn runs_of(weights: &[f64]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        match out.last_mut() {
            Some(r) if r.lambda.to_bits() == w.to_bits() => r.len += 1,
            _ => out.push(Run {
                start: i,
                len: 1,
                lambda: w,
            }),
        }
    }
    out
}

fn apply(poly: &mut [Ext], lambda: f64, times: usize) {
    if lambda == 0.0 {
        return;
    }
    let lam = Ext::from_f64(lambda);
    let k_max = poly.len() - 1;
    for _ in 0..times {
        for k in (1..=k_max).rev() {
            poly[k] = poly[k].add_product(lam, poly[k - 1]);
        }
    }
}

fn coefficient(a: &[Ext], b: &[Ext], k: usize) -> Ext {
    let mut acc = Ext::ZERO;
    for i in 0..=k {
        acc = acc.add_product(a[i], b[k - i]);
    }
    acc
}

/// `ln ê_k(Λ \ {one member of run i})` for every run of `weights`.
pub fn leave_one_out_runs(weights: &[f64], k: usize) -> Result<(Vec<Run>, Vec<f64>)> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::invalid(format!("weights must be finite and nonnegative, found {w}")));
    }
    let runs = runs_of(weights);
    let r = runs.len();
    if r == 0 {
        return Ok((runs, Vec::new()));
    }
    let block = ((r as f64).sqrt().ceil() as usize).max(1);
    let blocks = r.div_ceil(block);
    let unit = || {
        let mut p = vec![Ext::ZERO; k + 1];
        p[0] = Ext::ONE;
        p
    };

    // checkpoint[b] is the product of all runs after block b
    let mut checkpoints = vec![Vec::new(); blocks];
    let mut q = unit();
    for b in (0..blocks).rev() {
        checkpoints[b] = q.clone();
        for run in runs[b * block..((b + 1) * block).min(r)].iter().rev() {
            apply(&mut q, run.lambda, run.len);
        }
    }

    let mut out = vec![f64::NEG_INFINITY; r];
    let mut prefix = unit();
    for b in 0..blocks {
        let (lo, hi) = (b * block, ((b + 1) * block).min(r));
        // suffix products inside the block, suffix[i - lo] excludes run i
        let mut suffix = vec![Vec::new(); hi - lo];
        let mut s = std::mem::take(&mut checkpoints[b]);
        for i in (lo..hi).rev() {
            suffix[i - lo] = s.clone();
            apply(&mut s, runs[i].lambda, runs[i].len);
        }
        for i in lo..hi {
            let mut rest = std::mem::take(&mut suffix[i - lo]);
            apply(&mut rest, runs[i].lambda, runs[i].len - 1);
            out[i] = coefficient(&prefix, &rest, k).ln();
            apply(&mut prefix, runs[i].lambda, runs[i].len);
        }
    }
    Ok((runs, out))
}
