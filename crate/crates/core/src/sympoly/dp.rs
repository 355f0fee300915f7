//! Cancellation-free evaluation of e_0..e_K through the update
//! e_k <- e_k + λ e_{k-1}, chunked so that independent blocks of the
//! spectrum run in parallel and are merged by truncated convolution.

use rayon::prelude::*;

use super::ext::Ext;

/// Fixed block size. Results do not depend on the thread count because
/// the partition and the merge order are fixed.
pub(crate) const CHUNK: usize = 1 << 15;

pub(crate) fn dp_block(weights: &[f64], k_max: usize) -> Vec<Ext> {
    let mut table = vec![Ext::ZERO; k_max + 1];
    table[0] = Ext::ONE;
    let mut top = 0usize;
    for &w in weights {
        if w == 0.0 {
            continue;
        }
        let lam = Ext::from_f64(w);
        top = (top + 1).min(k_max);
        for k in (1..=top).rev() {
            table[k] = table[k].add_product(lam, table[k - 1]);
        }
    }
    table
}

fn top_nonzero(t: &[Ext]) -> usize {
    t.iter().rposition(|x| !x.is_zero()).unwrap_or(0)
}

/// Product of the two generating polynomials, truncated at `k_max`.
pub(crate) fn convolve(a: &[Ext], b: &[Ext], k_max: usize) -> Vec<Ext> {
    let (ta, tb) = (top_nonzero(a), top_nonzero(b));
    let top = (ta + tb).min(k_max);
    let mut out: Vec<Ext> = (0..=top)
        .into_par_iter()
        .map(|k| {
            let lo = k.saturating_sub(tb);
            let hi = k.min(ta);
            let mut acc = Ext::ZERO;
            for i in lo..=hi {
                acc = acc.add_product(a[i], b[k - i]);
            }
            acc
        })
        .collect();
    out.resize(k_max + 1, Ext::ZERO);
    out
}

pub(crate) fn elementary(weights: &[f64], k_max: usize) -> Vec<Ext> {
    if weights.len() <= CHUNK {
        return dp_block(weights, k_max);
    }
    let blocks: Vec<Vec<Ext>> = weights
        .par_chunks(CHUNK)
        .map(|c| dp_block(c, k_max))
        .collect();
    blocks
        .into_iter()
        .reduce(|acc, b| convolve(&acc, &b, k_max))
        .expect("at least one block")
}
