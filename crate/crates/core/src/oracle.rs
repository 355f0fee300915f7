//! Exhaustive reference implementation for small instances.
//!
//! A pair configuration of one mode is a set `J` of occupied single-fermion
//! indices, stored as a bitmask. Both fermions of pair state `j` sit in the
//! same mode, so `|J⟩_q` is the product of `d†_{q,j} = a†_{q,j} b†_{q,j}`
//! over `j ∈ J`. These pair operators commute, so no signs appear.
//!
//! Nothing here uses symmetric polynomials: normalizations come from summing
//! squared amplitudes over the enumerated basis.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};

use crate::bell::{CorrelatorSet, Correlators};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

pub const MAX_STATES: usize = 14;
pub const MAX_PAIRS: usize = 6;

fn cap_error(s: usize, n: usize) -> Error {
    Error::OracleCap {
        s,
        n,
        max_s: MAX_STATES,
        max_n: MAX_PAIRS,
    }
}

/// All `C(S, n)` configurations of `n` pairs over `S` states, ordered
/// lexicographically by their sorted index lists.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSector {
    s: usize,
    n: usize,
    configs: Vec<u32>,
    index: HashMap<u32, usize>,
}

impl FockSector {
    pub fn states(&self) -> usize {
        self.s
    }

    pub fn pairs(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[u32] {
        &self.configs
    }

    /// Zero-based indices of configuration `i`.
    pub fn indices(&self, i: usize) -> Vec<usize> {
        (0..self.s).filter(|k| self.configs[i] >> k & 1 == 1).collect()
    }

    pub fn position(&self, config: u32) -> Option<usize> {
        self.index.get(&config).copied()
    }
}

pub fn enumerate_states(s: usize, n: usize) -> Result<FockSector> {
    if s > MAX_STATES {
        return Err(cap_error(s, n));
    }
    if n > s {
        return Err(Error::invalid(format!("{n} pairs do not fit into {s} states")));
    }
    let mut configs = Vec::new();
    let mut stack = Vec::with_capacity(n);
    fn rec(start: usize, s: usize, left: usize, stack: &mut Vec<usize>, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(stack.iter().fold(0u32, |m, k| m | 1 << k));
            return;
        }
        for k in start..=s - left {
            stack.push(k);
            rec(k + 1, s, left - 1, stack, out);
            stack.pop();
        }
    }
    rec(0, s, n, &mut stack, &mut configs);
    let index = configs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    Ok(FockSector { s, n, configs, index })
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() > MAX_STATES || n > MAX_PAIRS {
        return Err(cap_error(weights.len(), n));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::invalid(format!("weights must be finite and nonnegative, found {w}")));
    }
    Ok(())
}

fn product_weight(weights: &[f64], config: u32) -> f64 {
    weights
        .iter()
        .enumerate()
        .filter(|(k, _)| config >> k & 1 == 1)
        .map(|(_, w)| w)
        .product()
}

/// The unsplit state `|N⟩` with normalized amplitudes.
#[derive(Debug, Clone)]
pub struct PairState {
    pub basis: FockSector,
    pub amplitudes: Vec<f64>,
}

pub fn build_state(weights: &[f64], n: usize) -> Result<PairState> {
    check_weights(weights, n)?;
    let basis = enumerate_states(weights.len(), n)?;
    let raw: Vec<f64> = basis.configs.iter().map(|c| product_weight(weights, *c)).collect();
    let norm = compensated_sum(raw.iter().copied());
    if !(norm > 0.0) {
        return Err(Error::VanishingState { n, rank: weights.iter().filter(|w| **w > 0.0).count() });
    }
    let amplitudes = raw.iter().map(|w| (w / norm).sqrt()).collect();
    Ok(PairState { basis, amplitudes })
}

/// `|Φ_{M,N−M}⟩` as a matrix of amplitudes, rows over mode 1 with `M` pairs
/// and columns over mode 2 with `N − M` pairs.
#[derive(Debug, Clone)]
pub struct SplitState {
    pub mode1: FockSector,
    pub mode2: FockSector,
    pub amplitudes: DMatrix<f64>,
}

impl SplitState {
    pub fn n(&self) -> usize {
        self.mode1.n + self.mode2.n
    }

    pub fn m(&self) -> usize {
        self.mode1.n
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }
}

pub fn build_split_state(weights: &[f64], n: usize, m: usize) -> Result<SplitState> {
    check_weights(weights, n)?;
    if m > n {
        return Err(Error::invalid(format!("M={m} exceeds N={n}")));
    }
    let s = weights.len();
    let mode1 = enumerate_states(s, m)?;
    let mode2 = enumerate_states(s, (n - m).min(s))?;
    if n - m > s {
        return Err(Error::VanishingState { n, rank: s });
    }
    let mut amp = DMatrix::zeros(mode1.len(), mode2.len());
    for (r, c1) in mode1.configs.iter().enumerate() {
        for (c, c2) in mode2.configs.iter().enumerate() {
            if c1 & c2 == 0 {
                amp[(r, c)] = product_weight(weights, c1 | c2);
            }
        }
    }
    let norm = compensated_sum(amp.iter().copied());
    if !(norm > 0.0) {
        return Err(Error::VanishingState { n, rank: weights.iter().filter(|w| **w > 0.0).count() });
    }
    amp.apply(|x| *x = (*x / norm).sqrt());
    Ok(SplitState {
        mode1,
        mode2,
        amplitudes: amp,
    })
}

/// A reduced state over one sector.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub basis: FockSector,
    pub rho: DMatrix<f64>,
}

impl DensityMatrix {
    pub fn trace(&self) -> f64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|x| x * x).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.rho.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.rho - self.rho.transpose()).amax()
    }
}

/// `ρ₁ = Tr₂ |Φ⟩⟨Φ|`.
pub fn reduced_mode1(state: &SplitState) -> DensityMatrix {
    DensityMatrix {
        basis: state.mode1.clone(),
        rho: &state.amplitudes * state.amplitudes.transpose(),
    }
}

pub fn brute_purity(state: &SplitState) -> f64 {
    reduced_mode1(state).purity()
}

/// `D_j[N] = ⟨a†_j a_j⟩ / N`.
pub fn brute_occupation(state: &PairState) -> Vec<f64> {
    let n = state.basis.n as f64;
    (0..state.basis.s)
        .map(|j| {
            let p = state
                .basis
                .configs
                .iter()
                .zip(&state.amplitudes)
                .filter(|(c, _)| *c >> j & 1 == 1)
                .map(|(_, a)| a * a);
            compensated_sum(p) / n
        })
        .collect()
}

fn window_count(config: u32, t: usize) -> usize {
    (config & ((1u32 << t) - 1)).count_ones() as usize
}

/// `𝒫(n)` for `n = 0..=N` in the window of the first `t` states.
pub fn brute_counts(state: &PairState, t: usize) -> Vec<f64> {
    let mut p = vec![0.0; state.basis.n + 1];
    for (c, a) in state.basis.configs.iter().zip(&state.amplitudes) {
        p[window_count(*c, t.min(state.basis.s))] += a * a;
    }
    p
}

/// `𝒫₁,₂(n₁, n₂)`, row `n₁ = 0..=M`, column `n₂ = 0..=N−M`.
pub fn brute_joint_counts(state: &SplitState, t: usize) -> Vec<Vec<f64>> {
    let t = t.min(state.mode1.s);
    let mut p = vec![vec![0.0; state.mode2.n + 1]; state.mode1.n + 1];
    for (r, c1) in state.mode1.configs.iter().enumerate() {
        for (c, c2) in state.mode2.configs.iter().enumerate() {
            let a = state.amplitudes[(r, c)];
            p[window_count(*c1, t)][window_count(*c2, t)] += a * a;
        }
    }
    p
}

/// Weights of the state on the occupation patterns of state `j`: in mode 1
/// only, in mode 2 only, in neither, and in both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellWeights {
    pub mode1: f64,
    pub mode2: f64,
    pub neither: f64,
    pub both: f64,
}

pub fn bell_weights(state: &SplitState, j: usize) -> BellWeights {
    let mut w = BellWeights {
        mode1: 0.0,
        mode2: 0.0,
        neither: 0.0,
        both: 0.0,
    };
    for (r, c1) in state.mode1.configs.iter().enumerate() {
        for (c, c2) in state.mode2.configs.iter().enumerate() {
            let p = state.amplitudes[(r, c)].powi(2);
            match (c1 >> j & 1, c2 >> j & 1) {
                (1, 0) => w.mode1 += p,
                (0, 1) => w.mode2 += p,
                (0, 0) => w.neither += p,
                _ => w.both += p,
            }
        }
    }
    w
}

/// Correlators of the `j`-conditioned two-qubit state, built from projected
/// weights and explicit 4×4 operators. Qubit basis `|e⟩ = (1,0)`, `|o⟩ = (0,1)`.
pub fn brute_chsh(state: &SplitState, j: usize) -> Result<CorrelatorSet> {
    if j >= state.mode1.s {
        return Err(Error::invalid(format!("state index {} outside 1..={}", j + 1, state.mode1.s)));
    }
    let w = bell_weights(state, j);
    if w.both != 0.0 {
        return Err(Error::NumericalInstability(format!("state {j} doubly occupied with weight {}", w.both)));
    }
    // |q1 q2⟩ with index 2·q1 + q2
    let mut psi = nalgebra::Vector4::zeros();
    psi[0b01] = w.mode2.sqrt();
    psi[0b10] = w.mode1.sqrt();
    psi[0b00] = w.neither.sqrt();
    let z = nalgebra::Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let x = nalgebra::Matrix2::new(0.0, 1.0, 1.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s_op = (x - z) * h;
    let t_op = (x + z) * h;
    let expect = |a: nalgebra::Matrix2<f64>, b: nalgebra::Matrix2<f64>| {
        let op: Matrix4<f64> = a.kronecker(&b);
        psi.dot(&(op * psi))
    };
    // Q, R act on mode 2; S, T on mode 1
    let qs = expect(s_op, z);
    let rs = expect(s_op, x);
    let rt = expect(t_op, x);
    let qt = expect(t_op, z);
    Ok(CorrelatorSet {
        value: Correlators {
            qs,
            rs,
            rt,
            qt,
            chsh: qs + rs + rt - qt,
        },
        sigma: None,
    })
}

/// Quadrature operators of one mode over all sectors `0..=S`, block diagonal.
#[derive(Debug, Clone)]
pub struct SectorQuadratures {
    pub z: DMatrix<f64>,
    pub x: DMatrix<f64>,
    /// Projector onto the span of `|e⟩`, `|o⟩` in sectors where both exist.
    pub span: DMatrix<f64>,
}

/// `Z = Σ (|e⟩⟨e| − |o⟩⟨o|)`, `X = Σ (|e⟩⟨o| + |o⟩⟨e|)` where `|o_{j,n}⟩`
/// and `|e_{j,n}⟩` are the normalized weight-`√∏λ` superpositions of the
/// sector-`n` configurations with and without `j`.
pub fn sector_quadratures(weights: &[f64], j: usize) -> Result<SectorQuadratures> {
    check_weights(weights, 0)?;
    let s = weights.len();
    if j >= s {
        return Err(Error::invalid(format!("state index {} outside 1..={s}", j + 1)));
    }
    let sectors: Vec<FockSector> = (0..=s).map(|n| enumerate_states(s, n)).collect::<Result<_>>()?;
    let dim: usize = sectors.iter().map(|b| b.len()).sum();
    let mut z = DMatrix::zeros(dim, dim);
    let mut x = DMatrix::zeros(dim, dim);
    let mut span = DMatrix::zeros(dim, dim);
    let mut offset = 0;
    for b in &sectors {
        let mut e = nalgebra::DVector::zeros(dim);
        let mut o = nalgebra::DVector::zeros(dim);
        for (i, c) in b.configs.iter().enumerate() {
            let a = product_weight(weights, *c).sqrt();
            if c >> j & 1 == 1 {
                o[offset + i] = a;
            } else {
                e[offset + i] = a;
            }
        }
        offset += b.len();
        let (ne, no) = (e.norm(), o.norm());
        if ne > 0.0 && no > 0.0 {
            e /= ne;
            o /= no;
            let ee = &e * e.transpose();
            let oo = &o * o.transpose();
            z += &ee - &oo;
            x += &e * o.transpose() + &o * e.transpose();
            span += ee + oo;
        }
    }
    Ok(SectorQuadratures { z, x, span })
}

/// `e_k` by explicit subset enumeration.
pub fn brute_e(weights: &[f64], k: usize) -> Result<f64> {
    check_weights(weights, 0)?;
    let b = enumerate_states(weights.len(), k)?;
    Ok(compensated_sum(b.configs.iter().map(|c| product_weight(weights, *c))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn enumeration_order() {
        let b = enumerate_states(3, 2).unwrap();
        let lists: Vec<Vec<usize>> = (0..b.len()).map(|i| b.indices(i)).collect();
        assert_eq!(lists, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(enumerate_states(5, 0).unwrap().len(), 1);
        assert_eq!(enumerate_states(5, 2).unwrap().len(), 10);
        assert!(matches!(enumerate_states(15, 2), Err(Error::OracleCap { .. })));
        assert!(matches!(build_state(&[0.1; 8], 7), Err(Error::OracleCap { .. })));
    }

    #[test]
    fn bell_pair_state() {
        let st = build_split_state(&[0.5, 0.5], 2, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((st.amplitudes[(0, 1)] - h).abs() < 1e-15 && (st.amplitudes[(1, 0)] - h).abs() < 1e-15);
        assert_eq!(st.amplitudes[(0, 0)], 0.0);
        let c = brute_chsh(&st, 0).unwrap();
        assert!((c.chsh() - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn three_state_split() {
        let w = [0.5, 0.3, 0.2];
        let st = build_split_state(&w, 2, 1).unwrap();
        assert!((st.norm_squared() - 1.0).abs() < 1e-14);
        assert!((st.amplitudes[(0, 1)] - (0.15f64 / 0.62).sqrt()).abs() < 1e-14);
        assert!((brute_purity(&st) - 0.5).abs() < 1e-12);
        let d = brute_occupation(&build_state(&w, 2).unwrap());
        assert!((d[0] - 0.403226).abs() < 1e-6 && (d[2] - 0.258065).abs() < 1e-6);
        assert!((brute_chsh(&st, 0).unwrap().chsh() - 2.007270862723103).abs() < 1e-12);
    }

    #[test]
    fn purity_examples() {
        let st = build_split_state(&[0.4, 0.3, 0.2, 0.1], 2, 1).unwrap();
        assert!((brute_purity(&st) - 0.558776).abs() < 1e-6);
        let slater = build_split_state(&[1.0 / 3.0; 3], 3, 1).unwrap();
        assert!((brute_purity(&slater) - 1.0 / 3.0).abs() < 1e-14);
        let product = build_split_state(&[0.4, 0.3, 0.2, 0.1], 2, 0).unwrap();
        assert!((brute_purity(&product) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_matrix_is_a_state() {
        let st = build_split_state(&[0.35, 0.25, 0.2, 0.12, 0.08], 3, 1).unwrap();
        let rho = reduced_mode1(&st);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.asymmetry() < 1e-15);
        assert!(rho.eigenvalues().iter().all(|e| *e > -1e-12));
    }

    #[test]
    fn counts_normalized() {
        let st = build_state(&[0.35, 0.25, 0.2, 0.12, 0.08], 3).unwrap();
        let p = brute_counts(&st, 2);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(p[3], 0.0);
        let sp = build_split_state(&[0.35, 0.25, 0.2, 0.12, 0.08], 3, 2).unwrap();
        let total: f64 = brute_joint_counts(&sp, 2).iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn absent_state_gives_minus_sqrt2() {
        let st = build_split_state(&[0.6, 0.4, 0.0], 2, 1).unwrap();
        assert!((brute_chsh(&st, 2).unwrap().chsh() + SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn quadratures_are_pauli_like() {
        let q = sector_quadratures(&[0.4, 0.3, 0.2, 0.1], 1).unwrap();
        assert!((&q.x * &q.x - &q.span).amax() < 1e-14);
        assert!((&q.z * &q.z - &q.span).amax() < 1e-14);
        assert!((&q.x * &q.z + &q.z * &q.x).amax() < 1e-14);
        assert!((&q.x - q.x.transpose()).amax() == 0.0);
    }

    #[test]
    fn brute_e_small() {
        assert!((brute_e(&[0.5, 0.3, 0.2], 2).unwrap() - 0.31).abs() < 1e-15);
        assert_eq!(brute_e(&[0.5, 0.3], 0).unwrap(), 1.0);
    }
}
