//! Schmidt decomposition of rotationally invariant two-particle states.
//!
//! A pair state `ψ(r_a, r_b)` that depends only on `|r_a|`, `|r_b|` and
//! the angle between them separates into channels
//! `ψ = Σ_{lm} g_l(r_a, r_b)/(r_a r_b) · Y_lm*(r̂_a) Y_lm(r̂_b)` with
//! `g_l(r_a, r_b) = 2π r_a r_b ∫ ψ P_l(cos θ) d cos θ`. Each channel kernel is
//! sampled on a uniform radial grid and diagonalized; eigenvalues `μ` give
//! Schmidt coefficients `λ = μ²` of degeneracy `2l + 1`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, gauss_legendre_cached};

use super::radial::{GridSpec, RadialState};
use super::{Provenance, SchmidtSpectrum, Shell, Truncation, TRUNCATION_WEIGHT};

/// A pair wavefunction given through its channel kernels.
pub trait PairFunction: Sync {
    /// Adds `g_l(r_a, r_b)` for `l` in `l_lo..l_hi` into `out[l - l_lo]`.
    fn channel_kernels(&self, ra: f64, rb: f64, l_lo: usize, l_hi: usize, out: &mut [f64]);

    /// Largest `|r_a − r_b|` at which the kernels can be nonzero.
    fn reach(&self) -> f64 {
        f64::INFINITY
    }

    fn provenance(&self) -> Provenance;
}

/// Legendre polynomials `P_0..P_{l_hi-1}` at `x`, accumulating
/// `weight · P_l(x)` into `out` for `l ≥ l_lo`.
#[inline]
fn accumulate_legendre(x: f64, weight: f64, l_lo: usize, l_hi: usize, out: &mut [f64]) {
    let (mut p0, mut p1) = (1.0, x);
    for l in 0..l_hi {
        let p = match l {
            0 => 1.0,
            1 => x,
            _ => {
                let lf = l as f64;
                let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        if l >= l_lo {
            out[l - l_lo] += weight * p;
        }
    }
}

/// Natural cubic spline on a uniform grid starting at `r = 0` with `u(0) = 0`.
#[derive(Debug, Clone)]
struct UniformSpline {
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl UniformSpline {
    fn new(h: f64, interior: &[f64]) -> Self {
        let mut y = Vec::with_capacity(interior.len() + 2);
        y.push(0.0);
        y.extend_from_slice(interior);
        y.push(0.0);
        let n = y.len();
        // second derivatives with natural end conditions (Thomas algorithm)
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
                let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
                c[i] = 1.0 / denom;
                d[i] = (rhs - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
            }
            for i in (0..k).rev() {
                m[i + 1] = d[i] - if i + 1 < k { c[i] * m[i + 2] } else { 0.0 };
            }
        }
        UniformSpline { h, y, m }
    }

    #[inline]
    fn eval(&self, r: f64) -> f64 {
        let t = r / self.h;
        let i = (t as usize).min(self.y.len() - 2);
        let a = t - i as f64;
        let b = 1.0 - a;
        let h2 = self.h * self.h / 6.0;
        b * self.y[i] + a * self.y[i + 1] + ((b * b * b - b) * self.m[i] + (a * a * a - a) * self.m[i + 1]) * h2
    }
}

/// Trapped pair: oscillator ground state in the center of mass times an
/// `l = 0` relative state `u(d)/(d √4π)`.
#[derive(Debug, Clone)]
pub struct CobosonPair {
    spline: UniformSpline,
    cutoff: f64,
    /// Where `|u|` peaks; quadrature panels grow geometrically from here.
    peak: f64,
    provenance: Provenance,
}


impl CobosonPair {
    /// The relative state is cut where `|u|` drops below `tail` times its peak.
    pub fn new(state: &RadialState, grid: &GridSpec, tail: f64, provenance: Provenance) -> Self {
        let (at, peak) = state
            .u
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(i, m), (k, x)| if x.abs() > m { (k, x.abs()) } else { (i, m) });
        let last = state.u.iter().rposition(|x| x.abs() > tail * peak).unwrap_or(0);
        let h = grid.spacing();
        CobosonPair {
            spline: UniformSpline::new(h, &state.u),
            cutoff: ((last + 2) as f64 * h).min(grid.r_max),
            peak: (at + 1) as f64 * h,
            provenance,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

impl PairFunction for CobosonPair {
    fn channel_kernels(&self, ra: f64, rb: f64, l_lo: usize, l_hi: usize, out: &mut [f64]) {
        let lo = (ra - rb).abs();
        let hi = (ra + rb).min(self.cutoff);
        if lo >= hi {
            return;
        }
        let two_ab = 2.0 * ra * rb;
        let s2 = ra * ra + rb * rb;
        let cos_at = |d: f64| ((s2 - d * d) / two_ab).clamp(-1.0, 1.0);
        let pref = 2.0 * std::f64::consts::PI / (4.0 * std::f64::consts::PI).sqrt() * (2.0 / std::f64::consts::PI).powf(0.75);
        // panels with edges at peak·2^k resolve the short-range structure
        let mut a = lo;
        let mut edge = self.peak / 16.0;
        while a < hi {
            while edge <= a {
                edge *= 2.0;
            }
            let b = edge.min(hi);
            let span = cos_at(b).acos() - cos_at(a).acos();
            let nodes = 24 + (2.0 * l_hi as f64 * span / std::f64::consts::PI).ceil() as usize;
            let (x, w) = gauss_legendre_cached(nodes);
            let (mid, half) = (0.5 * (b + a), 0.5 * (b - a));
            for (xi, wi) in x.iter().zip(w) {
                let d = mid + half * xi;
                let r2 = (2.0 * s2 - d * d) / 4.0;
                let f = pref * half * wi * (-r2).exp() * self.spline.eval(d);
                if f != 0.0 {
                    accumulate_legendre(cos_at(d), f, l_lo, l_hi, out);
                }
            }
            a = b;
        }
    }

    fn reach(&self) -> f64 {
        self.cutoff
    }

    fn provenance(&self) -> Provenance {
        self.provenance.clone()
    }
}

/// `ψ ∝ exp(−(r_a² + r_b²)/2 − c r_a·r_b)`, whose Schmidt coefficients are
/// known in closed form (see [`mehler_spectrum`]).
#[derive(Debug, Clone, Copy)]
pub struct GaussianPair {
    pub c: f64,
    pub angular_nodes: usize,
}

impl GaussianPair {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.abs() < 1.0) {
            return Err(Error::invalid(format!("coupling must satisfy |c| < 1, got {c}")));
        }
        Ok(GaussianPair { c, angular_nodes: 96 })
    }

    fn norm(&self) -> f64 {
        (std::f64::consts::PI / (1.0 - self.c * self.c).sqrt()).powf(-1.5)
    }
}

impl PairFunction for GaussianPair {
    fn channel_kernels(&self, ra: f64, rb: f64, l_lo: usize, l_hi: usize, out: &mut [f64]) {
        let (x, w) = gauss_legendre_cached(self.angular_nodes.max(l_hi + 32));
        let base = self.norm() * 2.0 * std::f64::consts::PI * ra * rb;
        let radial = -(ra * ra + rb * rb) / 2.0;
        for (xi, wi) in x.iter().zip(w) {
            let f = base * wi * (radial - self.c * ra * rb * xi).exp();
            accumulate_legendre(*xi, f, l_lo, l_hi, out);
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::new("gaussian-kernel").with("c", self.c)
    }
}

/// Closed-form shells `(n, l, λ_{nl})` of [`GaussianPair`] up to oscillator
/// level `2n + l ≤ max_level`: `λ_{nl} = (1 − q)³ q^{2n+l}` with
/// `q = ρ²`, `ρ = (1 − √(1 − c²))/c`.
pub fn mehler_spectrum(c: f64, max_level: u32) -> Vec<(u32, u32, f64)> {
    let rho = if c == 0.0 { 0.0 } else { (1.0 - (1.0 - c * c).sqrt()) / c };
    let q = rho * rho;
    let mut out = Vec::new();
    for level in 0..=max_level {
        for l in (level % 2..=level).step_by(2) {
            let n = (level - l) / 2;
            out.push((n, l, (1.0 - q).powi(3) * q.powi(level as i32)));
        }
    }
    out
}

/// Channel kernels sampled by the caller: `channels[l]` holds
/// `g_l(r_i, r_k)` at `r_i = (i + 1)·spacing`.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    pub spacing: f64,
    pub channels: Vec<DMatrix<f64>>,
}

/// Settings of [`schmidt_decompose`].
#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    /// Radial grid of the kernel matrices.
    pub grid: GridSpec,
    /// Hard upper limit on the channel index.
    pub l_max: u32,
    /// Channels are added until `(2l+1)·‖g_l‖²` stays below this value.
    pub channel_cutoff: f64,
    /// Largest accepted `1 − Σ_l (2l+1)‖g_l‖²` before renormalization.
    pub deficit_tolerance: f64,
    /// Cumulative weight kept by truncation.
    pub keep_weight: f64,
    /// Channels computed per pass; bounds memory at `block · points²` values.
    pub block: usize,
}

impl DecomposeOptions {
    pub fn new(grid: GridSpec) -> Self {
        DecomposeOptions {
            grid,
            l_max: 2000,
            channel_cutoff: 1e-15,
            deficit_tolerance: 1e-6,
            keep_weight: TRUNCATION_WEIGHT,
            block: 32,
        }
    }
}

struct Mode {
    l: u32,
    lambda: f64,
    energy: f64,
}

/// Eigen-decomposes one channel and returns its modes together with the
/// channel weight.
fn channel_modes(l: u32, kernel: DMatrix<f64>, h: f64) -> (f64, Vec<Mode>) {
    let weight = (2 * l + 1) as f64 * h * h * compensated_sum(kernel.iter().map(|x| x * x));
    if weight == 0.0 {
        return (0.0, Vec::new());
    }
    let n = kernel.nrows();
    let eig = SymmetricEigen::new(kernel * h);
    let floor = 1e-13 * weight.sqrt();
    let ll = (l * (l + 1)) as f64;
    let modes = (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() > floor)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            // single-particle oscillator energy of the mode
            let mut e = 0.0;
            for i in 0..n {
                let r = (i + 1) as f64 * h;
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                let kinetic = (2.0 * v[i] - left - right) / (2.0 * h * h);
                e += v[i] * (kinetic + (ll / (2.0 * r * r) + r * r / 2.0) * v[i]);
            }
            Mode {
                l,
                lambda: eig.eigenvalues[k] * eig.eigenvalues[k],
                energy: e,
            }
        })
        .collect();
    (weight, modes)
}

fn kernel_block<P: PairFunction + ?Sized>(pair: &P, grid: &GridSpec, l_lo: usize, l_hi: usize) -> Vec<DMatrix<f64>> {
    let n = grid.points;
    let h = grid.spacing();
    let width = l_hi - l_lo;
    let reach = pair.reach();
    // rows of the upper triangle, computed in parallel
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ra = (i + 1) as f64 * h;
            let mut row = vec![0.0; (n - i) * width];
            for k in i..n {
                let rb = (k + 1) as f64 * h;
                if rb - ra > reach {
                    break;
                }
                pair.channel_kernels(ra, rb, l_lo, l_hi, &mut row[(k - i) * width..(k - i + 1) * width]);
            }
            row
        })
        .collect();
    (0..width)
        .map(|c| {
            let mut m = DMatrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                for k in i..n {
                    let v = row[(k - i) * width + c];
                    m[(i, k)] = v;
                    m[(k, i)] = v;
                }
            }
            m
        })
        .collect()
}

/// Schmidt spectrum of `pair`, with channels added until their weight drops
/// below the cutoff. Shells are truncated at `keep_weight` of the captured
/// weight and renormalized.
pub fn schmidt_decompose<P: PairFunction + ?Sized>(pair: &P, opts: &DecomposeOptions) -> Result<SchmidtSpectrum> {
    let grid = &opts.grid;
    let h = grid.spacing();
    let mut weights = Vec::new();
    let mut modes = Vec::new();
    let mut l_lo = 0usize;
    'outer: while l_lo <= opts.l_max as usize {
        let l_hi = (l_lo + opts.block.max(1)).min(opts.l_max as usize + 1);
        let block = kernel_block(pair, grid, l_lo, l_hi);
        for (off, kernel) in block.into_iter().enumerate() {
            let l = (l_lo + off) as u32;
            let (w, m) = channel_modes(l, kernel, h);
            weights.push(w);
            modes.extend(m);
            let quiet = weights.len() >= 3 && weights.iter().rev().take(3).all(|w| *w < opts.channel_cutoff);
            if quiet {
                break 'outer;
            }
        }
        l_lo = l_hi;
    }
    log::debug!("decomposed {} channels", weights.len());
    let captured = compensated_sum(weights.iter().copied());
    finish(modes, captured, pair.provenance(), opts)
}

/// Schmidt spectrum of caller-sampled kernels.
pub fn decompose_discrete(kernel: &DiscreteKernel, opts: &DecomposeOptions) -> Result<SchmidtSpectrum> {
    let h = kernel.spacing;
    let mut captured = Vec::new();
    let mut modes = Vec::new();
    for (l, g) in kernel.channels.iter().enumerate() {
        if !g.is_square() || (g.clone() - g.transpose()).amax() > 1e-12 * g.amax().max(1e-300) {
            return Err(Error::invalid(format!("channel {l} kernel must be square and symmetric")));
        }
        let (w, m) = channel_modes(l as u32, g.clone(), h);
        captured.push(w);
        modes.extend(m);
    }
    let captured = compensated_sum(captured);
    finish(modes, captured, Provenance::new("discrete-kernel"), opts)
}

fn finish(mut modes: Vec<Mode>, captured: f64, provenance: Provenance, opts: &DecomposeOptions) -> Result<SchmidtSpectrum> {
    let deficit = 1.0 - captured;
    if deficit.abs() > opts.deficit_tolerance {
        return Err(Error::NormalizationDeficit {
            deficit,
            tolerance: opts.deficit_tolerance,
        });
    }
    // n counts modes of a channel by decreasing coefficient
    modes.sort_by(|a, b| a.l.cmp(&b.l).then(b.lambda.total_cmp(&a.lambda)));
    let mut shells: Vec<Shell> = Vec::with_capacity(modes.len());
    let mut n = 0u32;
    for (i, m) in modes.iter().enumerate() {
        n = if i > 0 && modes[i - 1].l == m.l { n + 1 } else { 0 };
        shells.push(Shell {
            n,
            l: m.l,
            lambda: m.lambda,
            energy: Some(m.energy),
        });
    }
    let total = compensated_sum(shells.iter().map(|s| s.lambda * s.degeneracy() as f64));
    let mut by_weight: Vec<usize> = (0..shells.len()).collect();
    by_weight.sort_by(|&a, &b| shells[b].lambda.total_cmp(&shells[a].lambda));
    let mut kept_weight = 0.0;
    let mut keep = vec![false; shells.len()];
    for &i in &by_weight {
        if kept_weight >= opts.keep_weight * total {
            break;
        }
        kept_weight += shells[i].lambda * shells[i].degeneracy() as f64;
        keep[i] = true;
    }
    let kept: Vec<Shell> = shells
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect();
    let kept_total = compensated_sum(kept.iter().map(|s| s.lambda * s.degeneracy() as f64));
    let provenance = provenance
        .with("normalization_deficit", deficit)
        .with("channels_kept", kept.iter().map(|s| s.l).max().unwrap_or(0) + 1);
    SchmidtSpectrum::from_shells(
        kept,
        Truncation {
            discarded_weight: (total - kept_total) / total,
            renormalization: 1.0,
        },
        provenance,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic() {
        let h = 0.1;
        let f = |r: f64| r * (2.0 - r) * (1.0 + r);
        let interior: Vec<f64> = (1..20).map(|i| f(i as f64 * h)).collect();
        let s = UniformSpline::new(h, &interior);
        // natural end conditions are not exact for this cubic; stay central
        for x in [0.55, 0.97, 1.23] {
            assert!((s.eval(x) - f(x)).abs() < 1e-3, "x={x}");
        }
        assert_eq!(s.eval(0.0), 0.0);
    }

    #[test]
    fn mehler_levels() {
        let m = mehler_spectrum(0.8, 3);
        assert!((m[0].2 - 0.421875).abs() < 1e-15);
        let total: f64 = mehler_spectrum(0.8, 200).iter().map(|&(_, l, x)| (2 * l + 1) as f64 * x).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_kernel_matches_closed_form() {
        let pair = GaussianPair::new(0.8).unwrap();
        let mut opts = DecomposeOptions::new(GridSpec::new(150, 15.0));
        opts.l_max = 40;
        opts.channel_cutoff = 1e-13;
        let s = schmidt_decompose(&pair, &opts).unwrap();
        let mut expect: Vec<f64> = mehler_spectrum(0.8, 40)
            .iter()
            .flat_map(|&(_, l, x)| std::iter::repeat(x).take(2 * l as usize + 1))
            .collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        let mut got = s.weights().to_vec();
        got.sort_by(|a, b| b.total_cmp(a));
        for k in 0..20 {
            assert!((got[k] - expect[k]).abs() < 1e-6 * expect[k], "k={k}: {} vs {}", got[k], expect[k]);
        }
    }

    #[test]
    fn product_kernel_has_rank_one() {
        let pair = GaussianPair::new(0.0).unwrap();
        let mut opts = DecomposeOptions::new(GridSpec::new(100, 10.0));
        opts.l_max = 6;
        let s = schmidt_decompose(&pair, &opts).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.weights()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discrete_kernel_normalized_and_sorted() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let h = 0.5;
        let channels: Vec<DMatrix<f64>> = (0..3)
            .map(|_| {
                let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
                a.transpose() * a
            })
            .collect();
        let w: f64 = channels
            .iter()
            .enumerate()
            .map(|(l, g)| (2 * l + 1) as f64 * h * h * g.iter().map(|x| x * x).sum::<f64>())
            .sum();
        let channels = channels.into_iter().map(|g| g / w.sqrt()).collect();
        let kernel = DiscreteKernel { spacing: h, channels };
        let s = decompose_discrete(&kernel, &DecomposeOptions::new(GridSpec::new(n, h * (n + 1) as f64))).unwrap();
        assert!((s.total_weight() - 1.0).abs() < 1e-12);
        for l in 0..3 {
            let lams: Vec<f64> = s.shells().iter().filter(|x| x.l == l).map(|x| x.lambda).collect();
            let mut ns: Vec<(u32, f64)> = s.shells().iter().filter(|x| x.l == l).map(|x| (x.n, x.lambda)).collect();
            ns.sort_by_key(|p| p.0);
            assert!(ns.windows(2).all(|p| p[0].1 >= p[1].1));
            assert!(!lams.is_empty());
        }
    }
}
