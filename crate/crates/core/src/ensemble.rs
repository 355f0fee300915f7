//! Observables of the unsplit `N`-pair state: single-fermion occupations,
//! spectral density, counting statistics in a window of the lowest states and
//! the normalization ratio.
//!
//! Everything is evaluated in `ê` units, `ê_k = χ_k / k!`, so binomial and
//! factorial prefactors cancel analytically.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, ln_binomial};
use crate::spectrum::SchmidtSpectrum;
use crate::sympoly::{chi_leave_one_out, chi_table, leave_one_out_runs, ChiTable};

/// Tolerance on `Σ_j D_j = 1`.
pub const SUM_RULE_TOLERANCE: f64 = 1e-8;
/// Tolerance on `Σ_n 𝒫(n) = 1`.
pub const COUNT_NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Slack allowed on the Pauli bound `N·D_j ≤ 1`.
pub const PAULI_SLACK: f64 = 1e-10;

/// The state `|N⟩` of `N` pairs over a spectrum, with its table.
#[derive(Debug)]
pub struct Ensemble<'a> {
    spectrum: &'a SchmidtSpectrum,
    n: usize,
    table: ChiTable,
    occupations: OnceLock<Vec<f64>>,
}

impl<'a> Ensemble<'a> {
    /// Builds the table to order `N + 1`.
    pub fn new(spectrum: &'a SchmidtSpectrum, n: usize) -> Result<Self> {
        Self::with_order(spectrum, n, n + 1)
    }

    /// Builds the table to order `order ≥ N` (purity needs `2N`).
    pub fn with_order(spectrum: &'a SchmidtSpectrum, n: usize, order: usize) -> Result<Self> {
        Self::check_n(spectrum, n)?;
        let table = chi_table(spectrum.weights(), order.max(n))?;
        Self::with_table(spectrum, n, table)
    }

    /// Wraps an existing table, which must belong to `spectrum` and reach `N`.
    pub fn with_table(spectrum: &'a SchmidtSpectrum, n: usize, table: ChiTable) -> Result<Self> {
        Self::check_n(spectrum, n)?;
        if table.fingerprint() != spectrum.fingerprint() {
            return Err(Error::invalid("table fingerprint does not match the spectrum"));
        }
        table.require(n)?;
        if table.is_zero(n) {
            return Err(Error::VanishingState { n, rank: spectrum.rank() });
        }
        Ok(Ensemble {
            spectrum,
            n,
            table,
            occupations: OnceLock::new(),
        })
    }

    fn check_n(spectrum: &SchmidtSpectrum, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("pair number N must be at least 1"));
        }
        if n > spectrum.rank() {
            return Err(Error::VanishingState { n, rank: spectrum.rank() });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spectrum(&self) -> &'a SchmidtSpectrum {
        self.spectrum
    }

    pub fn table(&self) -> &ChiTable {
        &self.table
    }

    /// `D_j[N] = λ_j ê_{N−1}^{(j)} / (N ê_N)` for zero-based `j`.
    pub fn occupation(&self, j: usize) -> Result<f64> {
        let weights = self.spectrum.weights();
        if j >= weights.len() {
            return Err(Error::invalid(format!("state index {} outside 1..={}", j + 1, weights.len())));
        }
        if let Some(all) = self.occupations.get() {
            return Ok(all[j]);
        }
        let n = self.n;
        let loo = chi_leave_one_out(&self.table, weights, j, n - 1)?;
        let d = (weights[j].ln() + loo.log_e(n - 1) - self.table.log_e(n)).exp() / n as f64;
        check_pauli(d, n)?;
        Ok(d)
    }

    /// `1 − N D_j[N] = ê_N^{(j)} / ê_N`, the probability that state `j` is
    /// empty, without the cancellation of the subtraction.
    pub fn vacancy(&self, j: usize) -> Result<f64> {
        let weights = self.spectrum.weights();
        if j >= weights.len() {
            return Err(Error::invalid(format!("state index {} outside 1..={}", j + 1, weights.len())));
        }
        let n = self.n;
        let loo = chi_leave_one_out(&self.table, weights, j, n)?;
        Ok((loo.log_e(n) - self.table.log_e(n)).exp())
    }

    /// `D_j[N]` for every state, one value per run of equal coefficients.
    pub fn occupations(&self) -> Result<&[f64]> {
        if let Some(all) = self.occupations.get() {
            return Ok(all);
        }
        let weights = self.spectrum.weights();
        let n = self.n;
        let (runs, loo) = leave_one_out_runs(weights, n - 1)?;
        let ln_e = self.table.log_e(n);
        let mut out = vec![0.0; weights.len()];
        for (run, ln_loo) in runs.iter().zip(loo) {
            let d = (run.lambda.ln() + ln_loo - ln_e).exp() / n as f64;
            check_pauli(d, n)?;
            out[run.start..run.start + run.len].fill(d);
        }
        let total = compensated_sum(out.iter().copied());
        if (total - 1.0).abs() > SUM_RULE_TOLERANCE {
            return Err(Error::NumericalInstability(format!(
                "occupations sum to {total}, sum rule violated"
            )));
        }
        Ok(self.occupations.get_or_init(|| out))
    }

    /// `n_spect(nl) = g_l · N · D_j` per shell, in shell order.
    pub fn spectral_density(&self) -> Result<Vec<ShellDensity>> {
        let d = self.occupations()?;
        let n = self.n as f64;
        Ok(self
            .spectrum
            .shells()
            .iter()
            .zip(self.spectrum.shell_offsets())
            .map(|(s, j)| ShellDensity {
                first_state: j,
                n: s.n,
                l: s.l,
                degeneracy: s.degeneracy(),
                lambda: s.lambda,
                density: s.degeneracy() as f64 * n * d[j],
            })
            .collect())
    }

    /// `⟨N_t⟩ = N Σ_{j<t} D_j`.
    pub fn mean_population(&self, t: usize) -> Result<f64> {
        check_window(t, self.spectrum.rank())?;
        let d = self.occupations()?;
        Ok(self.n as f64 * compensated_sum(d[..t].iter().copied()))
    }

    /// `χ_{N+1}/χ_N = (N + 1) ê_{N+1} / ê_N`; zero once `N + 1` exceeds the rank.
    pub fn normalization_ratio(&self) -> Result<f64> {
        let n = self.n;
        if n + 1 > self.spectrum.rank() {
            return Ok(0.0);
        }
        self.table.require(n + 1)?;
        Ok((n + 1) as f64 * (self.table.log_e(n + 1) - self.table.log_e(n)).exp())
    }

    /// Tables of the window `Λ̃_t` (the first `t` states) and its complement.
    pub fn window(&self, t: usize) -> Result<CountWindow> {
        let weights = self.spectrum.weights();
        check_window(t, weights.len())?;
        let n = self.n;
        let inner = chi_table(&weights[..t], n.min(t))?;
        let outer = chi_table(&weights[t..], n)?;
        Ok(CountWindow { t, n, inner, outer })
    }

    /// `𝒫(n) = ê_n(Λ̃) ê_{N−n}(Λ̄) / ê_N` for `n = 0..=min(t, N)`.
    pub fn count_distribution(&self, window: &CountWindow) -> Result<Vec<f64>> {
        self.check_window_tables(window)?;
        let ln_e = self.table.log_e(self.n);
        let p: Vec<f64> = (0..=window.t.min(self.n))
            .map(|k| (window.ln_weight(k) - ln_e).exp())
            .collect();
        let total = compensated_sum(p.iter().copied());
        if (total - 1.0).abs() > COUNT_NORMALIZATION_TOLERANCE {
            return Err(Error::NumericalInstability(format!(
                "counting distribution sums to {total}"
            )));
        }
        Ok(p)
    }

    /// Mean and variance of `𝒫(n)` with the Poissonian and binomial references
    /// of equal mean.
    pub fn window_report(&self, window: &CountWindow) -> Result<WindowReport> {
        let p = self.count_distribution(window)?;
        let mean = compensated_sum(p.iter().enumerate().map(|(k, x)| k as f64 * x));
        let variance = compensated_sum(p.iter().enumerate().map(|(k, x)| (k as f64 - mean).powi(2) * x));
        let t = window.t as f64;
        Ok(WindowReport {
            t: window.t,
            mean,
            variance,
            poisson_var: mean,
            binomial_var: mean * (1.0 - mean / t),
        })
    }

    pub(crate) fn check_window_tables(&self, window: &CountWindow) -> Result<()> {
        if window.n != self.n {
            return Err(Error::invalid(format!(
                "window was built for N={}, ensemble has N={}",
                window.n, self.n
            )));
        }
        Ok(())
    }
}

fn check_pauli(d: f64, n: usize) -> Result<()> {
    let nd = n as f64 * d;
    if !(nd.is_finite() && nd >= 0.0 && nd <= 1.0 + PAULI_SLACK) {
        return Err(Error::NumericalInstability(format!("occupation N*D = {nd} breaks the Pauli bound")));
    }
    Ok(())
}

fn check_window(t: usize, rank: usize) -> Result<()> {
    if t == 0 || t > rank {
        return Err(Error::invalid(format!("window size t={t} must lie in 1..={rank}")));
    }
    Ok(())
}

/// `D_j[N]` for one state across several pair numbers, from one table up to
/// the largest `N` and one leave-one-out table.
pub fn occupation_sweep(spectrum: &SchmidtSpectrum, j: usize, ns: &[usize]) -> Result<Vec<f64>> {
    let Some(&n_max) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    check_sweep(spectrum, j, ns)?;
    let table = chi_table(spectrum.weights(), n_max)?;
    Ok(occupation_curve(spectrum, &table, j, ns)?.into_iter().map(|p| p.d).collect())
}

/// Occupation and vacancy of one state at one pair number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationPoint {
    pub n: usize,
    pub d: f64,
    /// `1 − N D_j[N]`, from its own ratio rather than by subtraction.
    pub vacancy: f64,
}

/// [`occupation_sweep`] on a caller-supplied table of `spectrum`, which
/// must reach the largest `N`. Several states can share one table this way.
pub fn occupation_curve(
    spectrum: &SchmidtSpectrum,
    table: &ChiTable,
    j: usize,
    ns: &[usize],
) -> Result<Vec<OccupationPoint>> {
    let Some(&n_max) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    check_sweep(spectrum, j, ns)?;
    if table.fingerprint() != spectrum.fingerprint() {
        return Err(Error::invalid("table fingerprint does not match the spectrum"));
    }
    table.require(n_max)?;
    let weights = spectrum.weights();
    let loo = chi_leave_one_out(table, weights, j, n_max)?;
    ns.iter()
        .map(|&n| {
            let ln_e = table.log_e(n);
            let d = (weights[j].ln() + loo.log_e(n - 1) - ln_e).exp() / n as f64;
            check_pauli(d, n)?;
            let vacancy = (loo.log_e(n) - ln_e).exp().min(1.0);
            Ok(OccupationPoint { n, d, vacancy })
        })
        .collect()
}

fn check_sweep(spectrum: &SchmidtSpectrum, j: usize, ns: &[usize]) -> Result<()> {
    let rank = spectrum.rank();
    if j >= rank {
        return Err(Error::invalid(format!("state index {} outside 1..={rank}", j + 1)));
    }
    match ns.iter().find(|&&n| n == 0 || n > rank) {
        Some(0) => Err(Error::invalid("pair number N must be at least 1")),
        Some(&n) => Err(Error::VanishingState { n, rank }),
        None => Ok(()),
    }
}

/// `λ / (1 + λ (N − 1))`, the smooth approximation to `D_j[N]`.
pub fn occupation_approx(lambda: f64, n: usize) -> f64 {
    lambda / (1.0 + lambda * (n as f64 - 1.0))
}

/// One row of the spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellDensity {
    /// Zero-based flattened index of the shell's first state.
    pub first_state: usize,
    pub n: u32,
    pub l: u32,
    pub degeneracy: usize,
    pub lambda: f64,
    pub density: f64,
}

/// Split of the spectrum into the `t` lowest states and the rest.
#[derive(Debug, Clone)]
pub struct CountWindow {
    t: usize,
    n: usize,
    inner: ChiTable,
    outer: ChiTable,
}

impl CountWindow {
    pub fn t(&self) -> usize {
        self.t
    }

    /// `ln(ê_k(Λ̃) ê_{N−k}(Λ̄))`, or `-inf` when either factor vanishes.
    pub(crate) fn ln_weight(&self, k: usize) -> f64 {
        if k > self.inner.order() || self.n - k > self.outer.order() {
            return f64::NEG_INFINITY;
        }
        let (a, b) = (self.inner.log_e(k), self.outer.log_e(self.n - k));
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            a + b
        }
    }
}

/// Counting statistics of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowReport {
    pub t: usize,
    pub mean: f64,
    pub variance: f64,
    pub poisson_var: f64,
    pub binomial_var: f64,
}

impl WindowReport {
    /// `variance / mean`; one for a Poisson distribution.
    pub fn fano(&self) -> f64 {
        self.variance / self.mean
    }
}

/// `ln C(n, k)` as a float, for callers that fold binomials into log sums.
pub(crate) fn ln_choose(n: usize, k: usize) -> f64 {
    ln_binomial(n as u64, k as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{synth_spectrum, SynthKind};

    fn spec(w: &[f64]) -> SchmidtSpectrum {
        synth_spectrum(&SynthKind::Custom { weights: w.to_vec() }).unwrap()
    }

    #[test]
    fn three_state_occupations() {
        let s = spec(&[0.5, 0.3, 0.2]);
        let e = Ensemble::new(&s, 2).unwrap();
        assert!((e.occupation(0).unwrap() - 0.25 / 0.62).abs() < 1e-12);
        let all = e.occupations().unwrap();
        let expect = [0.25 / 0.62, 0.21 / 0.62, 0.16 / 0.62];
        for (a, b) in all.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let dens: Vec<f64> = e.spectral_density().unwrap().iter().map(|d| d.density).collect();
        assert!((dens[0] - 0.806452).abs() < 1e-6 && (dens[2] - 0.516129).abs() < 1e-6);
        assert!((e.normalization_ratio().unwrap() - 0.09 / 0.31).abs() < 1e-12);
        let e1 = Ensemble::new(&s, 1).unwrap();
        assert!((e1.normalization_ratio().unwrap() - 0.62).abs() < 1e-12);
    }

    #[test]
    fn single_pair_occupies_lambda() {
        let s = spec(&[0.5, 0.3, 0.2]);
        let e = Ensemble::new(&s, 1).unwrap();
        for (d, l) in e.occupations().unwrap().iter().zip(s.weights()) {
            assert!((d - l).abs() < 1e-15);
        }
        assert!((occupation_approx(0.5, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(occupation_approx(0.3, 1), 0.3);
    }

    #[test]
    fn d_shell_density() {
        let s = crate::spectrum::SchmidtSpectrum::from_shells(
            vec![crate::spectrum::Shell { n: 0, l: 1, lambda: 1.0 / 3.0, energy: None }],
            Default::default(),
            crate::spectrum::Provenance::new("test"),
        )
        .unwrap();
        let e = Ensemble::new(&s, 1).unwrap();
        let d = e.spectral_density().unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].density - 1.0).abs() < 1e-14);
    }

    #[test]
    fn window_counts() {
        let s = spec(&[0.5, 0.3, 0.2]);
        let e = Ensemble::new(&s, 2).unwrap();
        let w = e.window(1).unwrap();
        let p = e.count_distribution(&w).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[0] - 0.193548).abs() < 1e-6 && (p[1] - 0.806452).abs() < 1e-6);
        assert!((e.mean_population(1).unwrap() - 0.806452).abs() < 1e-6);
        let full = e.count_distribution(&e.window(3).unwrap()).unwrap();
        assert_eq!(full.len(), 3);
        assert!(full[0] == 0.0 && full[1] == 0.0 && (full[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_window_mean() {
        let s = spec(&[1.0; 10]);
        let e = Ensemble::new(&s, 4).unwrap();
        assert!((e.mean_population(5).unwrap() - 2.0).abs() < 1e-12);
        let r = e.window_report(&e.window(5).unwrap()).unwrap();
        assert!((r.mean - 2.0).abs() < 1e-12);
        // hypergeometric variance 4·(5/10)(5/10)(6/9)
        assert!((r.variance - 4.0 * 0.25 * 6.0 / 9.0).abs() < 1e-12);
        let sat = Ensemble::new(&s, 10).unwrap();
        assert_eq!(sat.normalization_ratio().unwrap(), 0.0);
    }

    #[test]
    fn vanishing_state_rejected() {
        let s = spec(&[0.5, 0.5]);
        assert!(matches!(Ensemble::new(&s, 3), Err(Error::VanishingState { n: 3, rank: 2 })));
        assert!(Ensemble::new(&s, 0).is_err());
    }

    #[test]
    fn sweep_matches_single_ensembles() {
        let spec = synth_spectrum(&SynthKind::Geometric { ratio: 0.8, size: 30 }).unwrap();
        let ns = [1, 4, 9, 17];
        let swept = occupation_sweep(&spec, 2, &ns).unwrap();
        for (n, d) in ns.iter().zip(&swept) {
            let direct = Ensemble::new(&spec, *n).unwrap().occupation(2).unwrap();
            assert!((d - direct).abs() < 1e-13 * direct, "N={n}");
        }
        assert!(occupation_sweep(&spec, 0, &[31]).is_err());
    }

    #[test]
    fn curve_vacancy_matches_ensemble() {
        let spec = synth_spectrum(&SynthKind::Geometric { ratio: 0.7, size: 12 }).unwrap();
        let ns = [2, 6, 11, 12];
        let table = chi_table(spec.weights(), 12).unwrap();
        let curve = occupation_curve(&spec, &table, 1, &ns).unwrap();
        for p in &curve {
            let ens = Ensemble::new(&spec, p.n).unwrap();
            let v = ens.vacancy(1).unwrap();
            assert!((p.vacancy - v).abs() <= 1e-13 * v.max(1e-300), "N={}", p.n);
            assert!((p.d - ens.occupation(1).unwrap()).abs() < 1e-13);
        }
        assert_eq!(curve[3].vacancy, 0.0);
        let short = chi_table(spec.weights(), 5).unwrap();
        assert!(occupation_curve(&spec, &short, 1, &ns).is_err());
    }
}
