//! CHSH correlators of the split state restricted to one single-fermion
//! state `j`.
//!
//! Conditioned on `j`, each spatial mode is a qubit with `|o⟩` (state `j`
//! occupied in that mode) and `|e⟩` (empty). The split state then reads
//! `a|o e⟩ + b|e o⟩ + c|e e⟩` with `a = √(M D_j)`, `b = √((N−M) D_j)` and
//! `c = √(1 − N D_j)`. The settings are `Q = Z₂`, `R = X₂` on mode 2 and
//! `S = (X₁ − Z₁)/√2`, `T = (X₁ + Z₁)/√2` on mode 1, with
//! `Z = |e⟩⟨e| − |o⟩⟨o|` and `X = |e⟩⟨o| + |o⟩⟨e|`.

use std::f64::consts::SQRT_2;
use std::fmt;

use crate::ensemble::{occupation_approx, Ensemble, PAULI_SLACK};
use crate::error::{Error, Result};

/// Classical bound on `⟨ℳ⟩`.
pub const CLASSICAL_BOUND: f64 = 2.0;
/// Tsirelson bound `2√2`.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

/// Where a `D_j` value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccupationSource {
    Exact,
    Approx,
    Measured,
}

impl OccupationSource {
    pub fn as_str(self) -> &'static str {
        match self {
            OccupationSource::Exact => "exact",
            OccupationSource::Approx => "approx",
            OccupationSource::Measured => "measured",
        }
    }
}

impl fmt::Display for OccupationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Target state `j` (zero-based), pair numbers and occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellSetting {
    pub j: usize,
    pub n: usize,
    pub m: usize,
    pub d: f64,
    /// `1 − N D_j`, held separately because its square root amplifies any
    /// rounding near saturation.
    pub vacancy: f64,
    pub source: OccupationSource,
}

impl BellSetting {
    pub fn new(j: usize, n: usize, m: usize, d: f64, source: OccupationSource) -> Result<Self> {
        if m > n {
            return Err(Error::invalid(format!("M={m} exceeds N={n}")));
        }
        let nd = check_occupation(n as f64, d)?;
        Ok(BellSetting {
            j,
            n,
            m,
            d,
            vacancy: 1.0 - nd,
            source,
        })
    }

    /// Uses the exact `D_j[N]` of `ens`, with the vacancy from its own table.
    pub fn from_ensemble(ens: &Ensemble<'_>, j: usize, m: usize) -> Result<Self> {
        let d = ens.occupation(j)?;
        let mut s = Self::new(j, ens.n(), m, d, OccupationSource::Exact)?;
        s.vacancy = ens.vacancy(j)?.min(1.0);
        Ok(s)
    }

    /// Uses `λ_j / (1 + λ_j (N − 1))` in place of `D_j[N]`.
    pub fn approximate(lambda: f64, j: usize, n: usize, m: usize) -> Result<Self> {
        Self::new(j, n, m, occupation_approx(lambda, n), OccupationSource::Approx)
    }

    pub fn nd(&self) -> f64 {
        self.n as f64 * self.d
    }
}

/// The four correlators and `⟨ℳ⟩ = ⟨QS⟩ + ⟨RS⟩ + ⟨RT⟩ − ⟨QT⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlators {
    pub qs: f64,
    pub rs: f64,
    pub rt: f64,
    pub qt: f64,
    pub chsh: f64,
}

/// Correlators with optional one-sigma uncertainties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorSet {
    pub value: Correlators,
    pub sigma: Option<Correlators>,
}

impl CorrelatorSet {
    pub fn chsh(&self) -> f64 {
        self.value.chsh
    }

    pub fn violates(&self) -> bool {
        self.value.chsh > CLASSICAL_BOUND
    }
}

fn check_occupation(n: f64, d: f64) -> Result<f64> {
    let nd = n * d;
    if !(d.is_finite() && d >= 0.0 && nd <= 1.0 + PAULI_SLACK) {
        return Err(Error::InvalidOccupation { nd });
    }
    Ok(nd.min(1.0))
}

/// Closed forms at real-valued `(N, N₁, D)`, with `N₂ = N − N₁`.
fn closed_form(n1: f64, n2: f64, d: f64) -> Correlators {
    let x = ((n1 + n2) * d).min(1.0);
    closed_form_with_vacancy(n1, n2, d, 1.0 - x)
}

fn closed_form_with_vacancy(n1: f64, n2: f64, d: f64, vacancy: f64) -> Correlators {
    // an occupation admitted within the Pauli slack is taken as saturated
    let d = d.min(1.0 / (n1 + n2));
    let x = 1.0 - vacancy;
    let u = d * vacancy;
    let ac = (n1 * u).sqrt();
    let bc = (n2 * u).sqrt();
    let ab = (n1 * n2).sqrt() * d;
    let qs = SQRT_2 * (x - 0.5 + ac);
    let rs = SQRT_2 * (ab - bc);
    let rt = SQRT_2 * (ab + bc);
    let qt = SQRT_2 * (0.5 - x + ac);
    Correlators {
        qs,
        rs,
        rt,
        qt,
        chsh: qs + rs + rt - qt,
    }
}

pub fn chsh_correlators(setting: &BellSetting) -> Result<CorrelatorSet> {
    check_occupation(setting.n as f64, setting.d)?;
    let m = setting.m as f64;
    if !(0.0..=1.0).contains(&setting.vacancy) {
        return Err(Error::invalid(format!("vacancy {} outside [0, 1]", setting.vacancy)));
    }
    let value = closed_form_with_vacancy(m, setting.n as f64 - m, setting.d, setting.vacancy);
    Ok(CorrelatorSet { value, sigma: None })
}

/// `⟨ℳ⟩ = √2 (2 D (N + √(M(N−M))) − 1)`.
pub fn chsh_value(n: usize, m: usize, d: f64) -> Result<f64> {
    if m > n {
        return Err(Error::invalid(format!("M={m} exceeds N={n}")));
    }
    check_occupation(n as f64, d)?;
    let (n, m) = (n as f64, m as f64);
    let d = d.min(1.0 / n);
    Ok(SQRT_2 * (2.0 * d * (n + (m * (n - m)).sqrt()) - 1.0))
}

/// Smallest `N·D_j` for which `⟨ℳ⟩` exceeds 2 at the given split.
pub fn violation_threshold(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    n * (1.0 + SQRT_2) / (2.0 * (n + (m * (n - m)).sqrt()))
}

/// `(1 + √2)/3`, the threshold for a balanced split.
pub fn balanced_violation_threshold() -> f64 {
    (1.0 + SQRT_2) / 3.0
}

/// Mean pair numbers per mode and mean occupation, with uncertainties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuatingEnsemble {
    pub n1: f64,
    pub dn1: f64,
    pub n2: f64,
    pub dn2: f64,
    pub d: f64,
    pub dd: f64,
}

impl FluctuatingEnsemble {
    pub fn n(&self) -> f64 {
        self.n1 + self.n2
    }

    fn validate(&self) -> Result<()> {
        let means = [self.n1, self.n2, self.d];
        let deltas = [self.dn1, self.dn2, self.dd];
        if means.iter().chain(&deltas).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("means and uncertainties must be finite and nonnegative"));
        }
        if !(self.n() > 0.0) {
            return Err(Error::invalid("mean pair number must be positive"));
        }
        check_occupation(self.n(), self.d).map(|_| ())
    }
}

/// Correlators at the mean values, with uncertainties from independent,
/// linearly propagated errors on `N̄₁`, `N̄₂` and `D̄_j`.
pub fn chsh_fluctuating(ens: &FluctuatingEnsemble) -> Result<CorrelatorSet> {
    ens.validate()?;
    let value = closed_form(ens.n1, ens.n2, ens.d);
    let (n1, n2, d) = (ens.n1, ens.n2, ens.d);
    let n = n1 + n2;
    let x = (n * d).min(1.0);
    let u = d * (1.0 - x);
    let (ac, bc, s) = ((n1 * u).sqrt(), (n2 * u).sqrt(), (n1 * n2).sqrt());

    // gradients with respect to (N̄₁, N̄₂, D̄)
    let gx = [d, d, n];
    let gu = [-d * d, -d * d, 1.0 - 2.0 * x];
    let g_ac = [(n1 * gu[0] + u) / (2.0 * ac), n1 * gu[1] / (2.0 * ac), n1 * gu[2] / (2.0 * ac)];
    let g_bc = [n2 * gu[0] / (2.0 * bc), (n2 * gu[1] + u) / (2.0 * bc), n2 * gu[2] / (2.0 * bc)];
    let g_ab = [d * n2 / (2.0 * s), d * n1 / (2.0 * s), s];
    let combine = |f: &dyn Fn(usize) -> f64| [0, 1, 2].map(|i| SQRT_2 * f(i));
    let g_qs = combine(&|i| gx[i] + g_ac[i]);
    let g_rs = combine(&|i| g_ab[i] - g_bc[i]);
    let g_rt = combine(&|i| g_ab[i] + g_bc[i]);
    let g_qt = combine(&|i| -gx[i] + g_ac[i]);
    let g_m = combine(&|i| 2.0 * gx[i] + 2.0 * g_ab[i]);

    let deltas = [ens.dn1, ens.dn2, ens.dd];
    let sigma = |g: [f64; 3]| {
        let mut var = 0.0;
        for (gi, di) in g.iter().zip(deltas) {
            // a vanishing uncertainty contributes nothing even where the
            // derivative diverges
            if di > 0.0 {
                var += (gi * di).powi(2);
            }
        }
        if var.is_nan() {
            f64::INFINITY
        } else {
            var.sqrt()
        }
    };
    Ok(CorrelatorSet {
        value,
        sigma: Some(Correlators {
            qs: sigma(g_qs),
            rs: sigma(g_rs),
            rt: sigma(g_rt),
            qt: sigma(g_qt),
            chsh: sigma(g_m),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{synth_spectrum, SynthKind};

    fn setting(n: usize, m: usize, d: f64) -> BellSetting {
        BellSetting::new(0, n, m, d, OccupationSource::Measured).unwrap()
    }

    #[test]
    fn three_state_example() {
        let spec = synth_spectrum(&SynthKind::Custom {
            weights: vec![0.5, 0.3, 0.2],
        })
        .unwrap();
        let ens = Ensemble::new(&spec, 2).unwrap();
        let s = BellSetting::from_ensemble(&ens, 0, 1).unwrap();
        assert!((s.d - 0.25 / 0.62).abs() < 1e-14);
        let c = chsh_correlators(&s).unwrap();
        assert!((c.value.qs - 0.8284670179503322).abs() < 1e-13);
        assert!((c.chsh() - 2.007270862723103).abs() < 1e-13);
        // six-digit occupation as often quoted
        let rounded = chsh_correlators(&setting(2, 1, 0.403226)).unwrap();
        assert!((rounded.value.qs - 0.828467).abs() < 1e-6);
        assert!((rounded.chsh() - 2.007273).abs() < 1e-6);
        assert!((chsh_value(2, 1, s.d).unwrap() - c.chsh()).abs() < 1e-12);
        assert!(c.violates());
    }

    #[test]
    fn empty_and_full() {
        let c = chsh_correlators(&setting(3, 1, 0.0)).unwrap().value;
        assert!((c.qs + SQRT_2 / 2.0).abs() < 1e-15 && (c.qt - SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!((c.rs, c.rt), (0.0, 0.0));
        assert!((c.chsh + SQRT_2).abs() < 1e-15);
        let bell = chsh_correlators(&setting(2, 1, 0.5)).unwrap();
        assert!((bell.chsh() - TSIRELSON_BOUND).abs() < 1e-12);
    }

    #[test]
    fn slack_overshoot_stays_capped() {
        let d = (1.0 + 0.5 * PAULI_SLACK) / 1000.0;
        let c = chsh_correlators(&setting(1000, 500, d)).unwrap();
        assert!(c.chsh() <= TSIRELSON_BOUND);
        assert!(chsh_value(1000, 500, d).unwrap() <= TSIRELSON_BOUND);
    }

    #[test]
    fn thresholds() {
        let x = balanced_violation_threshold();
        assert!((x - 0.804738).abs() < 1e-6);
        assert!((chsh_value(10, 5, x / 10.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((violation_threshold(10, 5) - x).abs() < 1e-15);
        let y = violation_threshold(7, 2);
        assert!((chsh_value(7, 2, y / 7.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn overfull_rejected() {
        assert!(matches!(
            BellSetting::new(0, 4, 2, 0.3, OccupationSource::Exact),
            Err(Error::InvalidOccupation { .. })
        ));
        assert!(chsh_value(4, 2, 0.26).is_err());
        assert!(chsh_value(4, 5, 0.1).is_err());
    }

    #[test]
    fn fluctuating_reduces_to_fixed() {
        let d = 0.25 / 0.62;
        let f = FluctuatingEnsemble {
            n1: 1.0,
            dn1: 0.0,
            n2: 1.0,
            dn2: 0.0,
            d,
            dd: 0.0,
        };
        let c = chsh_fluctuating(&f).unwrap();
        let fixed = chsh_correlators(&setting(2, 1, d)).unwrap();
        assert!((c.chsh() - fixed.chsh()).abs() < 1e-15);
        assert_eq!(c.sigma.unwrap().chsh, 0.0);

        let g = FluctuatingEnsemble { dd: 1e-3, ..f };
        let expect = SQRT_2 * 2.0 * (2.0 + 1.0) * 1e-3;
        assert!((chsh_fluctuating(&g).unwrap().sigma.unwrap().chsh - expect).abs() < 1e-15);
    }

    #[test]
    fn fluctuating_gradient_matches_differences() {
        let f = FluctuatingEnsemble {
            n1: 30.0,
            dn1: 0.5,
            n2: 50.0,
            dn2: 0.0,
            d: 0.006,
            dd: 0.0,
        };
        let sigma = chsh_fluctuating(&f).unwrap().sigma.unwrap();
        let h = 1e-6;
        let up = closed_form(f.n1 + h, f.n2, f.d);
        let dn = closed_form(f.n1 - h, f.n2, f.d);
        for (s, (a, b)) in [
            (sigma.qs, (up.qs, dn.qs)),
            (sigma.rs, (up.rs, dn.rs)),
            (sigma.rt, (up.rt, dn.rt)),
            (sigma.qt, (up.qt, dn.qt)),
        ] {
            let numeric = ((a - b) / (2.0 * h)).abs() * 0.5;
            assert!((s - numeric).abs() < 1e-7, "{s} vs {numeric}");
        }
    }
}
