use proptest::prelude::*;

use coboson::bell::{chsh_correlators, chsh_value, BellSetting, OccupationSource, TSIRELSON_BOUND};
use coboson::ensemble::Ensemble;
use coboson::oracle::{brute_purity, build_split_state};
use coboson::spectrum::{read_any, synth_spectrum, write_plain, write_structured, SchmidtSpectrum, SynthKind};
use coboson::splitting::{joint_count_distribution, purity};
use coboson::sympoly::{chi_newton, chi_table, NewtonGuard};

fn spectrum(weights: Vec<f64>) -> SchmidtSpectrum {
    synth_spectrum(&SynthKind::Custom { weights }).unwrap()
}

/// Positive weights spread over up to six decades.
fn weights(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6.0f64..0.0, len).prop_map(|e| e.into_iter().map(|x| 10f64.powf(x)).collect())
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn newton_route_matches_dp(w in weights(1..=40), k in 1usize..30) {
        let dp = chi_table(&w, k).unwrap();
        let nt = chi_newton(&w, k, NewtonGuard::default()).unwrap();
        for i in 0..=k {
            let (a, b) = (dp.log_e(i), nt.log_e(i));
            if a == f64::NEG_INFINITY {
                prop_assert_eq!(b, f64::NEG_INFINITY);
            } else {
                prop_assert!((a - b).abs() < 1e-9, "k={} dp={} newton={}", i, a, b);
            }
        }
    }

    #[test]
    fn newton_inequalities_hold(w in weights(2..=60)) {
        let t = chi_table(&w, w.len()).unwrap();
        prop_assert!(t.newton_inequality_slack(w.len()) > -1e-10);
    }

    #[test]
    fn vandermonde_convolution(a in weights(1..=12), b in weights(1..=12)) {
        let k = a.len() + b.len();
        let ta = chi_table(&a, k).unwrap();
        let tb = chi_table(&b, k).unwrap();
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        let t = chi_table(&all, k).unwrap();
        for n in 0..=k {
            let conv: f64 = (0..=n).map(|i| ta.e(i) * tb.e(n - i)).sum();
            prop_assert!(close(t.e(n), conv, 1e-12), "n={}", n);
        }
    }

    #[test]
    fn occupation_sum_rule_and_pauli(w in weights(2..=30), frac in 0.0f64..1.0) {
        let spec = spectrum(w);
        let n = 1 + ((spec.rank() - 1) as f64 * frac) as usize;
        let ens = Ensemble::new(&spec, n).unwrap();
        let d = ens.occupations().unwrap();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for (dj, lj) in d.iter().zip(spec.weights()) {
            prop_assert!(*dj >= 0.0 && n as f64 * dj <= 1.0 + 1e-10);
            prop_assert!(*lj > 0.0);
        }
        // larger coefficients are at least as occupied
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&i, &j| spec.weights()[j].total_cmp(&spec.weights()[i]));
        for p in order.windows(2) {
            prop_assert!(d[p[0]] >= d[p[1]] * (1.0 - 1e-10));
        }
    }

    #[test]
    fn counting_distribution_consistent(w in weights(3..=25), n_frac in 0.0f64..1.0, t_frac in 0.0f64..1.0) {
        let spec = spectrum(w);
        let n = 1 + ((spec.rank() - 1) as f64 * n_frac) as usize;
        let t = 1 + ((spec.rank() - 1) as f64 * t_frac) as usize;
        let ens = Ensemble::new(&spec, n).unwrap();
        let window = ens.window(t).unwrap();
        let p = ens.count_distribution(&window).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mean: f64 = p.iter().enumerate().map(|(k, x)| k as f64 * x).sum();
        prop_assert!((mean - ens.mean_population(t).unwrap()).abs() < 1e-9 * (1.0 + mean));
        let m = n / 2;
        let joint = joint_count_distribution(&ens, m, &window).unwrap();
        prop_assert!((joint.total() - 1.0).abs() < 1e-10);
        // summing the joint distribution along anti-diagonals recovers P(n)
        for (k, pk) in p.iter().enumerate() {
            let diag: f64 = joint
                .p
                .iter()
                .enumerate()
                .filter_map(|(n1, row)| k.checked_sub(n1).and_then(|n2| row.get(n2)))
                .sum();
            prop_assert!((diag - pk).abs() < 1e-10, "n={}", k);
        }
    }

    #[test]
    fn purity_symmetric_and_bounded(w in weights(4..=40), n_frac in 0.0f64..1.0, m_frac in 0.0f64..1.0) {
        let spec = spectrum(w);
        let n = 1 + ((spec.rank().min(24) - 1) as f64 * n_frac) as usize;
        let m = (n as f64 * m_frac) as usize;
        let ens = Ensemble::with_order(&spec, n, 2 * n).unwrap();
        let p = purity(&ens, m).unwrap();
        let q = purity(&ens, n - m).unwrap();
        prop_assert!((p.ln_value - q.ln_value).abs() < 1e-9);
        prop_assert!(p.ln_value <= 1e-12);
        prop_assert!(p.ln_value >= p.ln_lower_bound - 1e-9);
    }

    #[test]
    fn purity_matches_enumeration(w in weights(2..=8), n_frac in 0.0f64..1.0, m_frac in 0.0f64..1.0) {
        let spec = spectrum(w);
        let n = 1 + ((spec.rank().min(4) - 1) as f64 * n_frac) as usize;
        let m = (n as f64 * m_frac) as usize;
        let ens = Ensemble::with_order(&spec, n, 2 * n).unwrap();
        let fast = purity(&ens, m).unwrap().value();
        let brute = brute_purity(&build_split_state(spec.weights(), n, m).unwrap());
        prop_assert!(close(fast, brute, 1e-9), "{} vs {}", fast, brute);
    }

    #[test]
    fn chsh_within_tsirelson(n in 1usize..5000, m_frac in 0.0f64..=1.0, nd in 0.0f64..=1.0) {
        let m = (n as f64 * m_frac) as usize;
        let d = nd / n as f64;
        let s = BellSetting::new(0, n, m, d, OccupationSource::Measured).unwrap();
        let c = chsh_correlators(&s).unwrap();
        prop_assert!(c.chsh().abs() <= TSIRELSON_BOUND + 1e-12);
        prop_assert!((c.chsh() - chsh_value(n, m, d).unwrap()).abs() < 1e-9);
        for v in [c.value.qs, c.value.rs, c.value.rt, c.value.qt] {
            prop_assert!(v.abs() <= std::f64::consts::SQRT_2 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn exact_occupation_chsh_within_tsirelson(w in weights(2..=30), n_frac in 0.0f64..=1.0) {
        let spec = spectrum(w);
        let n = 1 + ((spec.rank() - 1) as f64 * n_frac) as usize;
        let ens = Ensemble::new(&spec, n).unwrap();
        for j in 0..spec.rank() {
            let s = BellSetting::from_ensemble(&ens, j, n / 2).unwrap();
            prop_assert!(chsh_correlators(&s).unwrap().chsh() <= TSIRELSON_BOUND);
        }
    }

    #[test]
    fn spectrum_files_round_trip(w in weights(1..=50)) {
        let spec = spectrum(w);
        for plain in [false, true] {
            let mut buf = Vec::new();
            if plain {
                write_plain(&spec, &mut buf).unwrap();
            } else {
                write_structured(&spec, &mut buf).unwrap();
            }
            let back = read_any(buf.as_slice()).unwrap();
            prop_assert_eq!(back.weights(), spec.weights());
            prop_assert_eq!(back.fingerprint(), spec.fingerprint());
        }
    }
}
