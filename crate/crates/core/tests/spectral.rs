//! Cross-module checks between the frequency systems, exact counting and
//! the saddle-point machinery.

use kronlab_core::counting::{count_n, count_n_exact, spectrum_up_to};
use kronlab_core::frequencies::{FrequencySystem, SystemKind};
use kronlab_core::tauber::{solve_saddle, PhiEvaluator};
use proptest::prelude::*;

fn power_law(alpha: f64, bound: f64) -> FrequencySystem {
    FrequencySystem::covering(SystemKind::power_law(1.0, alpha), bound).unwrap()
}

/// e^{φ(s)} against the spectral sum below E. The remainder is bounded by
/// e^{φ(s/2) − sE/2}, since e^{−sλ} ≤ e^{−sE/2}·e^{−sλ/2} for λ > E.
#[test]
fn laplace_identity_with_tail_bound() {
    for (alpha, s, e) in [(1.0, 1.0, 60.0), (1.5, 1.0, 50.0), (2.0, 1.5, 40.0), (1.0, 2.0, 30.0)] {
        let sys = power_law(alpha, e + 1.0);
        let eval = PhiEvaluator::new(&sys);
        let spectrum = spectrum_up_to(&sys, e).unwrap();
        let partial: f64 = spectrum.iter().map(|&(l, m)| m as f64 * (-s * l).exp()).sum();
        let full = eval.phi(s).unwrap().exp();
        let tail = (eval.phi(s / 2.0).unwrap() - s * e / 2.0).exp();
        assert!(tail < 1e-10, "α={alpha}: tail bound {tail:e}");
        // The series itself is summed to a relative tolerance well below 1e-8.
        assert!((full - partial).abs() <= tail + 1e-12 * full, "α={alpha}: {full} vs {partial}");
    }
}

#[test]
fn primelog_laplace_identity() {
    // Σ_η e^{−s·log n} over n with prime factors among the first primes.
    let sys = FrequencySystem::covering(SystemKind::PrimeLog, 9.0).unwrap();
    let eval = PhiEvaluator::new(&sys);
    let s = 3.0;
    let spectrum = spectrum_up_to(&sys, 8.5).unwrap();
    let partial: f64 = spectrum.iter().map(|&(l, m)| m as f64 * (-s * l).exp()).sum();
    // ζ(3) = 1.2020569031595942...
    assert!((eval.phi(s).unwrap().exp() - 1.2020569031595942).abs() < 1e-9);
    assert!((partial - 1.2020569031595942).abs() < 2e-7);
}

#[test]
fn fixed_shift_of_n_tilde_is_negligible() {
    for alpha in [1.0, 1.5, 2.0] {
        let sys = FrequencySystem::generate(SystemKind::power_law(1.0, alpha), 50).unwrap();
        let eval = PhiEvaluator::new(&sys);
        let mut last = f64::INFINITY;
        for e in [1e2, 1e3, 1e4, 1e5, 1e6] {
            let base = solve_saddle(&eval, e).unwrap();
            let shifted = solve_saddle(&eval, e + 1.0).unwrap();
            let dev = ((shifted.ln_n_tilde - base.ln_n_tilde).exp() - 1.0).abs();
            assert!(dev < last, "α={alpha}, E={e}");
            last = dev;
        }
        assert!(last < 2e-3, "α={alpha}: {last}");
    }
}

/// A shift by c/σ_E multiplies Ñ by e^c in the limit, since d log Ñ/dE ≈ σ_E.
#[test]
fn shift_by_inverse_sigma_scales_by_exp_c() {
    for alpha in [1.0, 2.0] {
        let sys = FrequencySystem::generate(SystemKind::power_law(1.0, alpha), 50).unwrap();
        let eval = PhiEvaluator::new(&sys);
        for c in [0.5, 1.0] {
            let mut last = f64::INFINITY;
            for e in [1e2, 1e4, 1e6] {
                let base = solve_saddle(&eval, e).unwrap();
                let shifted = solve_saddle(&eval, e + c / base.sigma).unwrap();
                let ratio = (shifted.ln_n_tilde - base.ln_n_tilde).exp();
                let dev = (ratio / c.exp() - 1.0).abs();
                assert!(dev < last);
                last = dev;
            }
            assert!(last < 0.01, "α={alpha}, c={c}: {last}");
        }
    }
}

#[test]
fn exact_counts_agree_across_methods() {
    let sys = power_law(1.0, 61.0);
    for e in [0.0, 3.0, 17.5, 60.0] {
        assert_eq!(count_n_exact(&sys, e).unwrap().count, count_n(&sys, e).unwrap().count);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_signs(alpha in 1.0f64..2.5, amp in 0.5f64..3.0, sigma in 0.01f64..2.0) {
        let sys = FrequencySystem::generate(SystemKind::power_law(amp, alpha), 20).unwrap();
        let eval = PhiEvaluator::new(&sys);
        prop_assert!(eval.phi(sigma).unwrap() > 0.0);
        prop_assert!(eval.phi1(sigma).unwrap() < 0.0);
        prop_assert!(eval.phi2(sigma).unwrap() > 0.0);
        prop_assert!(eval.phi3(sigma).unwrap() < 0.0);
    }

    #[test]
    fn saddle_residual(alpha in 1.0f64..2.5, log_e in 1.0f64..12.0) {
        let sys = FrequencySystem::generate(SystemKind::power_law(1.0, alpha), 20).unwrap();
        let eval = PhiEvaluator::new(&sys);
        let e = log_e.exp();
        let r = solve_saddle(&eval, e).unwrap();
        prop_assert!(r.sigma > 0.0 && r.phi2 > 0.0);
        prop_assert!(r.residual() <= 1e-10 * e);
    }

    #[test]
    fn prefix_stability(alpha in 1.0f64..3.0, n in 2usize..40, m in 1usize..40, mass in 0.1f64..5.0) {
        let m = m.min(n);
        for kind in [SystemKind::power_law(1.3, alpha), SystemKind::Dispersion { mass }, SystemKind::PrimeLog] {
            let long = FrequencySystem::generate(kind.clone(), n).unwrap();
            let short = FrequencySystem::generate(kind, m).unwrap();
            let cut = long.truncated(m).unwrap();
            prop_assert_eq!(cut.omegas(), short.omegas());
        }
        let disp = FrequencySystem::generate(SystemKind::Dispersion { mass }, n).unwrap();
        for (i, w) in disp.omegas().iter().enumerate() {
            let k = (i + 1) as f64;
            prop_assert!((w * w - k * k - mass * mass).abs() <= 1e-12 * (k * k + mass * mass));
        }
    }

    #[test]
    fn count_is_monotone_and_matches_spectrum(alpha in 1.0f64..2.0, e in 0.0f64..25.0, de in 0.0f64..5.0) {
        let sys = power_law(alpha, e + de + 1.0);
        let lo = count_n(&sys, e).unwrap().count;
        let hi = count_n(&sys, e + de).unwrap().count;
        prop_assert!(lo <= hi);
        let weighted: u64 = spectrum_up_to(&sys, e).unwrap().iter().map(|&(_, m)| m).sum();
        prop_assert_eq!(weighted, lo);
    }
}
