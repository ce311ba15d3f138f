use hyperlb::analytic::{
    alpha, blocking_finite, blocking_limit, expected_admissions, extension_derived, extension_metrics,
    lambda_star, open_closed_pmf, poisson_pmf, update_transition_probs, ExtensionParams, UpdateLaw,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

fn m(tau: f64, k: usize) -> f64 {
    expected_admissions(UpdateLaw::new(tau, k).unwrap())
}

// K - sum_{k<K} (K - k) e^{-tau} tau^k / k!
fn m_alternate(tau: f64, k: usize) -> f64 {
    k as f64 - (0..k).map(|j| (k - j) as f64 * poisson_pmf(j, tau)).sum::<f64>()
}

proptest! {
    #[test]
    fn admissions_strictly_between_zero_and_k(tau in 1e-3f64..25.0, k in 1usize..20) {
        let v = m(tau, k);
        prop_assert!(v > 0.0 && v < k as f64, "M = {v}");
    }

    #[test]
    fn admissions_increasing_and_concave(tau in 0.01f64..20.0, k in 1usize..12) {
        let h = 1e-2;
        let (a, b, c) = (m(tau, k), m(tau + h, k), m(tau + 2.0 * h, k));
        prop_assert!(b > a && c > b);
        prop_assert!(c - 2.0 * b + a < 1e-15);
    }

    #[test]
    fn alternate_form_agrees(tau in 0.0f64..15.0, k in 1usize..15) {
        let tau = tau.max(1e-9);
        prop_assert!((m(tau, k) - m_alternate(tau, k)).abs() < 1e-12);
    }

    #[test]
    fn bound_is_delta_times_admissions(delta in 0.05f64..10.0, k in 1usize..10) {
        let l = lambda_star(delta, k).unwrap();
        prop_assert!((l - delta * m(1.0 / delta, k)).abs() < 1e-12);
    }

    #[test]
    fn bound_increasing_in_delta_and_k(delta in 0.05f64..5.0, k in 1usize..10) {
        let l = lambda_star(delta, k).unwrap();
        prop_assert!(lambda_star(delta * 1.01, k).unwrap() > l);
        prop_assert!(lambda_star(delta, k + 1).unwrap() > l);
        prop_assert!(l < 1.0);
    }

    #[test]
    fn k2_closed_form(delta in 0.05f64..10.0) {
        let x = 1.0 / delta;
        let closed = 2.0 * delta - (2.0 * delta + 1.0) * (-x).exp();
        prop_assert!((lambda_star(delta, 2).unwrap() - closed).abs() < 1e-12);
    }

    #[test]
    fn transition_probs_are_a_distribution(tau in 1e-3f64..30.0, k in 1usize..15) {
        let p = update_transition_probs(UpdateLaw::new(tau, k).unwrap());
        prop_assert_eq!(p.len(), k + 1);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Mean jobs served in the window equals M_K.
        let served: f64 = p.iter().enumerate().map(|(j, x)| (k - j) as f64 * x).sum();
        prop_assert!((served - m(tau, k)).abs() < 1e-12);
    }

    #[test]
    fn alpha_is_a_cdf(tau in 1e-3f64..20.0, k in 0usize..30) {
        let a = alpha(k, tau).unwrap();
        let b = alpha(k + 1, tau).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && b >= a);
    }

    #[test]
    fn pmf_head_is_erlang_blocking(n in 1usize..300, lambda in 0.1f64..3.0, tau in 0.1f64..5.0, k in 1usize..5) {
        let law = UpdateLaw::new(tau, k).unwrap();
        let p = open_closed_pmf(n, lambda, law).unwrap();
        let b = blocking_finite(n, lambda, law).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        // The pmf is normalized in log space, so its relative error grows
        // with |ln b| when blocking is astronomically small.
        let rel = 1e-12 + 64.0 * f64::EPSILON * b.ln().abs();
        prop_assert!((p[0] - b).abs() <= rel * b.max(1e-300) + 1e-300, "{} vs {}", p[0], b);
    }

    #[test]
    fn extension_vectors_sum_to_one(t1 in 0.0f64..5.0, t2 in 0.01f64..5.0, t3 in 0.01f64..5.0) {
        let d = extension_derived(ExtensionParams::new(t1, t2, t3).unwrap()).unwrap();
        for v in [d.p2, d.q2] {
            prop_assert!(v.iter().all(|x| (-1e-15..=1.0 + 1e-15).contains(x)));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        prop_assert!(d.gamma1 > 0.0 && d.kappa3 >= 0.0);
    }

    #[test]
    fn extension_jobs_ahead_decreases_in_tau1(t1 in 0.0f64..4.0, t2 in 0.1f64..4.0, t3 in 0.1f64..4.0) {
        let a = extension_metrics(ExtensionParams::new(t1, t2, t3).unwrap()).unwrap();
        let b = extension_metrics(ExtensionParams::new(t1 + 0.1, t2, t3).unwrap()).unwrap();
        prop_assert!(b.jobs_ahead < a.jobs_ahead);
    }
}

#[test]
fn open_closed_pmf_sums_to_one_at_all_scales() {
    let law = UpdateLaw::new(1.0, 2).unwrap();
    for n in [1usize, 10, 100, 10_000] {
        for lambda in [0.3, 0.9, 1.2, 2.0] {
            let p = open_closed_pmf(n, lambda, law).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10, "n={n} lambda={lambda}");
        }
    }
}

#[test]
fn finite_blocking_converges_monotonically_to_limit() {
    for (lambda, tau) in [(1.2, 1.0), (1.2, 2.0), (0.8, 1.0), (1.5, 0.5)] {
        let law = UpdateLaw::new(tau, 2).unwrap();
        let limit = blocking_limit(lambda, 1.0 / tau, 2).unwrap();
        let gaps: Vec<f64> = [10usize, 100, 1_000, 10_000, 100_000]
            .iter()
            .map(|&n| (blocking_finite(n, lambda, law).unwrap() - limit).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[4] < 5e-3, "{gaps:?}");
    }
}

#[test]
fn extension_reduces_to_baseline_when_cool_down_vanishes() {
    for tau in [0.5, 1.0, 2.0, 5.0] {
        let e = extension_metrics(ExtensionParams::new(0.0, tau, tau).unwrap()).unwrap();
        assert!((e.lambda_star - lambda_star(1.0 / tau, 2).unwrap()).abs() < 1e-12);
        assert!((e.messages_per_job - 1.0 / m(tau, 2)).abs() < 1e-12);
        let d = extension_derived(ExtensionParams::new(0.0, tau, tau).unwrap()).unwrap();
        assert!((e.jobs_ahead - 1.0 / (d.gamma1 + d.gamma2)).abs() < 1e-15);
    }
}

#[test]
fn monte_carlo_mean_of_truncated_poisson() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 1_000_000;
    for (tau, k) in [(0.5, 2usize), (1.0, 2), (2.0, 3), (4.0, 5)] {
        let dist = Poisson::new(tau).unwrap();
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..samples {
            let x: f64 = dist.sample(&mut rng);
            let v = x.min(k as f64);
            sum += v;
            sq += v * v;
        }
        let mean = sum / samples as f64;
        let se = ((sq / samples as f64 - mean * mean) / samples as f64).sqrt();
        let exact = m(tau, k);
        assert!((mean - exact).abs() < 4.0 * se, "tau={tau} k={k}: {mean} vs {exact}");
    }
}
