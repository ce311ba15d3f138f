//! Closed-form quantities for the hyper-scalable scheme.
//!
//! Everything here is a pure function of its arguments. Poisson sums are
//! evaluated term by term with a log-space forward recursion, and the
//! finite-`N` open/closed law is normalized in the log domain so that it stays
//! finite for very large server counts.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("{name} must be {requirement}, got {value}")]
    Domain { name: &'static str, requirement: &'static str, value: f64 },
    #[error("queue limit K must be at least 1")]
    ZeroQueueLimit,
    #[error("server count N must be at least 1")]
    ZeroServers,
    #[error("tau3 = {0} leaves 1 - q22 = 0; the B3 loop never terminates")]
    DegenerateLoop(f64),
}

fn positive(name: &'static str, value: f64) -> Result<f64, AnalyticError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticError::Domain { name, requirement: "finite and strictly positive", value })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<f64, AnalyticError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticError::Domain { name, requirement: "finite and nonnegative", value })
    }
}

/// Update interval and queue limit of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateLaw {
    tau: f64,
    k: usize,
}

impl UpdateLaw {
    pub fn new(tau: f64, k: usize) -> Result<Self, AnalyticError> {
        let tau = positive("tau", tau)?;
        if k == 0 {
            return Err(AnalyticError::ZeroQueueLimit);
        }
        Ok(Self { tau, k })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Message rate, queue limit and mean server speed for the universal bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    delta: f64,
    k: usize,
    mu_bar: f64,
}

impl BoundParams {
    pub fn new(delta: f64, k: usize) -> Result<Self, AnalyticError> {
        Self::with_speed(delta, k, 1.0)
    }

    pub fn with_speed(delta: f64, k: usize, mu_bar: f64) -> Result<Self, AnalyticError> {
        let delta = positive("delta", delta)?;
        let mu_bar = positive("mu_bar", mu_bar)?;
        if k == 0 {
            return Err(AnalyticError::ZeroQueueLimit);
        }
        Ok(Self { delta, k, mu_bar })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu_bar
    }
}

/// Iterator over `ln(e^{-tau} tau^i / i!)` for `i = 0, 1, ...`.
fn log_poisson_terms(tau: f64) -> impl Iterator<Item = f64> {
    let ln_tau = tau.ln();
    let mut i = 0usize;
    let mut current = -tau;
    std::iter::from_fn(move || {
        let out = current;
        i += 1;
        current += ln_tau - (i as f64).ln();
        Some(out)
    })
}

/// `e^{-tau} tau^i / i!`.
pub fn poisson_pmf(i: usize, tau: f64) -> f64 {
    if tau == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    (-tau + i as f64 * tau.ln() - ln_gamma(i as f64 + 1.0)).exp()
}

/// Probability that a Poisson(`tau`) variable is at most `k`.
pub fn alpha(k: usize, tau: f64) -> Result<f64, AnalyticError> {
    let tau = nonnegative("tau", tau)?;
    Ok(poisson_cdf(k, tau))
}

fn poisson_cdf(k: usize, tau: f64) -> f64 {
    if tau == 0.0 {
        return 1.0;
    }
    let sum: f64 = log_poisson_terms(tau).take(k + 1).map(f64::exp).sum();
    sum.min(1.0)
}

/// `1 - alpha(k, tau)`, summed directly from the upper tail when the tail is
/// small so that it does not cancel.
fn poisson_upper_tail(k: usize, tau: f64) -> f64 {
    if tau == 0.0 {
        return 0.0;
    }
    if tau >= (k + 1) as f64 {
        return (1.0 - poisson_cdf(k, tau)).max(0.0);
    }
    // Terms beyond k decrease monotonically here.
    let mut sum = 0.0;
    for log_term in log_poisson_terms(tau).skip(k + 1) {
        let term = log_term.exp();
        sum += term;
        if term <= sum * 1e-18 {
            break;
        }
    }
    sum
}

/// `M_K(tau) = E[min(K, Poisson(tau))]`: expected admissions enabled by one update.
pub fn expected_admissions(law: UpdateLaw) -> f64 {
    expected_min_poisson(law.k, law.tau)
}

fn expected_min_poisson(k: usize, tau: f64) -> f64 {
    (0..k).map(|j| poisson_upper_tail(j, tau)).sum()
}

/// Universal throughput bound `delta * M_K(mu_bar / delta)`.
pub fn throughput_bound(params: BoundParams) -> f64 {
    params.delta * expected_min_poisson(params.k, params.mu_bar / params.delta)
}

/// `lambda*(delta, K)` for unit mean speed.
pub fn lambda_star(delta: f64, k: usize) -> Result<f64, AnalyticError> {
    Ok(throughput_bound(BoundParams::new(delta, k)?))
}

/// Truncated-Poisson law `(p_0, ..., p_K)` of the number of jobs left after an
/// update window that started with `K` jobs.
pub fn update_transition_probs(law: UpdateLaw) -> Vec<f64> {
    let k = law.k;
    let mut probs = vec![0.0; k + 1];
    probs[0] = poisson_upper_tail(k - 1, law.tau);
    for (j, p) in probs.iter_mut().enumerate().skip(1) {
        *p = poisson_pmf(k - j, law.tau);
    }
    probs
}

/// Normalized law `pi(n) ∝ open^n closed^{N-n} / (N-n)!` over `n = 0..=N`.
///
/// This is the open/closed aggregate of any closed network made of one
/// single-server station and infinite-server stations, with
/// `open = sum(gamma) / (lambda N)` and `closed = sum(kappa * tau)`.
pub fn open_count_pmf(n: usize, open_weight: f64, closed_weight: f64) -> Vec<f64> {
    debug_assert!(open_weight > 0.0 && closed_weight > 0.0);
    let ln_open = open_weight.ln();
    let ln_closed = closed_weight.ln();
    let logs: Vec<f64> = (0..=n)
        .map(|open| {
            let closed = n - open;
            open as f64 * ln_open + closed as f64 * ln_closed - ln_gamma(closed as f64 + 1.0)
        })
        .collect();
    let norm = log_sum_exp(&logs);
    logs.into_iter().map(|l| (l - norm).exp()).collect()
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Stationary probability of `n` open and `N - n` closed servers, `n = 0..=N`.
pub fn open_closed_pmf(n: usize, lambda: f64, law: UpdateLaw) -> Result<Vec<f64>, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroServers);
    }
    let lambda = positive("lambda", lambda)?;
    let m = expected_admissions(law);
    Ok(open_count_pmf(n, m / (lambda * n as f64), law.tau))
}

/// Erlang loss probability `((a)^N / N!) / sum_{w<=N} a^w / w!`, via the
/// standard recursion carried in the log domain.
pub fn erlang_loss(n: usize, offered: f64) -> f64 {
    let ln_a = offered.ln();
    let mut ln_b = 0.0f64;
    for servers in 1..=n {
        let b = ln_b.exp();
        ln_b = ln_a + ln_b - (servers as f64 + offered * b).ln();
    }
    ln_b.exp()
}

/// Finite-`N` blocking probability of the scheme; equals entry 0 of
/// [`open_closed_pmf`].
pub fn blocking_finite(n: usize, lambda: f64, law: UpdateLaw) -> Result<f64, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroServers);
    }
    let lambda = positive("lambda", lambda)?;
    let x = lambda * law.tau / expected_admissions(law);
    Ok(erlang_loss(n, x * n as f64))
}

/// Many-server blocking limit `max(0, 1 - lambda*(delta, K) / lambda)`.
pub fn blocking_limit(lambda: f64, delta: f64, k: usize) -> Result<f64, AnalyticError> {
    let lambda = positive("lambda", lambda)?;
    let bound = lambda_star(delta, k)?;
    Ok((1.0 - bound / lambda).max(0.0))
}

/// Mean number of update messages per admitted job, `1 / M_K(tau)`.
pub fn messages_per_admitted_job(law: UpdateLaw) -> f64 {
    1.0 / expected_admissions(law)
}

/// One entry of a [`PropertyReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, property: String, residual: f64, tolerance: f64, passed: bool) {
        self.checks.push(PropertyCheck { property, residual, tolerance, passed });
    }
}

/// Message rate used as "large" when checking `lambda* -> 1`.
pub const LARGE_DELTA: f64 = 1e4;
/// Message rate used as "small" when checking `lambda* / delta -> K`.
pub const SMALL_DELTA: f64 = 1e-4;
/// Utilization level and queue limit for the `lambda*(a/K, K) -> a` check.
pub const LIMIT_UTILIZATION: f64 = 0.8;
pub const LARGE_K: usize = 400;

/// Checks monotonicity of the bound on the given grid and its three limit
/// statements at fixed probe points.
pub fn bound_property_suite(delta_grid: &[f64], k_grid: &[usize]) -> Result<PropertyReport, AnalyticError> {
    let mut deltas = delta_grid.to_vec();
    for &d in &deltas {
        positive("delta", d)?;
    }
    if deltas.is_empty() || k_grid.is_empty() {
        return Err(AnalyticError::Domain { name: "grid length", requirement: "nonempty", value: 0.0 });
    }
    if k_grid.contains(&0) {
        return Err(AnalyticError::ZeroQueueLimit);
    }
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut ks = k_grid.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let mut report = PropertyReport::default();
    for &k in &ks {
        let values: Vec<f64> = deltas.iter().map(|&d| lambda_star(d, k)).collect::<Result<_, _>>()?;
        // Smallest consecutive increase; negative means a violation.
        let min_step = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let min_step = if min_step.is_finite() { min_step } else { 0.0 };
        report.push(
            format!("increasing in delta (K={k})"),
            min_step,
            0.0,
            values.len() < 2 || min_step > 0.0,
        );
    }
    for &d in &deltas {
        let values: Vec<f64> = ks.iter().map(|&k| lambda_star(d, k)).collect::<Result<_, _>>()?;
        let min_step = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let min_step = if min_step.is_finite() { min_step } else { 0.0 };
        report.push(
            format!("increasing in K (delta={d})"),
            min_step,
            0.0,
            values.len() < 2 || min_step > 0.0,
        );
    }
    for &k in &ks {
        let residual = (1.0 - lambda_star(LARGE_DELTA, k)?).abs();
        report.push(
            format!("lambda* -> 1 as delta grows (K={k}, delta={LARGE_DELTA})"),
            residual,
            1e-3,
            residual < 1e-3,
        );
        let residual = (lambda_star(SMALL_DELTA, k)? / SMALL_DELTA - k as f64).abs();
        let tolerance = 1e-3 * k as f64;
        report.push(
            format!("lambda*/delta -> K as delta shrinks (K={k}, delta={SMALL_DELTA})"),
            residual,
            tolerance,
            residual < tolerance,
        );
    }
    let residual = (lambda_star(LIMIT_UTILIZATION / LARGE_K as f64, LARGE_K)? - LIMIT_UTILIZATION).abs();
    report.push(
        format!("lambda*(a/K, K) -> a (a={LIMIT_UTILIZATION}, K={LARGE_K})"),
        residual,
        0.02,
        residual < 0.02,
    );
    Ok(report)
}

/// Cool-down durations of the K = 2 extension: `tau1` after a single job,
/// `tau2` after the second job, `tau3` after an update that found two jobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionParams {
    tau1: f64,
    tau2: f64,
    tau3: f64,
}

impl ExtensionParams {
    pub fn new(tau1: f64, tau2: f64, tau3: f64) -> Result<Self, AnalyticError> {
        let tau1 = nonnegative("tau1", tau1)?;
        let tau2 = positive("tau2", tau2)?;
        if tau3 == 0.0 {
            return Err(AnalyticError::DegenerateLoop(tau3));
        }
        let tau3 = positive("tau3", tau3)?;
        Ok(Self { tau1, tau2, tau3 })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn tau3(&self) -> f64 {
        self.tau3
    }
}

/// Report probabilities and relative throughputs of the extension network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionDerived {
    /// Jobs left (0, 1, 2) at an update ending a B2 period.
    pub p2: [f64; 3],
    /// Jobs left (0, 1, 2) at an update ending a B3 period.
    pub q2: [f64; 3],
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
}

pub fn extension_derived(params: ExtensionParams) -> Result<ExtensionDerived, AnalyticError> {
    let ExtensionParams { tau1, tau2, tau3 } = params;
    let e1 = (-tau1).exp();
    let e2 = (-tau2).exp();
    let e3 = (-tau3).exp();
    let p20 = e1 * (1.0 - tau2 * e2 - e2) + (-tau1).exp_m1().abs() * (-tau2).exp_m1().abs();
    let p22 = e1 * e2;
    let p21 = 1.0 - p20 - p22;
    let q22 = e3;
    let q20 = 1.0 - e3 - tau3 * e3;
    let q21 = 1.0 - q20 - q22;
    let escape = -(-tau3).exp_m1();
    if escape <= 0.0 {
        return Err(AnalyticError::DegenerateLoop(tau3));
    }
    let kappa3 = p22 / escape;
    let gamma1 = p20 + kappa3 * q20;
    Ok(ExtensionDerived {
        p2: [p20, p21, p22],
        q2: [q20, q21, q22],
        gamma1,
        gamma2: 1.0,
        kappa1: 1.0,
        kappa2: 1.0,
        kappa3,
    })
}

/// Maximum throughput, updates per admitted job and mean number of jobs ahead
/// of an admitted job under the extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionMetrics {
    pub lambda_star: f64,
    pub messages_per_job: f64,
    pub jobs_ahead: f64,
}

pub fn extension_metrics(params: ExtensionParams) -> Result<ExtensionMetrics, AnalyticError> {
    let d = extension_derived(params)?;
    let admissions = d.gamma1 + d.gamma2;
    let cycle = d.kappa1 * params.tau1 + d.kappa2 * params.tau2 + d.kappa3 * params.tau3;
    Ok(ExtensionMetrics {
        lambda_star: admissions / cycle,
        messages_per_job: (d.kappa2 + d.kappa3) / admissions,
        jobs_ahead: (-params.tau1).exp() / admissions,
    })
}

/// Finite-`N` blocking probability of the extension.
pub fn extension_blocking_finite(
    n: usize,
    lambda: f64,
    params: ExtensionParams,
) -> Result<f64, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroServers);
    }
    let lambda = positive("lambda", lambda)?;
    let x = lambda / extension_metrics(params)?.lambda_star;
    Ok(erlang_loss(n, x * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law(tau: f64, k: usize) -> UpdateLaw {
        UpdateLaw::new(tau, k).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let tau = 0.7;
        assert_relative_eq!(alpha(0, tau).unwrap(), (-tau).exp(), max_relative = 1e-15);
        for k in 0..5 {
            assert_eq!(alpha(k, 0.0).unwrap(), 1.0);
        }
        assert_relative_eq!(alpha(2, 1.0).unwrap(), 2.5 / std::f64::consts::E, max_relative = 1e-14);
        assert_relative_eq!(alpha(2, 1.0).unwrap(), 0.919_698_6, epsilon = 1e-7);
    }

    #[test]
    fn alpha_rejects_negative_tau() {
        assert!(matches!(alpha(1, -0.1), Err(AnalyticError::Domain { .. })));
        assert!(alpha(1, f64::NAN).is_err());
    }

    #[test]
    fn laws_validate() {
        assert!(UpdateLaw::new(0.0, 2).is_err());
        assert_eq!(UpdateLaw::new(1.0, 0), Err(AnalyticError::ZeroQueueLimit));
        assert!(BoundParams::with_speed(1.0, 2, 0.0).is_err());
        assert!(ExtensionParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(ExtensionParams::new(0.0, 0.0, 1.0).is_err());
        assert_eq!(ExtensionParams::new(1.0, 1.0, 0.0), Err(AnalyticError::DegenerateLoop(0.0)));
    }

    #[test]
    fn expected_admissions_examples() {
        for tau in [0.1, 1.0, 3.0] {
            assert_relative_eq!(expected_admissions(law(tau, 1)), -(-tau).exp_m1(), max_relative = 1e-14);
        }
        let e = std::f64::consts::E;
        assert_relative_eq!(expected_admissions(law(2.0, 2)), 2.0 - 4.0 / (e * e), max_relative = 1e-14);
        assert_relative_eq!(expected_admissions(law(2.0, 2)), 1.458_658_867, epsilon = 1e-9);
        // 3 - sum_{k<3} (3-k) e^{-1}/k! = 3 - 5.5/e
        assert_relative_eq!(expected_admissions(law(1.0, 3)), 3.0 - 5.5 / e, max_relative = 1e-14);
    }

    #[test]
    fn large_tau_does_not_underflow_to_nonsense() {
        // e^{-1000} underflows; the log recursion must still give K - tiny.
        let m = expected_admissions(law(1000.0, 900));
        assert!((899.99..900.0).contains(&m), "{m}");
        let m = expected_admissions(law(1e4, 3));
        assert_eq!(m, 3.0);
    }

    #[test]
    fn bound_examples() {
        assert!((lambda_star(0.5, 2).unwrap() - 0.73).abs() < 0.005);
        assert!((lambda_star(1.0, 2).unwrap() - 0.90).abs() < 0.005);
        assert!((lambda_star(0.2, 2).unwrap() - 0.39).abs() < 0.005);
        for delta in [0.1f64, 0.5, 1.0, 3.0] {
            let e = (-1.0 / delta).exp();
            let closed = 2.0 * delta - 2.0 * delta * e - e;
            assert_relative_eq!(lambda_star(delta, 2).unwrap(), closed, epsilon = 1e-12);
        }
    }

    #[test]
    fn bound_scales_with_mean_speed() {
        // delta * M_K(mu/delta): doubling both speed and delta doubles the bound.
        let base = throughput_bound(BoundParams::new(0.5, 3).unwrap());
        let scaled = throughput_bound(BoundParams::with_speed(1.0, 3, 2.0).unwrap());
        assert_relative_eq!(scaled, 2.0 * base, max_relative = 1e-14);
    }

    #[test]
    fn property_suite_passes_on_a_grid() {
        let deltas: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1).collect();
        let report = bound_property_suite(&deltas, &[1, 2, 3, 5]).unwrap();
        assert!(report.all_passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn property_suite_rejects_empty_grids() {
        assert!(bound_property_suite(&[], &[1]).is_err());
        assert!(bound_property_suite(&[1.0], &[]).is_err());
        assert!(bound_property_suite(&[1.0], &[0]).is_err());
    }

    #[test]
    fn transition_probs_examples() {
        let p = update_transition_probs(law(2.0, 2));
        assert_relative_eq!(p[0], 0.593_994_2, epsilon = 1e-7);
        assert_relative_eq!(p[1], 0.270_670_6, epsilon = 1e-7);
        assert_relative_eq!(p[2], 0.135_335_3, epsilon = 1e-7);
        let tau = 0.3;
        let p = update_transition_probs(law(tau, 1));
        assert_relative_eq!(p[0], 1.0 - (-tau).exp(), max_relative = 1e-14);
        assert_relative_eq!(p[1], (-tau).exp(), max_relative = 1e-14);
    }

    #[test]
    fn transition_probs_sum_to_one() {
        for k in [1, 2, 3, 7, 40] {
            for tau in [1e-6, 0.5, 2.0, 30.0] {
                let s: f64 = update_transition_probs(law(tau, k)).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "K={k} tau={tau} sum={s}");
            }
        }
    }

    #[test]
    fn open_closed_pmf_single_server() {
        let l = law(1.5, 2);
        let lambda = 0.8;
        let x = lambda * l.tau() / expected_admissions(l);
        let pmf = open_closed_pmf(1, lambda, l).unwrap();
        assert_relative_eq!(pmf[0], x / (1.0 + x), max_relative = 1e-13);
        assert_relative_eq!(blocking_finite(1, lambda, l).unwrap(), x / (1.0 + x), max_relative = 1e-13);
    }

    #[test]
    fn open_closed_pmf_normalizes_at_scale() {
        let l = law(1.0, 2);
        for n in [1, 10, 100, 10_000] {
            let pmf = open_closed_pmf(n, 1.2, l).unwrap();
            assert!(pmf.iter().all(|p| p.is_finite()));
            assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        let pmf = open_closed_pmf(100_000, 1.2, l).unwrap();
        assert!(pmf.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn heavy_load_blocks_everything() {
        let pmf = open_closed_pmf(20, 1e9, law(1.0, 2)).unwrap();
        assert!(pmf[0] > 1.0 - 1e-6);
    }

    #[test]
    fn pmf_entry_zero_matches_blocking() {
        let l = law(1.0, 2);
        let pmf = open_closed_pmf(100, 1.2, l).unwrap();
        let b = blocking_finite(100, 1.2, l).unwrap();
        assert_relative_eq!(pmf[0], b, max_relative = 1e-12);
    }

    #[test]
    fn blocking_converges_to_limit() {
        let l = law(1.0, 2);
        let limit = blocking_limit(1.2, 1.0, 2).unwrap();
        let m2 = 2.0 - 3.0 / std::f64::consts::E;
        assert_relative_eq!(limit, 1.0 - m2 / 1.2, max_relative = 1e-13);
        assert!((limit - 0.2530).abs() < 1e-4);
        let mut prev = f64::INFINITY;
        for n in [10, 100, 1000, 10_000, 100_000] {
            let b = blocking_finite(n, 1.2, l).unwrap();
            let gap = b - limit;
            assert!(gap > 0.0 && gap < prev, "N={n} gap={gap}");
            prev = gap;
        }
        assert!((blocking_finite(100_000, 1.2, l).unwrap() - 0.2531).abs() < 1e-4);
    }

    #[test]
    fn underload_blocking_vanishes() {
        let l = law(1.0, 2);
        let lambda = lambda_star(1.0, 2).unwrap() * 0.99;
        assert!(blocking_finite(100_000, lambda, l).unwrap() < 1e-3);
        assert_eq!(blocking_limit(lambda, 1.0, 2).unwrap(), 0.0);
        assert!(blocking_limit(1e12, 1.0, 2).unwrap() > 1.0 - 1e-11);
    }

    #[test]
    fn messages_per_job_examples() {
        assert_relative_eq!(messages_per_admitted_job(law(2.0, 2)), 0.6856, epsilon = 1e-4);
        assert_relative_eq!(
            messages_per_admitted_job(law(0.4, 1)),
            1.0 / -(-0.4f64).exp_m1(),
            max_relative = 1e-14
        );
        assert_relative_eq!(messages_per_admitted_job(law(200.0, 4)), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn extension_examples() {
        let d = extension_derived(ExtensionParams::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(d.p2[0], 0.49679, epsilon = 1e-5);
        assert_relative_eq!(d.p2[1], 0.36788, epsilon = 1e-5);
        assert_relative_eq!(d.p2[2], 0.13534, epsilon = 1e-5);
        assert_relative_eq!(d.kappa3, 0.21410, epsilon = 1e-5);
        assert_relative_eq!(d.gamma1, 0.55336, epsilon = 1e-5);
        assert_eq!((d.gamma2, d.kappa1, d.kappa2), (1.0, 1.0, 1.0));
        for v in [d.p2, d.q2] {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(v.iter().all(|p| (0.0..=1.0).contains(p)));
        }
        let m = extension_metrics(ExtensionParams::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(m.lambda_star, 0.70158, epsilon = 1e-5);
        assert_relative_eq!(m.messages_per_job, 0.78159, epsilon = 1e-5);
        // Independent evaluation gives 0.2368284; the published rounding is 0.23684.
        assert_relative_eq!(m.jobs_ahead, 0.236_828_4, epsilon = 1e-7);
        assert!((m.jobs_ahead - 0.23684).abs() < 2e-5);
    }

    #[test]
    fn extension_reduces_to_baseline() {
        for tau in [0.5, 1.0, 2.0, 5.0] {
            let p = ExtensionParams::new(0.0, tau, tau).unwrap();
            let d = extension_derived(p).unwrap();
            let m2 = expected_admissions(law(tau, 2));
            assert!(((d.gamma1 + d.gamma2) - m2 / -(-tau).exp_m1()).abs() < 1e-12);
            let m = extension_metrics(p).unwrap();
            assert!((m.lambda_star - lambda_star(1.0 / tau, 2).unwrap()).abs() < 1e-12);
            assert!((m.messages_per_job - 1.0 / m2).abs() < 1e-12);
            assert!((m.jobs_ahead - 1.0 / (d.gamma1 + d.gamma2)).abs() < 1e-15);
        }
    }

    #[test]
    fn extension_long_windows() {
        let d = extension_derived(ExtensionParams::new(60.0, 60.0, 1.0).unwrap()).unwrap();
        assert!((d.p2[0] - 1.0).abs() < 1e-12);
        assert!(d.p2[2] < 1e-40);
    }

    #[test]
    fn extension_rejects_tiny_but_positive_tau3_only_if_degenerate() {
        // 1 - e^{-1e-300} is representable through expm1.
        assert!(extension_derived(ExtensionParams::new(0.0, 1.0, 1e-300).unwrap()).is_ok());
    }
}
