use std::collections::HashMap;

use statrs::function::gamma::ln_gamma;

use super::{NetworkSpec, ProductFormError, ThroughputSolution};
use crate::analytic::{log_sum_exp, open_count_pmf};

pub const DEFAULT_STATE_CAP: usize = 10_000_000;

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Number of ways to place `n` customers in `bins` bins, as a float so that
/// huge counts can be reported rather than overflow.
pub fn composition_count(n: usize, bins: usize) -> f64 {
    if bins == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let top = (n + bins - 1) as f64;
    (ln_gamma(top + 1.0) - ln_gamma(n as f64 + 1.0) - ln_gamma(bins as f64)).exp().round()
}

/// All vectors of `bins` nonnegative integers summing to `n`, in
/// lexicographic order.
pub(crate) fn compositions(n: usize, bins: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if bins == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut current = vec![0usize; bins];
    fn rec(pos: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for v in 0..=left {
            current[pos] = v;
            rec(pos + 1, left - v, current, out);
        }
    }
    rec(0, n, &mut current, &mut out);
    out
}

/// Unordered equilibrium over counts `(n_1..n_A, m_1..m_B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDist {
    pub classes: usize,
    pub nodes: usize,
    pub support: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
    /// `ln F_N` under the solution's normalization convention.
    pub log_norm: f64,
}

impl StateDist {
    pub fn index_of(&self) -> HashMap<Vec<usize>, usize> {
        self.support.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect()
    }

    pub fn customers(&self) -> usize {
        self.support.first().map(|s| s.iter().sum()).unwrap_or(0)
    }
}

fn log_station_weights(spec: &NetworkSpec, sol: &ThroughputSolution) -> (Vec<f64>, Vec<f64>) {
    let class_w = sol.gamma.iter().map(|g| (g / spec.rate).ln()).collect();
    let node_w = sol.kappa.iter().zip(&spec.node_means).map(|(k, t)| (k * t).ln()).collect();
    (class_w, node_w)
}

fn log_unordered_weight(state: &[usize], classes: usize, class_w: &[f64], node_w: &[f64]) -> f64 {
    let (open, closed) = state.split_at(classes);
    let total_open: usize = open.iter().sum();
    let mut w = ln_factorial(total_open);
    for (n, lw) in open.iter().zip(class_w) {
        if *n > 0 {
            w += *n as f64 * lw - ln_factorial(*n);
        }
    }
    for (m, lw) in closed.iter().zip(node_w) {
        if *m > 0 {
            w += *m as f64 * lw - ln_factorial(*m);
        }
    }
    w
}

pub fn equilibrium_pmf(spec: &NetworkSpec, sol: &ThroughputSolution) -> Result<StateDist, ProductFormError> {
    equilibrium_pmf_capped(spec, sol, DEFAULT_STATE_CAP)
}

/// Product-form equilibrium over the full unordered support.
pub fn equilibrium_pmf_capped(
    spec: &NetworkSpec,
    sol: &ThroughputSolution,
    cap: usize,
) -> Result<StateDist, ProductFormError> {
    spec.validate()?;
    let estimate = composition_count(spec.customers, spec.stations());
    if estimate > cap as f64 {
        return Err(ProductFormError::TooLarge { estimate, cap });
    }
    let support = compositions(spec.customers, spec.stations());
    let (class_w, node_w) = log_station_weights(spec, sol);
    let logs: Vec<f64> =
        support.iter().map(|s| log_unordered_weight(s, spec.classes, &class_w, &node_w)).collect();
    let log_norm = log_sum_exp(&logs);
    let probs = logs.iter().map(|l| (l - log_norm).exp()).collect();
    Ok(StateDist { classes: spec.classes, nodes: spec.nodes, support, probs, log_norm })
}

/// Sums the equilibrium by the number of customers at the single-server
/// station, `n = 0..=N`.
pub fn aggregate_open_closed(dist: &StateDist) -> Vec<f64> {
    let mut out = vec![0.0; dist.customers() + 1];
    for (state, p) in dist.support.iter().zip(&dist.probs) {
        let open: usize = state[..dist.classes].iter().sum();
        out[open] += p;
    }
    out
}

/// Closed form of the open/closed aggregate, from the station sums only.
pub fn open_closed_closed_form(spec: &NetworkSpec, sol: &ThroughputSolution) -> Vec<f64> {
    let open: f64 = sol.gamma.iter().sum::<f64>() / spec.rate;
    let closed: f64 = sol.kappa.iter().zip(&spec.node_means).map(|(k, t)| k * t).sum();
    open_count_pmf(spec.customers, open, closed)
}

/// Many-customer limit of the probability that the single-server station is
/// empty, `max(0, 1 - R / lambda)` with `R = sum(gamma) / sum(kappa tau)`.
pub fn limit_blocking(spec: &NetworkSpec, sol: &ThroughputSolution, lambda: f64) -> f64 {
    let admissions: f64 = sol.gamma.iter().sum();
    let cycle: f64 = sol.kappa.iter().zip(&spec.node_means).map(|(k, t)| k * t).sum();
    (1.0 - admissions / cycle / lambda).max(0.0)
}

/// State with the class order at the single-server station; position 0 is
/// the head of the line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderedState {
    pub line: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl OrderedState {
    pub fn counts(&self, classes: usize) -> Vec<usize> {
        let mut c = vec![0usize; classes];
        for &class in &self.line {
            c[class] += 1;
        }
        c.extend(&self.nodes);
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedStateDist {
    pub classes: usize,
    pub support: Vec<OrderedState>,
    pub probs: Vec<f64>,
}

impl OrderedStateDist {
    /// Sums ordered probabilities over all orderings of the same counts.
    pub fn aggregate(&self) -> HashMap<Vec<usize>, f64> {
        let mut out = HashMap::new();
        for (s, p) in self.support.iter().zip(&self.probs) {
            *out.entry(s.counts(self.classes)).or_insert(0.0) += p;
        }
        out
    }
}

/// Ordered-state product form `prod (gamma_c / rate) * prod (kappa tau)^b / b!`
/// over the given support.
pub fn ordered_product_form(
    spec: &NetworkSpec,
    sol: &ThroughputSolution,
    support: Vec<OrderedState>,
) -> OrderedStateDist {
    let (class_w, node_w) = log_station_weights(spec, sol);
    let logs: Vec<f64> = support
        .iter()
        .map(|s| {
            let line: f64 = s.line.iter().map(|&c| class_w[c]).sum();
            let nodes: f64 = s
                .nodes
                .iter()
                .zip(&node_w)
                .filter(|(b, _)| **b > 0)
                .map(|(&b, lw)| b as f64 * lw - ln_factorial(b))
                .sum();
            line + nodes
        })
        .collect();
    let norm = log_sum_exp(&logs);
    OrderedStateDist {
        classes: spec.classes,
        probs: logs.iter().map(|l| (l - norm).exp()).collect(),
        support,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{self, UpdateLaw};
    use crate::productform::{baseline_network, solve_traffic};

    #[test]
    fn compositions_are_lexicographic_and_counted() {
        let c = compositions(2, 3);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![0, 0, 2]);
        assert_eq!(c[5], vec![2, 0, 0]);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(composition_count(2, 3), 6.0);
        assert_eq!(composition_count(5, 4), 56.0);
    }

    #[test]
    fn single_server_baseline_is_two_point() {
        let law = UpdateLaw::new(1.7, 3).unwrap();
        let lambda = 0.6;
        let spec = baseline_network(lambda, 1, law).unwrap();
        let sol = solve_traffic(&spec).unwrap();
        let dist = equilibrium_pmf(&spec, &sol).unwrap();
        let agg = aggregate_open_closed(&dist);
        let m = analytic::expected_admissions(law);
        let closed = lambda * law.tau() / (lambda * law.tau() + m);
        assert!((agg[0] - closed).abs() < 1e-14);
    }

    #[test]
    fn state_cap_is_enforced() {
        let law = UpdateLaw::new(1.0, 3).unwrap();
        let spec = baseline_network(1.0, 50, law).unwrap();
        let sol = solve_traffic(&spec).unwrap();
        match equilibrium_pmf_capped(&spec, &sol, 1000) {
            Err(ProductFormError::TooLarge { estimate, cap }) => {
                assert_eq!(cap, 1000);
                assert_eq!(estimate, composition_count(50, 4));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn aggregate_matches_analytic_baseline() {
        let law = UpdateLaw::new(1.0, 2).unwrap();
        let spec = baseline_network(1.2, 40, law).unwrap();
        let sol = solve_traffic(&spec).unwrap();
        let dist = equilibrium_pmf(&spec, &sol).unwrap();
        let agg = aggregate_open_closed(&dist);
        let closed_form = analytic::open_closed_pmf(40, 1.2, law).unwrap();
        for (a, b) in agg.iter().zip(&closed_form) {
            assert!((a - b).abs() < 1e-12);
        }
        let b = analytic::blocking_finite(40, 1.2, law).unwrap();
        assert!((agg[0] - b).abs() < 1e-12);
        let r = limit_blocking(&spec, &sol, 1.2);
        assert!((r - analytic::blocking_limit(1.2, 1.0, 2).unwrap()).abs() < 1e-14);
        assert_eq!(limit_blocking(&spec, &sol, 0.5), 0.0);
    }
}
