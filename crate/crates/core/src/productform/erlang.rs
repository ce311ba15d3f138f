use std::collections::HashMap;

use super::{
    build_generator_ros, equilibrium_pmf_capped, solve_traffic, stationary_from_generator, NetworkSpec,
    ProductFormError, DEFAULT_STATE_CAP,
};

/// Replaces node `node` by `stages` serial nodes of mean `tau / stages`.
///
/// Stage 1 keeps the node's index so inbound routing is untouched; stages
/// 2..M are appended after the existing nodes. The node's outbound row moves
/// to the last stage, so a self-loop becomes last stage -> stage 1.
pub fn erlang_expand(
    spec: &NetworkSpec,
    node: usize,
    stages: usize,
) -> Result<NetworkSpec, ProductFormError> {
    if node >= spec.nodes {
        return Err(ProductFormError::Invalid(format!(
            "node index {node} out of range for {} nodes",
            spec.nodes
        )));
    }
    if stages == 0 {
        return Err(ProductFormError::Invalid("stage count must be at least 1".into()));
    }
    if stages == 1 {
        return Ok(spec.clone());
    }
    let extra = stages - 1;
    let s = spec.stations();
    let total = s + extra;
    let first = spec.classes + node;
    let mut routing: Vec<Vec<f64>> = spec
        .routing
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.resize(total, 0.0);
            r
        })
        .collect();
    let outbound = routing[first].clone();
    // Stage chain: first -> s -> s+1 -> ... -> s+extra-1.
    routing[first] = vec![0.0; total];
    routing[first][s] = 1.0;
    for i in 0..extra {
        let mut row = vec![0.0; total];
        if i + 1 < extra {
            row[s + i + 1] = 1.0;
        } else {
            row = outbound.clone();
        }
        routing.push(row);
    }
    let mean = spec.node_means[node] / stages as f64;
    let mut node_means = spec.node_means.clone();
    node_means[node] = mean;
    node_means.extend(std::iter::repeat_n(mean, extra));
    Ok(NetworkSpec {
        classes: spec.classes,
        nodes: spec.nodes + extra,
        routing,
        rate: spec.rate,
        node_means,
        customers: spec.customers,
    })
}

/// Deviations for one stage count, against the unexpanded network.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDeviation {
    pub stages: usize,
    /// Product form of the expanded network, stages summed.
    pub product_form_dev: f64,
    /// Generator solution of the expanded network, stages summed.
    pub generator_dev: f64,
    /// Expanded generator solution against the original product form.
    pub cross_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsensitivityReport {
    pub node: usize,
    pub rows: Vec<StageDeviation>,
}

impl InsensitivityReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.product_form_dev.max(r.generator_dev).max(r.cross_dev)).fold(0.0, f64::max)
    }
}

fn collapse(state: &[usize], original_stations: usize, first: usize) -> Vec<usize> {
    let mut out = state[..original_stations].to_vec();
    out[first] += state[original_stations..].iter().sum::<usize>();
    out
}

fn max_dev(reference: &HashMap<Vec<usize>, f64>, other: &HashMap<Vec<usize>, f64>) -> f64 {
    reference
        .iter()
        .map(|(k, p)| (p - other.get(k).copied().unwrap_or(0.0)).abs())
        .chain(other.keys().filter(|k| !reference.contains_key(*k)).map(|k| other[k].abs()))
        .fold(0.0, f64::max)
}

/// Solves the expanded network both ways for every stage count and compares
/// the collapsed distributions with the original network.
pub fn insensitivity_check(
    spec: &NetworkSpec,
    node: usize,
    stages: &[usize],
) -> Result<InsensitivityReport, ProductFormError> {
    spec.validate()?;
    let s = spec.stations();
    let first = spec.classes + node;
    let to_map = |support: &[Vec<usize>], probs: &[f64]| -> HashMap<Vec<usize>, f64> {
        let mut m = HashMap::new();
        for (st, p) in support.iter().zip(probs) {
            *m.entry(collapse(st, s, first)).or_insert(0.0) += p;
        }
        m
    };
    let solve_both = |net: &NetworkSpec| -> Result<_, ProductFormError> {
        let sol = solve_traffic(net)?;
        let pf = equilibrium_pmf_capped(net, &sol, DEFAULT_STATE_CAP)?;
        let (support, q) = build_generator_ros(net, DEFAULT_STATE_CAP)?;
        let st = stationary_from_generator(&q)?;
        Ok((to_map(&pf.support, &pf.probs), to_map(&support, &st.pi)))
    };
    let (base_pf, base_gen) = solve_both(spec)?;
    let mut rows = Vec::with_capacity(stages.len());
    for &m in stages {
        let expanded = erlang_expand(spec, node, m)?;
        let (pf, gen) = solve_both(&expanded)?;
        rows.push(StageDeviation {
            stages: m,
            product_form_dev: max_dev(&base_pf, &pf),
            generator_dev: max_dev(&base_gen, &gen),
            cross_dev: max_dev(&base_pf, &gen),
        });
    }
    Ok(InsensitivityReport { node, rows })
}
