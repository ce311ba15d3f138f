use serde::Serialize;

use super::{
    aggregate_open_closed, baseline_network, build_generator_fcfs, build_generator_ros,
    equilibrium_pmf_capped, extension_network, insensitivity_check, open_closed_closed_form,
    ordered_product_form, solve_traffic, stationary_from_generator, NetworkSpec, ProductFormError,
};
use crate::analytic::{ExtensionParams, UpdateLaw};

/// One named comparison between two independent computations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub network: String,
    pub check: &'static str,
    pub deviation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.checks.iter().all(|c| c.deviation < tolerance)
    }

    pub fn failures(&self, tolerance: f64) -> impl Iterator<Item = &OracleCheck> {
        self.checks.iter().filter(move |c| !(c.deviation < tolerance))
    }

    fn push(&mut self, network: &str, check: &'static str, deviation: f64) {
        self.checks.push(OracleCheck { network: network.to_string(), check, deviation });
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Compares the product form with the random-order and first-come generators
/// of one network, and the ordered law with the unordered one.
pub fn cross_check(
    name: &str,
    spec: &NetworkSpec,
    cap: usize,
    report: &mut OracleReport,
) -> Result<(), ProductFormError> {
    let sol = solve_traffic(spec)?;
    report.push(name, "traffic residual", sol.residual);

    let pf = equilibrium_pmf_capped(spec, &sol, cap)?;
    report.push(name, "probabilities sum to 1", (pf.probs.iter().sum::<f64>() - 1.0).abs());
    let agg = aggregate_open_closed(&pf);
    report.push(
        name,
        "open/closed aggregate vs closed form",
        max_abs_diff(&agg, &open_closed_closed_form(spec, &sol)),
    );

    let (support, q) = build_generator_ros(spec, cap)?;
    debug_assert_eq!(support, pf.support);
    report.push(name, "random-order balance residual", q.residual(&pf.probs));
    let ros = stationary_from_generator(&q)?;
    report.push(name, "product form vs random-order generator", max_abs_diff(&pf.probs, &ros.pi));

    let (ordered, qf) = build_generator_fcfs(spec, cap)?;
    let opf = ordered_product_form(spec, &sol, ordered);
    report.push(name, "first-come balance residual", qf.residual(&opf.probs));
    let fcfs = stationary_from_generator(&qf)?;
    report.push(name, "ordered product form vs first-come generator", max_abs_diff(&opf.probs, &fcfs.pi));

    let index = pf.index_of();
    let mut from_fcfs = vec![0.0; pf.probs.len()];
    for (state, p) in opf.support.iter().zip(&fcfs.pi) {
        from_fcfs[index[&state.counts(spec.classes)]] += p;
    }
    report.push(name, "first-come aggregation vs random-order", max_abs_diff(&from_fcfs, &ros.pi));
    let from_formula = opf.aggregate();
    let dev = pf
        .support
        .iter()
        .zip(&pf.probs)
        .map(|(s, p)| (p - from_formula.get(s).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    report.push(name, "ordered product form aggregation vs product form", dev);
    Ok(())
}

/// Runs the insensitivity check and records one line per stage count.
pub fn stage_check(
    name: &str,
    spec: &NetworkSpec,
    node: usize,
    stages: &[usize],
    report: &mut OracleReport,
) -> Result<(), ProductFormError> {
    let r = insensitivity_check(spec, node, stages)?;
    for row in &r.rows {
        let label = format!("{name}, node B{} in {} stages", node + 1, row.stages);
        report.push(&label, "stage product form vs single node", row.product_form_dev);
        report.push(&label, "stage generator vs single node", row.generator_dev);
        report.push(&label, "stage generator vs single-node product form", row.cross_dev);
    }
    Ok(())
}

/// Baseline networks with `K` in {1,2,3}, `N` in {2,3}, `tau` in {0.5,1,2}
/// and extension networks with `N = 2`, checked against both generators.
pub fn generator_suite(cap: usize) -> Result<OracleReport, ProductFormError> {
    let mut report = OracleReport::default();
    for k in 1..=3 {
        for n in 2..=3 {
            for tau in [0.5, 1.0, 2.0] {
                let spec = baseline_network(1.0, n, UpdateLaw::new(tau, k)?)?;
                cross_check(&format!("baseline K={k} N={n} tau={tau}"), &spec, cap, &mut report)?;
            }
        }
    }
    for (t1, t2, t3) in [(1.0, 1.0, 1.0), (0.5, 2.0, 1.0)] {
        let spec = extension_network(1.0, 2, ExtensionParams::new(t1, t2, t3)?)?;
        cross_check(&format!("extension N=2 tau=({t1},{t2},{t3})"), &spec, cap, &mut report)?;
    }
    Ok(report)
}

/// Stage counts used by [`insensitivity_suite`].
pub const STAGE_COUNTS: [usize; 4] = [1, 2, 4, 8];

/// Erlang-stage insensitivity on the `N = 2` baseline and extension networks.
pub fn insensitivity_suite() -> Result<OracleReport, ProductFormError> {
    let mut report = OracleReport::default();
    let spec = baseline_network(1.0, 2, UpdateLaw::new(1.0, 2)?)?;
    stage_check("baseline K=2 N=2 tau=1", &spec, 0, &STAGE_COUNTS, &mut report)?;
    let spec = extension_network(1.0, 2, ExtensionParams::new(1.0, 1.0, 1.0)?)?;
    for node in 0..3 {
        stage_check("extension N=2 tau=(1,1,1)", &spec, node, &STAGE_COUNTS, &mut report)?;
    }
    Ok(report)
}
