use rayon::prelude::*;

use hyperlb::analytic::{extension_metrics, lambda_star, open_closed_pmf, ExtensionParams, UpdateLaw};
use hyperlb::productform::{
    cross_check, generator_suite, insensitivity_suite, stage_check, OracleReport, STAGE_COUNTS,
};
use hyperlb::schemes::{analytic_overlay, PolicyConfig};
use hyperlb::simcore::{estimate_ci, run, Metrics, ServiceDist, SimConfig};

use crate::error::CliError;
use crate::spec::{BoundSpec, ExtensionSpec, Param, PmfSpec, SimSpec, VerifySpec};
use crate::table::{opt, sig9, Table};

/// Residual above which `verify` fails.
pub const VERIFY_TOLERANCE: f64 = 1e-8;

pub fn bound(spec: &BoundSpec) -> Result<Table, CliError> {
    let deltas = spec.delta.values()?;
    if spec.k.is_empty() && spec.products.is_empty() {
        return Err(CliError::Config("need at least one K or one delta*K product".into()));
    }
    let mut t = Table::new(vec!["curve", "delta", "K", "lambda_star"]);
    for &k in &spec.k {
        for &d in &deltas {
            let l = lambda_star(d, k)?;
            t.push(vec![format!("K={k}"), sig9(d), k.to_string(), sig9(l)]);
        }
    }
    let lo = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &a in &spec.products {
        if !(a > 0.0 && a.is_finite()) {
            return Err(CliError::Config(format!("delta*K product must be positive, got {a}")));
        }
        // Only deltas with an integer K = a / delta, largest delta first.
        let mut rows = Vec::new();
        let mut k = 1usize;
        loop {
            let d = a / k as f64;
            if d < lo * (1.0 - 1e-12) {
                break;
            }
            if d <= hi * (1.0 + 1e-12) {
                rows.push(vec![format!("dK={}", sig9(a)), sig9(d), k.to_string(), sig9(lambda_star(d, k)?)]);
            }
            k += 1;
        }
        rows.reverse();
        t.rows.extend(rows);
    }
    Ok(t)
}

pub fn pmf(spec: &PmfSpec) -> Result<Table, CliError> {
    if spec.servers.is_empty() {
        return Err(CliError::Config("need at least one server count".into()));
    }
    let law = UpdateLaw::new(spec.tau, spec.k)?;
    let mut t = Table::new(vec!["servers", "lambda", "tau", "K", "open", "probability"]);
    for &n in &spec.servers {
        let p = open_closed_pmf(n, spec.lambda, law)?;
        for (open, prob) in p.iter().enumerate() {
            t.push(vec![
                n.to_string(),
                sig9(spec.lambda),
                sig9(spec.tau),
                spec.k.to_string(),
                open.to_string(),
                sig9(*prob),
            ]);
        }
    }
    Ok(t)
}

pub fn extension(spec: &ExtensionSpec) -> Result<Table, CliError> {
    let tau1 = spec.tau1.values()?;
    let tau3 = spec.tau3.values()?;
    let mut t = Table::new(vec!["tau1", "tau2", "tau3", "lambda_star_ext", "u", "q"]);
    let fixed_tau2 = match (&spec.tau2, spec.tau_sum) {
        (Some(g), None) => Some(g.values()?),
        (None, Some(_)) => None,
        _ => return Err(CliError::Config("give exactly one of tau2 and tau_sum".into())),
    };
    for &t1 in &tau1 {
        let tau2 = match &fixed_tau2 {
            Some(v) => v.clone(),
            None => vec![spec.tau_sum.unwrap_or_default() - t1],
        };
        for &t2 in &tau2 {
            for &t3 in &tau3 {
                let params = ExtensionParams::new(t1, t2, t3)
                    .map_err(|e| CliError::Config(format!("row tau=({t1}, {t2}, {t3}): {e}")))?;
                let m = extension_metrics(params)?;
                t.push(vec![
                    sig9(t1),
                    sig9(t2),
                    sig9(t3),
                    sig9(m.lambda_star),
                    sig9(m.messages_per_job),
                    sig9(m.jobs_ahead),
                ]);
            }
        }
    }
    Ok(t)
}

pub fn verify(spec: &VerifySpec) -> Result<(Table, OracleReport), CliError> {
    let report = match &spec.network {
        Some(net) => {
            let mut r = OracleReport::default();
            cross_check("network", net, spec.cap, &mut r)?;
            for node in 0..net.nodes {
                stage_check("network", net, node, &STAGE_COUNTS, &mut r)?;
            }
            r
        }
        None => {
            let mut r = generator_suite(spec.cap)?;
            r.checks.extend(insensitivity_suite()?.checks);
            r
        }
    };
    let mut t = Table::new(vec!["network", "check", "deviation"]);
    for c in &report.checks {
        t.push(vec![c.network.clone(), c.check.to_string(), sig9(c.deviation)]);
    }
    Ok((t, report))
}

fn service_label(s: &ServiceDist) -> String {
    match s {
        ServiceDist::Exponential => "exponential".into(),
        ServiceDist::Gamma { shape, rate } => format!("gamma_{}_{}", sig9(*shape), sig9(*rate)),
        ServiceDist::Speeds { .. } => "speeds".into(),
    }
}

fn apply(param: Param, value: f64, policy: &PolicyConfig, cfg: &mut SimConfig) -> Result<(), CliError> {
    let single_tau = |v: f64| -> Result<PolicyConfig, CliError> {
        if policy.tau().is_none() {
            return Err(CliError::Config(format!(
                "cannot vary the update interval of the {} scheme; vary tau1, tau2 or tau3",
                policy.name()
            )));
        }
        Ok(policy.with_tau(v))
    };
    match param {
        Param::Tau => cfg.policy = single_tau(value)?,
        Param::Delta => cfg.policy = single_tau(1.0 / value)?,
        Param::Lambda => cfg.lambda = value,
        Param::Servers => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(CliError::Config(format!(
                    "server count must be a positive integer, got {value}"
                )));
            }
            cfg.servers = value as usize;
        }
        Param::Tau1 | Param::Tau2 | Param::Tau3 => match policy {
            PolicyConfig::Extension { tau1, tau2, tau3, selection } => {
                let (mut a, mut b, mut c) = (*tau1, *tau2, *tau3);
                match param {
                    Param::Tau1 => a = value,
                    Param::Tau2 => b = value,
                    _ => c = value,
                }
                cfg.policy = PolicyConfig::Extension { tau1: a, tau2: b, tau3: c, selection: *selection };
            }
            _ => {
                return Err(CliError::Config(format!(
                    "tau1, tau2 and tau3 only apply to the extension scheme, not {}",
                    policy.name()
                )))
            }
        },
    }
    Ok(())
}

/// Expands a simulation experiment into its sweep points, in output order.
pub fn sweep_points(spec: &SimSpec, single: bool) -> Result<Vec<SimConfig>, CliError> {
    if spec.policies.is_empty() || spec.services.is_empty() {
        return Err(CliError::Config("need at least one policy and one service law".into()));
    }
    let values = match (single, spec.vary, &spec.values) {
        (true, None, None) => vec![None],
        (true, _, _) => {
            return Err(CliError::Config(
                "simulate takes a single point; use sweep to vary a parameter".into(),
            ))
        }
        (false, Some(p), Some(g)) => g.values()?.into_iter().map(|v| Some((p, v))).collect(),
        (false, _, _) => return Err(CliError::Config("a sweep needs both `vary` and `values`".into())),
    };
    let mut out = Vec::new();
    for policy in &spec.policies {
        for service in &spec.services {
            for v in &values {
                let mut cfg = SimConfig {
                    servers: spec.servers,
                    lambda: spec.lambda,
                    policy: policy.clone(),
                    service: service.clone(),
                    horizon: spec.horizon,
                    warmup: spec.warmup,
                    seed: spec.seed,
                    tiebreak: spec.tiebreak,
                    snapshot_interval: spec.snapshot_interval,
                };
                if let Some((p, value)) = v {
                    apply(*p, *value, policy, &mut cfg)?;
                }
                cfg.validate()?;
                out.push(cfg);
            }
        }
    }
    Ok(out)
}

pub const SIM_HEADER: [&str; 30] = [
    "scheme",
    "service",
    "servers",
    "lambda",
    "tau",
    "K",
    "tau1",
    "tau2",
    "tau3",
    "runs",
    "throughput",
    "throughput_hw",
    "blocking",
    "blocking_hw",
    "message_rate",
    "message_rate_hw",
    "messages_per_job",
    "messages_per_job_hw",
    "jobs_ahead",
    "jobs_ahead_hw",
    "open_fraction",
    "open_fraction_hw",
    "lambda_star",
    "blocking_limit",
    "blocking_finite",
    "messages_per_job_ref",
    "message_rate_cap",
    "audit_violations",
    "audits_clean",
    "pass_audited",
];

/// Per-metric mean and, with two or more runs, the CI half-width.
fn summarize(runs: &[Metrics]) -> Result<Vec<(f64, Option<f64>)>, CliError> {
    if runs.len() >= 2 {
        let c = estimate_ci(runs)?;
        Ok([c.throughput, c.blocking, c.message_rate, c.messages_per_job, c.jobs_ahead, c.mean_open_fraction]
            .iter()
            .map(|e| (e.mean, Some(e.half_width)))
            .collect())
    } else {
        let m = &runs[0];
        Ok([
            m.throughput(),
            m.blocking(),
            m.message_rate(),
            m.messages_per_job(),
            m.jobs_ahead_mean(),
            m.mean_open_fraction(),
        ]
        .iter()
        .map(|v| (*v, None))
        .collect())
    }
}

/// Result of a simulation experiment: the table plus descriptions of any
/// rows whose audits failed.
pub struct SimOutcome {
    pub table: Table,
    pub audit_failures: Vec<String>,
}

pub fn simulate(spec: &SimSpec, single: bool) -> Result<SimOutcome, CliError> {
    let points = sweep_points(spec, single)?;
    let seeds = spec.seeds.resolve(spec.seed)?;
    let jobs: Vec<(usize, u64)> =
        (0..points.len()).flat_map(|p| seeds.iter().map(move |&s| (p, s))).collect();
    // Collecting an indexed parallel iterator keeps job order.
    let results: Vec<Metrics> =
        jobs.par_iter().map(|&(p, s)| run(&points[p].clone().with_seed(s))).collect::<Result<_, _>>()?;

    let mut table = Table::new(SIM_HEADER.to_vec());
    let mut audit_failures = Vec::new();
    for (cfg, runs) in points.iter().zip(results.chunks(seeds.len())) {
        let stats = summarize(runs)?;
        let overlay = analytic_overlay(&cfg.policy, cfg.lambda, cfg.servers)?;
        let violations: u64 = runs.iter().map(|m| m.audits.total()).sum();
        let clean = runs.iter().all(|m| m.audits.clean());
        let (t1, t2, t3) = match cfg.policy {
            PolicyConfig::Extension { tau1, tau2, tau3, .. } => (Some(tau1), Some(tau2), Some(tau3)),
            _ => (None, None, None),
        };
        let mut row = vec![
            cfg.policy.name().to_string(),
            service_label(&cfg.service),
            cfg.servers.to_string(),
            sig9(cfg.lambda),
            opt(cfg.policy.tau()),
            cfg.policy.k().to_string(),
            opt(t1),
            opt(t2),
            opt(t3),
            runs.len().to_string(),
        ];
        for (mean, hw) in stats {
            row.push(sig9(mean));
            row.push(opt(hw));
        }
        row.extend([
            sig9(overlay.lambda_star),
            sig9(overlay.blocking_limit),
            opt(overlay.blocking_finite),
            sig9(overlay.messages_per_job),
            opt(overlay.message_rate),
            violations.to_string(),
            clean.to_string(),
            runs.iter().all(|m| m.pass_audited).to_string(),
        ]);
        if !clean {
            audit_failures.push(format!(
                "{} {} N={} lambda={}: {violations} audit violations",
                row[0], row[1], row[2], row[3]
            ));
        }
        table.push(row);
    }
    Ok(SimOutcome { table, audit_failures })
}
