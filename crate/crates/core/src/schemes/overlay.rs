use serde::Serialize;

use super::PolicyConfig;
use crate::analytic::{
    self, blocking_finite, expected_admissions, extension_blocking_finite, extension_metrics, lambda_star,
    AnalyticError, ExtensionParams, UpdateLaw,
};

/// Analytic reference values plotted next to simulation results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticOverlay {
    /// Many-server throughput limit for the scheme's message budget.
    pub lambda_star: f64,
    /// `max(0, 1 - lambda* / lambda)`.
    pub blocking_limit: f64,
    /// Messages per admitted job.
    pub messages_per_job: f64,
    /// Nominal per-server message rate cap.
    pub message_rate: Option<f64>,
    /// Exact blocking at this `N`, where a closed form exists.
    pub blocking_finite: Option<f64>,
}

pub fn analytic_overlay(
    policy: &PolicyConfig,
    lambda: f64,
    servers: usize,
) -> Result<AnalyticOverlay, AnalyticError> {
    match *policy {
        PolicyConfig::Baseline { tau, k, .. }
        | PolicyConfig::NonIdling { tau, k, .. }
        | PolicyConfig::WorkConserving { tau, k, .. }
        | PolicyConfig::Aujsq { tau, k, .. } => {
            let law = UpdateLaw::new(tau, k)?;
            let star = lambda_star(1.0 / tau, k)?;
            let exact = matches!(policy, PolicyConfig::Baseline { .. } | PolicyConfig::NonIdling { .. });
            Ok(AnalyticOverlay {
                lambda_star: star,
                blocking_limit: analytic::blocking_limit(lambda, 1.0 / tau, k)?,
                messages_per_job: 1.0 / expected_admissions(law),
                message_rate: Some(1.0 / tau),
                blocking_finite: if exact { Some(blocking_finite(servers, lambda, law)?) } else { None },
            })
        }
        PolicyConfig::Extension { tau1, tau2, tau3, .. } => {
            let params = ExtensionParams::new(tau1, tau2, tau3)?;
            let m = extension_metrics(params)?;
            Ok(AnalyticOverlay {
                lambda_star: m.lambda_star,
                blocking_limit: (1.0 - m.lambda_star / lambda).max(0.0),
                messages_per_job: m.messages_per_job,
                message_rate: None,
                blocking_finite: Some(extension_blocking_finite(servers, lambda, params)?),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_overlay() {
        let o = analytic_overlay(&PolicyConfig::baseline(1.0, 2), 1.2, 100).unwrap();
        assert!((o.lambda_star - 0.896_361_76).abs() < 1e-7);
        assert!((o.blocking_limit - (1.0 - o.lambda_star / 1.2)).abs() < 1e-15);
        assert!((o.messages_per_job - 1.0 / o.lambda_star).abs() < 1e-12);
        assert_eq!(o.message_rate, Some(1.0));
        assert!(o.blocking_finite.unwrap() > o.blocking_limit);
    }

    #[test]
    fn extension_overlay() {
        let p = PolicyConfig::Extension { tau1: 1.0, tau2: 1.0, tau3: 1.0, selection: Default::default() };
        let o = analytic_overlay(&p, 0.3, 50).unwrap();
        assert!((o.lambda_star - 0.701_58).abs() < 1e-5);
        assert_eq!(o.blocking_limit, 0.0);
        assert!((o.messages_per_job - 0.781_59).abs() < 1e-5);
    }
}
