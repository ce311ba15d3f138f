use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use super::{Metrics, SimError};

/// Sample mean with a t-based 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower()..=self.upper()).contains(&x)
    }

    /// True when the two intervals share no point.
    pub fn disjoint(&self, other: &Estimate) -> bool {
        self.upper() < other.lower() || other.upper() < self.lower()
    }
}

pub fn estimate(values: &[f64]) -> Result<Estimate, SimError> {
    let n = values.len();
    if n < 2 {
        return Err(SimError::TooFewRuns(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t =
        StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("degrees of freedom are positive").inverse_cdf(0.975);
    Ok(Estimate { mean, half_width: t * (var / n as f64).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiSummary {
    pub runs: usize,
    pub throughput: Estimate,
    pub blocking: Estimate,
    pub message_rate: Estimate,
    pub messages_per_job: Estimate,
    pub jobs_ahead: Estimate,
    pub mean_open_fraction: Estimate,
}

/// Confidence intervals across independent-seed runs.
pub fn estimate_ci(runs: &[Metrics]) -> Result<CiSummary, SimError> {
    if runs.len() < 2 {
        return Err(SimError::TooFewRuns(runs.len()));
    }
    let of = |f: fn(&Metrics) -> f64| estimate(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(CiSummary {
        runs: runs.len(),
        throughput: of(Metrics::throughput)?,
        blocking: of(Metrics::blocking)?,
        message_rate: of(Metrics::message_rate)?,
        messages_per_job: of(Metrics::messages_per_job)?,
        jobs_ahead: of(Metrics::jobs_ahead_mean)?,
        mean_open_fraction: of(Metrics::mean_open_fraction)?,
    })
}

/// Pearson goodness-of-fit result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson chi-square test of `observed` counts against `probs`. Adjacent
/// cells are merged from both ends until each expected count is at least
/// `min_expected`.
pub fn chi_square_test(
    observed: &[u64],
    probs: &[f64],
    min_expected: f64,
) -> Result<ChiSquareTest, SimError> {
    if observed.len() != probs.len() {
        return Err(SimError::Config("observed and expected lengths differ".into()));
    }
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    // Greedy left-to-right merge, then fold a short last cell into its
    // neighbour.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (obs, p) in observed.iter().zip(probs) {
        o += *obs as f64;
        e += p * total;
        if e >= min_expected {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    if cells.len() < 2 {
        return Err(SimError::Config("too few cells for a chi-square test".into()));
    }
    let statistic = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof is positive").cdf(statistic);
    Ok(ChiSquareTest { statistic, dof, p_value, bins: cells.len() })
}
