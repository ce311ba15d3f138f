use serde::{Deserialize, Serialize};

use super::SimError;
use crate::schemes::PolicyConfig;

pub const DEFAULT_HORIZON: f64 = 1e4;
pub const DEFAULT_WARMUP: f64 = 0.2;

/// Service requirement law. All built-in laws have unit mean per unit speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum ServiceDist {
    /// Exponential with mean 1.
    #[default]
    Exponential,
    /// Gamma with the given shape and rate (mean `shape / rate`).
    Gamma { shape: f64, rate: f64 },
    /// Exponential with per-server rates. Experimental.
    Speeds { speeds: Vec<f64> },
}

impl ServiceDist {
    pub fn is_exponential(&self) -> bool {
        !matches!(self, Self::Gamma { .. })
    }

    pub fn validate(&self, servers: usize) -> Result<(), SimError> {
        match self {
            Self::Exponential => Ok(()),
            Self::Gamma { shape, rate } => {
                if *shape > 0.0 && *rate > 0.0 && shape.is_finite() && rate.is_finite() {
                    Ok(())
                } else {
                    Err(SimError::Config(format!(
                        "gamma shape and rate must be positive, got ({shape}, {rate})"
                    )))
                }
            }
            Self::Speeds { speeds } => {
                if speeds.len() != servers {
                    return Err(SimError::Config(format!(
                        "expected {servers} server speeds, got {}",
                        speeds.len()
                    )));
                }
                if speeds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(SimError::Config("server speeds must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Mean service rate over servers.
    pub fn mean_speed(&self, servers: usize) -> f64 {
        match self {
            Self::Speeds { speeds } => speeds.iter().sum::<f64>() / servers as f64,
            _ => 1.0,
        }
    }
}

/// Order of events that fall on the same instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    UpdatesFirst,
    ArrivalsFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub servers: usize,
    /// Arrival rate per server; arrivals are Poisson with rate `lambda * N`.
    pub lambda: f64,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub service: ServiceDist,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Fraction of the horizon discarded before statistics start.
    #[serde(default = "default_warmup")]
    pub warmup: f64,
    pub seed: u64,
    #[serde(default)]
    pub tiebreak: TieBreak,
    /// Spacing of open-count snapshots in the statistics window.
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_warmup() -> f64 {
    DEFAULT_WARMUP
}

impl SimConfig {
    pub fn new(servers: usize, lambda: f64, policy: PolicyConfig, seed: u64) -> Self {
        Self {
            servers,
            lambda,
            policy,
            service: ServiceDist::Exponential,
            horizon: DEFAULT_HORIZON,
            warmup: DEFAULT_WARMUP,
            seed,
            tiebreak: TieBreak::default(),
            snapshot_interval: None,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_service(mut self, service: ServiceDist) -> Self {
        self.service = service;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn warmup_time(&self) -> f64 {
        self.warmup * self.horizon
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.servers == 0 {
            return Err(SimError::Config("need at least one server".into()));
        }
        if u32::try_from(self.servers).is_err() {
            return Err(SimError::Config("too many servers".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(SimError::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(SimError::Config(format!("warmup must lie in [0, 1), got {}", self.warmup)));
        }
        if let Some(dt) = self.snapshot_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(SimError::Config("snapshot interval must be positive".into()));
            }
        }
        self.service.validate(self.servers)?;
        self.policy.validate().map_err(SimError::Config)?;
        if matches!(self.policy, PolicyConfig::NonIdling { .. }) && !self.service.is_exponential() {
            return Err(SimError::Config(
                "the non-idling variant is defined for exponential services only".into(),
            ));
        }
        Ok(())
    }
}
