use serde::Deserialize;

use hyperlb::productform::NetworkSpec;
use hyperlb::schemes::PolicyConfig;
use hyperlb::simcore::{ServiceDist, TieBreak, DEFAULT_HORIZON, DEFAULT_WARMUP};

use crate::error::CliError;

/// A list of values, or an inclusive range with a step.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
                    return Err(CliError::Config(format!(
                        "bad range {start}:{stop}:{step}; need start <= stop and step > 0"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // Multiply rather than accumulate so values do not drift.
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        };
        if v.is_empty() {
            return Err(CliError::Config("empty grid".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("grid values must be finite".into()));
        }
        Ok(v)
    }

    /// Parses `start:stop:step` or a comma-separated list.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let num = |t: &str| {
            t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: {t:?} in grid {s:?}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(Grid::List(s.split(',').map(num).collect::<Result<_, _>>()?)),
            3 => Ok(Grid::Range { start: num(parts[0])?, stop: num(parts[1])?, step: num(parts[2])? }),
            _ => Err(CliError::Usage(format!("grid {s:?} is neither a list nor start:stop:step"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn resolve(&self, base: u64) -> Result<Vec<u64>, CliError> {
        let s = match self {
            Seeds::Count(n) => (0..*n).map(|i| base.wrapping_add(i)).collect(),
            Seeds::List(v) => v.clone(),
        };
        if s.is_empty() {
            return Err(CliError::Config("need at least one seed".into()));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Tau,
    /// Message budget `1/tau`.
    Delta,
    Lambda,
    Servers,
    Tau1,
    Tau2,
    Tau3,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    pub delta: Grid,
    pub k: Vec<usize>,
    /// Values of `delta * K` for curves along which `K = a / delta` is an
    /// integer.
    #[serde(default)]
    pub products: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfSpec {
    pub servers: Vec<usize>,
    pub lambda: f64,
    pub tau: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSpec {
    pub tau1: Grid,
    #[serde(default)]
    pub tau2: Option<Grid>,
    /// When set, `tau2 = tau_sum - tau1` on each row.
    #[serde(default)]
    pub tau_sum: Option<f64>,
    pub tau3: Grid,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub network: Option<NetworkSpec>,
}

fn default_cap() -> usize {
    100_000
}

fn default_services() -> Vec<ServiceDist> {
    vec![ServiceDist::Exponential]
}

fn default_seeds() -> Seeds {
    Seeds::Count(10)
}

fn default_seed() -> u64 {
    1
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_warmup() -> f64 {
    DEFAULT_WARMUP
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub servers: usize,
    pub lambda: f64,
    pub policies: Vec<PolicyConfig>,
    #[serde(default = "default_services")]
    pub services: Vec<ServiceDist>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_warmup")]
    pub warmup: f64,
    #[serde(default)]
    pub tiebreak: TieBreak,
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Seeds,
    #[serde(default)]
    pub vary: Option<Param>,
    #[serde(default)]
    pub values: Option<Grid>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Experiment {
    Bound(BoundSpec),
    Pmf(PmfSpec),
    Simulate(SimSpec),
    Sweep(SimSpec),
    Verify(VerifySpec),
    Extension(ExtensionSpec),
}

impl Experiment {
    pub fn mode(&self) -> &'static str {
        match self {
            Self::Bound(_) => "bound",
            Self::Pmf(_) => "pmf",
            Self::Simulate(_) => "simulate",
            Self::Sweep(_) => "sweep",
            Self::Verify(_) => "verify",
            Self::Extension(_) => "extension",
        }
    }
}

/// An experiment file: an optional free-text `description` plus the
/// experiment itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFile {
    pub description: Option<String>,
    pub experiment: Experiment,
}

/// Parses an experiment file. `default_mode` fills in a missing `mode` key.
pub fn parse_experiment(text: &str, default_mode: Option<&str>) -> Result<ExperimentFile, CliError> {
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let description = match table.remove("description") {
        Some(toml::Value::String(s)) => Some(s),
        Some(_) => return Err(CliError::Config("description must be a string".into())),
        None => None,
    };
    if let Some(mode) = default_mode {
        match table.get("mode") {
            None => {
                table.insert("mode".into(), toml::Value::String(mode.into()));
            }
            Some(toml::Value::String(m)) if m == mode => {}
            Some(other) => {
                return Err(CliError::Config(format!("expected mode {mode:?}, file says {other}")));
            }
        }
    }
    let experiment = table.try_into::<Experiment>().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ExperimentFile { description, experiment })
}

/// Command-line overrides for simulation experiments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub horizon: Option<f64>,
    pub warmup: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut SimSpec) {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(n) = self.seeds {
            spec.seeds = Seeds::Count(n);
        }
        if let Some(h) = self.horizon {
            spec.horizon = h;
        }
        if let Some(w) = self.warmup {
            spec.warmup = w;
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(Grid::parse("0.1:0.5:0.1").unwrap().values().unwrap().len(), 5);
        assert_eq!(Grid::parse("1,2,3").unwrap().values().unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(Grid::parse("1:2").is_err());
        assert!(Grid::parse("a").is_err());
        assert!(Grid::Range { start: 1.0, stop: 0.0, step: 0.1 }.values().is_err());
        assert!(Grid::List(vec![]).values().is_err());
        let v = Grid::Range { start: 0.05, stop: 2.0, step: 0.05 }.values().unwrap();
        assert_eq!(v.len(), 40);
        assert!((v[39] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn seeds() {
        assert_eq!(Seeds::Count(3).resolve(5).unwrap(), vec![5, 6, 7]);
        assert_eq!(Seeds::List(vec![9, 2]).resolve(5).unwrap(), vec![9, 2]);
        assert!(Seeds::Count(0).resolve(1).is_err());
    }

    #[test]
    fn parse_sweep_file() {
        let text = r#"
            description = "demo"
            mode = "sweep"
            servers = 10
            lambda = 1.2
            seeds = 3
            vary = "delta"
            values = { start = 0.5, stop = 1.0, step = 0.5 }

            [[policies]]
            kind = "baseline"
            tau = 1.0
            k = 2

            [[services]]
            kind = "gamma"
            shape = 2.0
            rate = 2.0
        "#;
        let f = parse_experiment(text, None).unwrap();
        assert_eq!(f.description.as_deref(), Some("demo"));
        match f.experiment {
            Experiment::Sweep(s) => {
                assert_eq!(s.policies, vec![PolicyConfig::baseline(1.0, 2)]);
                assert_eq!(s.services, vec![ServiceDist::Gamma { shape: 2.0, rate: 2.0 }]);
                assert_eq!(s.seeds, Seeds::Count(3));
                assert_eq!(s.vary, Some(Param::Delta));
                assert_eq!(s.horizon, DEFAULT_HORIZON);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_mode_mismatch_are_config_errors() {
        let e =
            parse_experiment("mode = \"pmf\"\nservers = [1]\nlambda = 1\ntau = 1\nk = 2\nextra = 1", None);
        assert!(matches!(e, Err(CliError::Config(_))));
        let e = parse_experiment("mode = \"pmf\"", Some("sweep"));
        assert!(matches!(e, Err(CliError::Config(_))));
        let ok = parse_experiment("servers = [1]\nlambda = 1\ntau = 1\nk = 2", Some("pmf")).unwrap();
        assert_eq!(ok.experiment.mode(), "pmf");
    }
}
