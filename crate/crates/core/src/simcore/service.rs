use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};

use super::{ServiceDist, SimError};

/// Exponential variate with the given rate, by inversion.
pub(crate) fn exponential(rng: &mut (impl RngCore + ?Sized), rate: f64) -> f64 {
    // 1 - U lies in (0, 1], so the logarithm is finite.
    let u: f64 = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

/// Prepared sampler for the service requirement of one job at unit speed.
#[derive(Debug, Clone)]
pub enum ServiceSampler {
    Exponential,
    Gamma(Gamma<f64>),
}

impl ServiceSampler {
    pub fn new(dist: &ServiceDist) -> Result<Self, SimError> {
        match dist {
            ServiceDist::Exponential | ServiceDist::Speeds { .. } => Ok(Self::Exponential),
            ServiceDist::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .map(Self::Gamma)
                .map_err(|e| SimError::Config(format!("gamma({shape}, {rate}): {e}"))),
        }
    }

    pub fn sample(&self, rng: &mut (impl RngCore + ?Sized)) -> f64 {
        match self {
            Self::Exponential => exponential(rng, 1.0),
            Self::Gamma(g) => g.sample(rng),
        }
    }
}

/// One service requirement drawn from `dist` (unit speed).
pub fn sample_service(dist: &ServiceDist, rng: &mut (impl RngCore + ?Sized)) -> Result<f64, SimError> {
    dist.validate(match dist {
        ServiceDist::Speeds { speeds } => speeds.len(),
        _ => 1,
    })?;
    Ok(ServiceSampler::new(dist)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(dist: &ServiceDist, n: usize) -> (f64, f64) {
        let s = ServiceSampler::new(dist).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn unit_means_within_four_standard_errors() {
        let n = 1_000_000;
        for (dist, var) in [
            (ServiceDist::Exponential, 1.0),
            (ServiceDist::Gamma { shape: 2.0, rate: 2.0 }, 0.5),
            (ServiceDist::Gamma { shape: 0.5, rate: 0.5 }, 2.0),
        ] {
            let (m, v) = moments(&dist, n);
            let se = (var / n as f64).sqrt();
            assert!((m - 1.0).abs() < 4.0 * se, "{dist:?}: mean {m}");
            assert!((v - var).abs() < 0.03 * var, "{dist:?}: variance {v}");
        }
    }

    #[test]
    fn invalid_gamma_is_a_config_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bad = ServiceDist::Gamma { shape: 0.0, rate: 1.0 };
        assert!(matches!(sample_service(&bad, &mut rng), Err(SimError::Config(_))));
        let bad = ServiceDist::Gamma { shape: 1.0, rate: -2.0 };
        assert!(matches!(sample_service(&bad, &mut rng), Err(SimError::Config(_))));
    }

    #[test]
    fn samples_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            assert!(exponential(&mut rng, 2.0) > 0.0);
        }
    }
}
