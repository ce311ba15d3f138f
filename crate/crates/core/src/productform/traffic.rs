use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{NetworkSpec, ProductFormError};

/// Scale convention for the relative throughputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// The first infinite-server node has throughput 1.
    FirstNodeUnit,
}

/// Relative throughputs: `gamma` per class, `kappa` per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSolution {
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub normalization: Normalization,
    /// Max absolute violation of the traffic equations.
    pub residual: f64,
}

impl ThroughputSolution {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            gamma: self.gamma.iter().map(|g| g * factor).collect(),
            kappa: self.kappa.iter().map(|k| k * factor).collect(),
            normalization: self.normalization,
            residual: self.residual * factor.abs(),
        }
    }
}

/// Max over stations of `|v_y - sum_x v_x p_{x->y}|`.
pub(crate) fn traffic_residual(spec: &NetworkSpec, v: &[f64]) -> f64 {
    let s = spec.stations();
    (0..s)
        .map(|y| {
            let inflow: f64 = (0..s).map(|x| v[x] * spec.routing[x][y]).sum();
            (v[y] - inflow).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves the traffic equations with the first node pinned to throughput 1.
pub fn solve_traffic(spec: &NetworkSpec) -> Result<ThroughputSolution, ProductFormError> {
    spec.validate()?;
    let s = spec.stations();
    let pin = spec.classes;
    // Rows are the balance equations (P^T - I) v = 0, one replaced by v_pin = 1.
    let mut a = DMatrix::<f64>::zeros(s, s);
    for y in 0..s {
        for x in 0..s {
            a[(y, x)] = spec.routing[x][y];
        }
        a[(y, y)] -= 1.0;
    }
    for x in 0..s {
        a[(pin, x)] = if x == pin { 1.0 } else { 0.0 };
    }
    let mut b = DVector::<f64>::zeros(s);
    b[pin] = 1.0;
    let lu = a.lu();
    let v = lu.solve(&b).ok_or(ProductFormError::Singular { residual: f64::INFINITY })?;
    let mut v: Vec<f64> = v.iter().copied().collect();
    // One step of iterative refinement keeps the residual at rounding level
    // for badly scaled routing rows.
    let residual = traffic_residual(spec, &v);
    if residual > 0.0 {
        let mut r = DVector::<f64>::zeros(s);
        for y in 0..s {
            if y == pin {
                continue;
            }
            let inflow: f64 = (0..s).map(|x| v[x] * spec.routing[x][y]).sum();
            r[y] = v[y] - inflow;
        }
        r[pin] = 1.0 - v[pin];
        if let Some(dv) = lu.solve(&r) {
            let refined: Vec<f64> = v.iter().zip(dv.iter()).map(|(x, d)| x + d).collect();
            if traffic_residual(spec, &refined) <= residual {
                v = refined;
            }
        }
    }
    let residual = traffic_residual(spec, &v);
    if v.iter().any(|x| !(*x > 0.0)) || !residual.is_finite() {
        return Err(ProductFormError::Singular { residual });
    }
    Ok(ThroughputSolution {
        gamma: v[..spec.classes].to_vec(),
        kappa: v[spec.classes..].to_vec(),
        normalization: Normalization::FirstNodeUnit,
        residual,
    })
}
