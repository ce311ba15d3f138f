use serde::{Deserialize, Serialize};
use std::fmt;

use super::ProductFormError;
use crate::analytic::{self, ExtensionParams, UpdateLaw};

/// A place a customer can be: a class at the single-server station or one of
/// the infinite-server nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Station {
    Class(usize),
    Node(usize),
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Station::Class(i) => write!(f, "class A{}", i + 1),
            Station::Node(j) => write!(f, "node B{}", j + 1),
        }
    }
}

/// Closed network with one multi-class single-server station (rate
/// `lambda * N`) and `B` infinite-server nodes.
///
/// `routing` is square over all stations, classes first then nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub classes: usize,
    pub nodes: usize,
    pub routing: Vec<Vec<f64>>,
    pub rate: f64,
    pub node_means: Vec<f64>,
    pub customers: usize,
}

pub(crate) const ROW_SUM_TOLERANCE: f64 = 1e-12;

impl NetworkSpec {
    pub fn stations(&self) -> usize {
        self.classes + self.nodes
    }

    pub fn index(&self, station: Station) -> usize {
        match station {
            Station::Class(i) => i,
            Station::Node(j) => self.classes + j,
        }
    }

    pub fn station(&self, index: usize) -> Station {
        if index < self.classes {
            Station::Class(index)
        } else {
            Station::Node(index - self.classes)
        }
    }

    pub fn prob(&self, from: Station, to: Station) -> f64 {
        self.routing[self.index(from)][self.index(to)]
    }

    /// Checks dimensions, row sums, positivity of rates, and that the routing
    /// graph is a single strongly connected chain.
    pub fn validate(&self) -> Result<(), ProductFormError> {
        let s = self.stations();
        if self.classes == 0 || self.nodes == 0 {
            return Err(ProductFormError::Invalid("network needs at least one class and one node".into()));
        }
        if self.customers == 0 {
            return Err(ProductFormError::Invalid("network needs at least one customer".into()));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(ProductFormError::Invalid(format!("rate must be positive, got {}", self.rate)));
        }
        if self.node_means.len() != self.nodes {
            return Err(ProductFormError::Invalid(format!(
                "expected {} node means, got {}",
                self.nodes,
                self.node_means.len()
            )));
        }
        if let Some(m) = self.node_means.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(ProductFormError::Invalid(format!("node means must be nonnegative, got {m}")));
        }
        if self.routing.len() != s || self.routing.iter().any(|row| row.len() != s) {
            return Err(ProductFormError::Invalid(format!("routing must be {s}x{s}")));
        }
        for (i, row) in self.routing.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(ProductFormError::Invalid(format!(
                    "routing row of {} has entries outside [0, 1]",
                    self.station(i)
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(ProductFormError::Invalid(format!(
                    "routing row of {} sums to {sum}",
                    self.station(i)
                )));
            }
        }
        self.check_irreducible()
    }

    fn check_irreducible(&self) -> Result<(), ProductFormError> {
        let s = self.stations();
        let reach = |forward: bool| {
            let mut seen = vec![false; s];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for v in 0..s {
                    let p = if forward { self.routing[u][v] } else { self.routing[v][u] };
                    if p > 0.0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        };
        let origin = self.station(0);
        if let Some(v) = reach(true).iter().position(|r| !r) {
            return Err(ProductFormError::Reducible(format!(
                "{} is unreachable from {origin}",
                self.station(v)
            )));
        }
        if let Some(v) = reach(false).iter().position(|r| !r) {
            return Err(ProductFormError::Reducible(format!(
                "{origin} is unreachable from {}",
                self.station(v)
            )));
        }
        Ok(())
    }
}

/// Network of the baseline scheme: classes `0..K` are the open states, the
/// single node holds closed servers for `tau`.
pub fn baseline_network(lambda: f64, n: usize, law: UpdateLaw) -> Result<NetworkSpec, ProductFormError> {
    let k = law.k();
    let p = analytic::update_transition_probs(law);
    let s = k + 1;
    let mut routing = vec![vec![0.0; s]; s];
    for class in 0..k {
        routing[class][class + 1] = 1.0;
    }
    routing[k][..k].copy_from_slice(&p[..k]);
    routing[k][k] = p[k];
    let spec = NetworkSpec {
        classes: k,
        nodes: 1,
        routing,
        rate: lambda * n as f64,
        node_means: vec![law.tau()],
        customers: n,
    };
    spec.validate()?;
    Ok(spec)
}

/// Network of the K = 2 cool-down extension: classes A1, A2 and nodes B1, B2, B3.
pub fn extension_network(
    lambda: f64,
    n: usize,
    params: ExtensionParams,
) -> Result<NetworkSpec, ProductFormError> {
    let d = analytic::extension_derived(params)?;
    const A1: usize = 0;
    const A2: usize = 1;
    const B1: usize = 2;
    const B2: usize = 3;
    const B3: usize = 4;
    let mut routing = vec![vec![0.0; 5]; 5];
    routing[A1][B1] = 1.0;
    routing[B1][A2] = 1.0;
    routing[A2][B2] = 1.0;
    for (row, probs) in [(B2, d.p2), (B3, d.q2)] {
        routing[row][A1] = probs[0];
        routing[row][B1] = probs[1];
        routing[row][B3] = probs[2];
    }
    let spec = NetworkSpec {
        classes: 2,
        nodes: 3,
        routing,
        rate: lambda * n as f64,
        node_means: vec![params.tau1(), params.tau2(), params.tau3()],
        customers: n,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_routing() {
        let spec = baseline_network(1.0, 3, UpdateLaw::new(2.0, 2).unwrap()).unwrap();
        assert_eq!((spec.classes, spec.nodes), (2, 1));
        let node = Station::Node(0);
        assert!((spec.prob(node, Station::Class(0)) - 0.59399).abs() < 1e-5);
        assert!((spec.prob(node, Station::Class(1)) - 0.27067).abs() < 1e-5);
        assert!((spec.prob(node, node) - 0.13534).abs() < 1e-5);
        assert_eq!(spec.prob(Station::Class(0), Station::Class(1)), 1.0);
        assert_eq!(spec.prob(Station::Class(1), node), 1.0);
        assert_eq!(spec.rate, 3.0);
    }

    #[test]
    fn single_class_baseline_is_a_cycle() {
        let tau: f64 = 0.7;
        let spec = baseline_network(1.0, 2, UpdateLaw::new(tau, 1).unwrap()).unwrap();
        assert_eq!(spec.routing[0], vec![0.0, 1.0]);
        assert!((spec.routing[1][0] - (1.0 - (-tau).exp())).abs() < 1e-15);
    }

    #[test]
    fn extension_rows() {
        let spec = extension_network(1.0, 2, ExtensionParams::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let b2 = &spec.routing[3];
        assert!((b2[0] - 0.49679).abs() < 1e-5);
        assert!((b2[2] - 0.36788).abs() < 1e-5);
        assert!((b2[4] - 0.13534).abs() < 1e-5);
        for row in &spec.routing {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reducible_routing_is_named() {
        let spec = NetworkSpec {
            classes: 2,
            nodes: 1,
            routing: vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]],
            rate: 1.0,
            node_means: vec![1.0],
            customers: 1,
        };
        match spec.validate() {
            Err(ProductFormError::Reducible(msg)) => assert!(msg.contains("class A2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_rows_are_rejected() {
        let mut spec = baseline_network(1.0, 2, UpdateLaw::new(1.0, 2).unwrap()).unwrap();
        spec.routing[0][1] = 0.9;
        assert!(matches!(spec.validate(), Err(ProductFormError::Invalid(_))));
    }
}
