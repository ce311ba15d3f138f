use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::equilibrium::{composition_count, compositions};
use super::{NetworkSpec, OrderedState, ProductFormError, Station};

/// Largest generator solved densely.
pub const DENSE_SOLVE_CAP: usize = 6_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionFamily {
    ClassToClass,
    ClassToNode,
    NodeToClass,
    NodeToNode,
}

impl TransitionFamily {
    fn of(from: Station, to: Station) -> Self {
        match (from, to) {
            (Station::Class(_), Station::Class(_)) => Self::ClassToClass,
            (Station::Class(_), Station::Node(_)) => Self::ClassToNode,
            (Station::Node(_), Station::Class(_)) => Self::NodeToClass,
            (Station::Node(_), Station::Node(_)) => Self::NodeToNode,
        }
    }
}

/// One jump of the chain. Self-loops (`from == to`) are kept so that the
/// jump rates out of a state add up to its total event rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub family: TransitionFamily,
}

/// Sparse rate description of a finite CTMC.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub dim: usize,
    pub transitions: Vec<Transition>,
}

impl Generator {
    /// Total jump rate out of each state, self-loops included.
    pub fn event_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for t in &self.transitions {
            out[t.from] += t.rate;
        }
        out
    }

    /// Rate of actually leaving each state.
    pub fn exit_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for t in self.transitions.iter().filter(|t| t.from != t.to) {
            out[t.from] += t.rate;
        }
        out
    }

    /// Dense `Q` with `Q[i][i] = -exit_rate(i)`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut q = DMatrix::<f64>::zeros(self.dim, self.dim);
        for t in self.transitions.iter().filter(|t| t.from != t.to) {
            q[(t.from, t.to)] += t.rate;
            q[(t.from, t.from)] -= t.rate;
        }
        q
    }

    /// `max_j |(pi Q)_j|`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut flow = vec![0.0; self.dim];
        for t in self.transitions.iter().filter(|t| t.from != t.to) {
            flow[t.to] += pi[t.from] * t.rate;
            flow[t.from] -= pi[t.from] * t.rate;
        }
        flow.iter().fold(0.0, |m, f| m.max(f.abs()))
    }

    /// Applies a state relabeling `new = perm[old]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        Self {
            dim: self.dim,
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition { from: perm[t.from], to: perm[t.to], ..*t })
                .collect(),
        }
    }
}

fn check_node_rates(spec: &NetworkSpec) -> Result<Vec<f64>, ProductFormError> {
    spec.validate()?;
    spec.node_means
        .iter()
        .map(|&m| {
            if m > 0.0 {
                Ok(1.0 / m)
            } else {
                Err(ProductFormError::Invalid("exponential verification needs positive node means".into()))
            }
        })
        .collect()
}

/// Generator over unordered states with random order of service at the
/// single-server station. State order matches [`super::equilibrium_pmf`].
pub fn build_generator_ros(
    spec: &NetworkSpec,
    cap: usize,
) -> Result<(Vec<Vec<usize>>, Generator), ProductFormError> {
    let mu = check_node_rates(spec)?;
    let estimate = composition_count(spec.customers, spec.stations());
    if estimate > cap as f64 {
        return Err(ProductFormError::TooLarge { estimate, cap });
    }
    let support = compositions(spec.customers, spec.stations());
    let index: HashMap<&[usize], usize> =
        support.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let s = spec.stations();
    let mut transitions = Vec::new();
    let mut next = vec![0usize; s];
    for (from, state) in support.iter().enumerate() {
        let open: usize = state[..spec.classes].iter().sum();
        for src in 0..s {
            let count = state[src];
            if count == 0 {
                continue;
            }
            let base = if src < spec.classes {
                spec.rate * count as f64 / open as f64
            } else {
                count as f64 * mu[src - spec.classes]
            };
            for dst in 0..s {
                let p = spec.routing[src][dst];
                if p == 0.0 {
                    continue;
                }
                next.copy_from_slice(state);
                next[src] -= 1;
                next[dst] += 1;
                transitions.push(Transition {
                    from,
                    to: index[next.as_slice()],
                    rate: base * p,
                    family: TransitionFamily::of(spec.station(src), spec.station(dst)),
                });
            }
        }
    }
    Ok((support.clone(), Generator { dim: support.len(), transitions }))
}

/// Number of ordered states: `sum_m A^m * C(N - m + B - 1, B - 1)`.
fn ordered_count(spec: &NetworkSpec) -> f64 {
    (0..=spec.customers)
        .map(|m| (spec.classes as f64).powi(m as i32) * composition_count(spec.customers - m, spec.nodes))
        .sum()
}

/// Ordered support, lexicographic on (line length, line, node counts).
pub fn ordered_support(spec: &NetworkSpec, cap: usize) -> Result<Vec<OrderedState>, ProductFormError> {
    let estimate = ordered_count(spec);
    if estimate > cap as f64 {
        return Err(ProductFormError::TooLarge { estimate, cap });
    }
    let mut out = Vec::with_capacity(estimate as usize);
    for m in 0..=spec.customers {
        let node_parts = compositions(spec.customers - m, spec.nodes);
        let mut line = vec![0usize; m];
        loop {
            for nodes in &node_parts {
                out.push(OrderedState { line: line.clone(), nodes: nodes.clone() });
            }
            // Odometer increment, last position fastest.
            let mut pos = m;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                line[pos] += 1;
                if line[pos] < spec.classes {
                    break;
                }
                line[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if m == 0 || pos == usize::MAX {
                break;
            }
        }
    }
    Ok(out)
}

/// Generator over ordered states with first-come-first-served service: the
/// head of the line moves, arrivals join at the end.
pub fn build_generator_fcfs(
    spec: &NetworkSpec,
    cap: usize,
) -> Result<(Vec<OrderedState>, Generator), ProductFormError> {
    let mu = check_node_rates(spec)?;
    let support = ordered_support(spec, cap)?;
    let index: HashMap<&OrderedState, usize> = support.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let a = spec.classes;
    let s = spec.stations();
    let mut transitions = Vec::new();
    for (from, state) in support.iter().enumerate() {
        if let Some(&head) = state.line.first() {
            for dst in 0..s {
                let p = spec.routing[head][dst];
                if p == 0.0 {
                    continue;
                }
                let mut next = OrderedState { line: state.line[1..].to_vec(), nodes: state.nodes.clone() };
                if dst < a {
                    next.line.push(dst);
                } else {
                    next.nodes[dst - a] += 1;
                }
                transitions.push(Transition {
                    from,
                    to: index[&next],
                    rate: spec.rate * p,
                    family: TransitionFamily::of(Station::Class(head), spec.station(dst)),
                });
            }
        }
        for (j, &b) in state.nodes.iter().enumerate() {
            if b == 0 {
                continue;
            }
            let src = a + j;
            for dst in 0..s {
                let p = spec.routing[src][dst];
                if p == 0.0 {
                    continue;
                }
                let mut next = state.clone();
                next.nodes[j] -= 1;
                if dst < a {
                    next.line.push(dst);
                } else {
                    next.nodes[dst - a] += 1;
                }
                transitions.push(Transition {
                    from,
                    to: index[&next],
                    rate: b as f64 * mu[j] * p,
                    family: TransitionFamily::of(Station::Node(j), spec.station(dst)),
                });
            }
        }
    }
    Ok((support.clone(), Generator { dim: support.len(), transitions }))
}

/// Stationary vector and the balance residual it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub pi: Vec<f64>,
    pub residual: f64,
}

/// Solves `pi Q = 0, sum(pi) = 1` by a dense LU factorization.
pub fn stationary_from_generator(q: &Generator) -> Result<Stationary, ProductFormError> {
    if q.dim > DENSE_SOLVE_CAP {
        return Err(ProductFormError::TooLarge { estimate: q.dim as f64, cap: DENSE_SOLVE_CAP });
    }
    if q.dim == 0 {
        return Err(ProductFormError::Invalid("empty generator".into()));
    }
    let n = q.dim;
    let mut a = q.to_dense().transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let scale = q.exit_rates().iter().fold(1.0f64, |m, r| m.max(*r));
    let x = a.lu().solve(&b).ok_or(ProductFormError::Singular { residual: f64::INFINITY })?;
    let pi: Vec<f64> = x.iter().copied().collect();
    let residual = q.residual(&pi);
    if !residual.is_finite() || residual > 1e-9 * scale || pi.iter().any(|p| *p < -1e-12) {
        return Err(ProductFormError::Singular { residual });
    }
    Ok(Stationary { pi, residual })
}
