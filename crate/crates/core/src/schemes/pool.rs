use std::collections::BTreeSet;

use rand::{Rng, RngCore};

use super::Selection;

const ABSENT: usize = usize::MAX;

/// Set of open servers with O(1) uniform picks or ordered FCFS picks.
#[derive(Debug, Clone)]
pub enum OpenPool {
    Random { members: Vec<usize>, pos: Vec<usize> },
    Fcfs { order: BTreeSet<(u64, usize)>, key: Vec<Option<u64>> },
}

impl OpenPool {
    /// Pool of `servers` servers, all open with interaction time 0.
    pub fn full(selection: Selection, servers: usize) -> Self {
        let mut pool = Self::empty(selection, servers);
        for n in 0..servers {
            pool.insert(n, 0.0);
        }
        pool
    }

    pub fn empty(selection: Selection, servers: usize) -> Self {
        match selection {
            Selection::Random => {
                Self::Random { members: Vec::with_capacity(servers), pos: vec![ABSENT; servers] }
            }
            Selection::Fcfs => Self::Fcfs { order: BTreeSet::new(), key: vec![None; servers] },
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Random { members, .. } => members.len(),
            Self::Fcfs { order, .. } => order.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, n: usize) -> bool {
        match self {
            Self::Random { pos, .. } => pos[n] != ABSENT,
            Self::Fcfs { key, .. } => key[n].is_some(),
        }
    }

    /// Adds `n` (or refreshes its interaction time).
    pub fn insert(&mut self, n: usize, t: f64) {
        match self {
            Self::Random { members, pos } => {
                if pos[n] == ABSENT {
                    pos[n] = members.len();
                    members.push(n);
                }
            }
            Self::Fcfs { order, key } => {
                // Nonnegative floats order like their bit patterns.
                let bits = t.max(0.0).to_bits();
                if let Some(old) = key[n].replace(bits) {
                    order.remove(&(old, n));
                }
                order.insert((bits, n));
            }
        }
    }

    pub fn remove(&mut self, n: usize) {
        match self {
            Self::Random { members, pos } => {
                let i = pos[n];
                if i == ABSENT {
                    return;
                }
                members.swap_remove(i);
                if i < members.len() {
                    pos[members[i]] = i;
                }
                pos[n] = ABSENT;
            }
            Self::Fcfs { order, key } => {
                if let Some(old) = key[n].take() {
                    order.remove(&(old, n));
                }
            }
        }
    }

    pub fn pick(&self, rng: &mut dyn RngCore) -> Option<usize> {
        match self {
            Self::Random { members, .. } => {
                if members.is_empty() {
                    None
                } else {
                    Some(members[rng.random_range(0..members.len())])
                }
            }
            Self::Fcfs { order, .. } => order.first().map(|&(_, n)| n),
        }
    }
}
