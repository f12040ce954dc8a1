//! Communication links with hysteresis, and the connected components they
//! induce.
//!
//! A link connects as soon as two agents come within `R_c` of each other and
//! only drops once they are farther apart than `R_c + δ_c`. Only the
//! disconnected-to-connected transition triggers a goal-assignment decision,
//! so a pair that stays connected never re-decides.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{distance, Vec2};

/// Discrete state of one communication link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Link {
    /// Out of range, or never connected.
    #[default]
    Disconnected,
    /// Connected since the last meeting event.
    Connected,
}

/// An unordered agent pair, stored with `.0 < .1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair(pub usize, pub usize);

impl Pair {
    /// Normalizes the order of the two ids.
    pub fn new(a: usize, b: usize) -> Self {
        debug_assert_ne!(a, b);
        if a < b {
            Pair(a, b)
        } else {
            Pair(b, a)
        }
    }
}

/// Link state for every unordered pair of a fixed-size team.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommHysteresis {
    n: usize,
    // upper triangle, row-major
    links: Vec<Link>,
}

fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl CommHysteresis {
    /// All pairs disconnected.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            links: vec![Link::Disconnected; n * n.saturating_sub(1) / 2],
        }
    }

    /// Number of agents covered.
    pub fn agent_count(&self) -> usize {
        self.n
    }

    /// State of the link between `a` and `b`.
    pub fn link(&self, a: usize, b: usize) -> Link {
        let p = Pair::new(a, b);
        self.links[tri_index(self.n, p.0, p.1)]
    }

    /// Overrides the state of one link.
    pub fn set_link(&mut self, a: usize, b: usize, link: Link) {
        let p = Pair::new(a, b);
        let k = tri_index(self.n, p.0, p.1);
        self.links[k] = link;
    }

    /// All pairs with their link state, ordered by pair.
    pub fn pairs(&self) -> impl Iterator<Item = (Pair, Link)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| Pair(i, j)))
            .zip(self.links.iter().copied())
    }

    /// Pairs currently connected.
    pub fn connected_pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.pairs()
            .filter(|(_, l)| *l == Link::Connected)
            .map(|(p, _)| p)
    }
}

/// Advances every link one step.
///
/// Returns the new link states and the pairs that just connected, which are
/// the decision triggers for this step.
pub fn update_hysteresis(
    prev: &CommHysteresis,
    positions: &[Vec2],
    comm_range: f64,
    comm_band: f64,
) -> (CommHysteresis, Vec<Pair>) {
    assert_eq!(prev.n, positions.len(), "one position per agent");
    let mut next = prev.clone();
    let mut triggers = Vec::new();
    let n = prev.n;
    for i in 0..n {
        for j in i + 1..n {
            let k = tri_index(n, i, j);
            let d = distance(positions[i], positions[j]);
            match prev.links[k] {
                Link::Disconnected if d <= comm_range => {
                    next.links[k] = Link::Connected;
                    triggers.push(Pair(i, j));
                }
                Link::Connected if d > comm_range + comm_band => {
                    next.links[k] = Link::Disconnected;
                }
                _ => {}
            }
        }
    }
    (next, triggers)
}

/// A partition of the team into groups joined by connected links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSet {
    /// Each group sorted ascending; groups ordered by their smallest id.
    pub components: Vec<Vec<usize>>,
    label: Vec<usize>,
}

impl ComponentSet {
    /// Index into `components` of the group holding `agent`.
    pub fn component_of(&self, agent: usize) -> usize {
        self.label[agent]
    }

    /// Members of the group holding `agent`.
    pub fn members_of(&self, agent: usize) -> &[usize] {
        &self.components[self.label[agent]]
    }

    /// Number of groups.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    /// True for an empty team.
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so labels do not depend on edge order
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
}

/// Connected components over connected links; isolated agents are singletons.
pub fn connected_components(h: &CommHysteresis, n_agents: usize) -> ComponentSet {
    assert_eq!(h.n, n_agents, "hysteresis sized for a different team");
    let mut uf = UnionFind::new(n_agents);
    for p in h.connected_pairs() {
        uf.union(p.0, p.1);
    }
    let mut label = vec![usize::MAX; n_agents];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for a in 0..n_agents {
        let root = uf.find(a);
        if label[root] == usize::MAX {
            label[root] = components.len();
            components.push(Vec::new());
        }
        let c = label[root];
        label[a] = c;
        components[c].push(a);
    }
    ComponentSet { components, label }
}
