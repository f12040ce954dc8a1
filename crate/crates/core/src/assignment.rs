//! Goal assignment: distance cost matrices, an O(n³) Hungarian solver with a
//! deterministic tie-break, an exhaustive oracle, and the keep-or-swap rule a
//! connected component applies when it forms.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{distance, Vec2};

/// Errors from the assignment solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssignError {
    #[error("cost matrix row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("cost matrix entry ({row}, {col}) must be finite and nonnegative")]
    BadEntry { row: usize, col: usize },
    #[error("brute force is limited to {max} rows, got {got}")]
    TooLarge { got: usize, max: usize },
    #[error("component member {0} is not an agent of this assignment")]
    UnknownAgent(usize),
}

/// Which goal each agent owns. Always a bijection onto `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    /// `goal_of[agent]` is the goal index owned by `agent`.
    pub goal_of: Vec<usize>,
}

impl Assignment {
    /// Agent `i` owns goal `i`.
    pub fn identity(n: usize) -> Self {
        Self {
            goal_of: (0..n).collect(),
        }
    }

    /// True when every goal index in `0..n` appears exactly once.
    pub fn is_bijection(&self) -> bool {
        let n = self.goal_of.len();
        let mut seen = vec![false; n];
        for &g in &self.goal_of {
            if g >= n || seen[g] {
                return false;
            }
            seen[g] = true;
        }
        true
    }

    /// Summed distance from each listed agent to its goal, in list order.
    pub fn cost_to_go(&self, agents: &[usize], positions: &[Vec2], goals: &[Vec2]) -> f64 {
        agents
            .iter()
            .map(|&a| distance(positions[a], goals[self.goal_of[a]]))
            .sum()
    }
}

/// Square matrix of nonnegative finite costs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Builds a matrix from rows, checking shape and entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(AssignError::NotSquare {
                    row: i,
                    len: row.len(),
                    expected: n,
                });
            }
            for (j, &c) in row.iter().enumerate() {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(AssignError::BadEntry { row: i, col: j });
                }
                entries.push(c);
            }
        }
        Ok(Self { n, entries })
    }

    /// Dimension.
    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry at `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Cost of a permutation, summed in row order.
    pub fn cost_of(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }

    fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Distance from every position to every candidate goal.
pub fn cost_matrix(positions: &[Vec2], candidate_goals: &[Vec2]) -> CostMatrix {
    assert_eq!(
        positions.len(),
        candidate_goals.len(),
        "one candidate goal per position"
    );
    let n = positions.len();
    let mut entries = Vec::with_capacity(n * n);
    for &p in positions {
        for &g in candidate_goals {
            entries.push(distance(p, g));
        }
    }
    CostMatrix { n, entries }
}

/// An optimal permutation and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// `perm[row]` is the column assigned to `row`.
    pub perm: Vec<usize>,
    /// Sum of the selected entries, in row order.
    pub total_cost: f64,
}

/// Minimum-cost perfect matching in O(n³).
///
/// Among all minimizers the lexicographically smallest permutation is
/// returned, so integer-valued inputs give the same answer as
/// [`brute_force_assign`].
pub fn solve_hungarian(c: &CostMatrix) -> Solution {
    let n = c.n;
    if n == 0 {
        return Solution {
            perm: Vec::new(),
            total_cost: 0.0,
        };
    }

    // Shortest augmenting path with row potentials `u` and column potentials
    // `v`; index 0 is a sentinel column.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            let crow = c.row(i0 - 1);
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = crow[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[owner[j] - 1] = j - 1;
    }
    let tol = 1e-12 * (1.0 + c.max_entry());
    let tight = |i: usize, j: usize| c.get(i, j) - u[i + 1] - v[j + 1] <= tol;
    lexicographic_min(n, &mut perm, tight);

    let total_cost = c.cost_of(&perm);
    Solution { perm, total_cost }
}

/// Rewrites `perm` into the lexicographically smallest perfect matching of
/// the tight-edge graph. `perm` must itself use only tight edges.
fn lexicographic_min(n: usize, perm: &mut [usize], tight: impl Fn(usize, usize) -> bool) {
    let mut owner = vec![0usize; n];
    for (i, &j) in perm.iter().enumerate() {
        owner[j] = i;
    }
    let mut succ = vec![usize::MAX; n];
    let mut reach = vec![false; n];
    let mut queue = Vec::with_capacity(n);
    for i in 0..n {
        let target = perm[i];
        // Columns from which a chain of tight reassignments among rows > i
        // ends at `target`.
        reach.iter_mut().for_each(|r| *r = false);
        queue.clear();
        reach[target] = true;
        queue.push(target);
        let mut head = 0;
        while head < queue.len() {
            let col = queue[head];
            head += 1;
            for r in i + 1..n {
                let from = perm[r];
                if !reach[from] && tight(r, col) {
                    reach[from] = true;
                    succ[from] = col;
                    queue.push(from);
                }
            }
        }
        let Some(best) = (0..n).find(|&j| reach[j] && tight(i, j)) else {
            continue;
        };
        if best == target {
            continue;
        }
        perm[i] = best;
        let mut col = best;
        let mut moving = owner[best];
        owner[best] = i;
        while col != target {
            let next = succ[col];
            let displaced = owner[next];
            perm[moving] = next;
            owner[next] = moving;
            moving = displaced;
            col = next;
        }
    }
}

/// Largest dimension [`brute_force_assign`] accepts.
pub const BRUTE_FORCE_MAX: usize = 8;

/// Exhaustive minimum over all permutations, visited in lexicographic order;
/// the first strict minimizer wins.
pub fn brute_force_assign(c: &CostMatrix) -> Result<Solution, AssignError> {
    let n = c.n;
    if n > BRUTE_FORCE_MAX {
        return Err(AssignError::TooLarge {
            got: n,
            max: BRUTE_FORCE_MAX,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = c.cost_of(&perm);
    while next_permutation(&mut perm) {
        let cost = c.cost_of(&perm);
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&perm);
        }
    }
    Ok(Solution {
        perm: best,
        total_cost: best_cost,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Outcome of one component decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Assignment after the decision; equal to the input outside the component.
    pub assignment: Assignment,
    /// Component cost-to-go before the decision.
    pub old_cost: f64,
    /// Component cost-to-go after the decision.
    pub new_cost: f64,
    /// True when at least one goal changed hands.
    pub changed: bool,
}

/// Re-permutes the goals owned by `members` so their summed distance-to-go
/// is minimal. The current assignment is kept whenever it is already optimal.
///
/// `members` must be sorted ascending.
pub fn oga_decide(
    members: &[usize],
    current: &Assignment,
    positions: &[Vec2],
    goals: &[Vec2],
) -> Result<Decision, AssignError> {
    let n = current.goal_of.len();
    if let Some(&bad) = members.iter().find(|&&m| m >= n) {
        return Err(AssignError::UnknownAgent(bad));
    }
    debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
    let old_cost = current.cost_to_go(members, positions, goals);
    if members.len() < 2 {
        return Ok(Decision {
            assignment: current.clone(),
            old_cost,
            new_cost: old_cost,
            changed: false,
        });
    }

    let owned: Vec<usize> = members.iter().map(|&m| current.goal_of[m]).collect();
    let member_positions: Vec<Vec2> = members.iter().map(|&m| positions[m]).collect();
    let owned_goals: Vec<Vec2> = owned.iter().map(|&g| goals[g]).collect();
    let solution = solve_hungarian(&cost_matrix(&member_positions, &owned_goals));

    // keep-current wins ties
    if old_cost <= solution.total_cost + 1e-12 * (1.0 + old_cost) {
        return Ok(Decision {
            assignment: current.clone(),
            old_cost,
            new_cost: old_cost,
            changed: false,
        });
    }
    let mut next = current.clone();
    for (row, &col) in solution.perm.iter().enumerate() {
        next.goal_of[members[row]] = owned[col];
    }
    let new_cost = next.cost_to_go(members, positions, goals);
    Ok(Decision {
        changed: next != *current,
        assignment: next,
        old_cost,
        new_cost,
    })
}
