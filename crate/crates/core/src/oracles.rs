//! Exact and approximate solvers for `argmax_{A∈𝒜} f(A, w)`.
//!
//! Every solver accepts arbitrary real weights, including negative ones:
//! Thompson sampling feeds them `Φθ_t`, which is unbounded.
//!
//! Tie-breaking is a total order so repeated calls are reproducible:
//! the grid DP prefers the rightward edge at every node, set oracles
//! prefer the lowest index.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{total_weight, validate_action, Action, FamilySpec};
use crate::SimRng;

/// An `(m+1) × (m+1)` lattice of nodes with rightward and downward edges.
///
/// Edge indexing: the `m(m+1)` rightward edges come first, row-major by
/// their tail node `(r, c)` with `c < m`; then the `m(m+1)` downward edges,
/// row-major by tail node `(r, c)` with `r < m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridStructure {
    m: usize,
}

impl GridStructure {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("grid side length m must be at least 1"));
        }
        Ok(GridStructure { m })
    }

    pub fn side(&self) -> usize {
        self.m
    }

    /// `L = 2m(m+1)`.
    pub fn items(&self) -> usize {
        2 * self.m * (self.m + 1)
    }

    /// `K = 2m`; every feasible path has exactly this many edges.
    pub fn path_len(&self) -> usize {
        2 * self.m
    }

    #[inline]
    pub fn right_edge(&self, r: usize, c: usize) -> usize {
        debug_assert!(r <= self.m && c < self.m);
        r * self.m + c
    }

    #[inline]
    pub fn down_edge(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < self.m && c <= self.m);
        self.m * (self.m + 1) + r * (self.m + 1) + c
    }

    /// Tail and head nodes `((r, c), (r', c'))` of an edge index.
    pub fn endpoints(&self, e: usize) -> ((usize, usize), (usize, usize)) {
        let half = self.m * (self.m + 1);
        if e < half {
            let (r, c) = (e / self.m, e % self.m);
            ((r, c), (r, c + 1))
        } else {
            let k = e - half;
            let (r, c) = (k / (self.m + 1), k % (self.m + 1));
            ((r, c), (r + 1, c))
        }
    }

    /// Walks from the top-left corner through the marked edges; the marked
    /// set is a path iff the walk reaches the bottom-right corner using
    /// every marked edge.
    pub(crate) fn is_path(&self, marked: &[bool], count: usize) -> bool {
        let (mut r, mut c, mut steps) = (0, 0, 0);
        while (r, c) != (self.m, self.m) {
            let right = c < self.m && marked[self.right_edge(r, c)];
            let down = r < self.m && marked[self.down_edge(r, c)];
            match (right, down) {
                (true, false) => c += 1,
                (false, true) => r += 1,
                _ => return false,
            }
            steps += 1;
        }
        steps == count
    }

    /// Maximum-weight corner-to-corner path by dynamic programming over
    /// the value-to-go of each node, computed in reverse row-major order.
    pub fn longest_path(&self, weights: &[f64]) -> Result<Action> {
        if weights.len() != self.items() {
            return Err(Error::input(format!(
                "grid with m={} has {} edges, got {} weights",
                self.m,
                self.items(),
                weights.len()
            )));
        }
        let n = self.m + 1;
        let mut value = vec![0.0f64; n * n];
        // true = leave the node rightward
        let mut go_right = vec![false; n * n];
        for r in (0..n).rev() {
            for c in (0..n).rev() {
                let node = r * n + c;
                let right = (c < self.m).then(|| weights[self.right_edge(r, c)] + value[node + 1]);
                let down = (r < self.m).then(|| weights[self.down_edge(r, c)] + value[node + n]);
                let (v, take_right) = match (right, down) {
                    (Some(a), Some(b)) => {
                        if a >= b {
                            (a, true)
                        } else {
                            (b, false)
                        }
                    }
                    (Some(a), None) => (a, true),
                    (None, Some(b)) => (b, false),
                    (None, None) => (0.0, false),
                };
                value[node] = v;
                go_right[node] = take_right;
            }
        }
        let mut items = Vec::with_capacity(self.path_len());
        let (mut r, mut c) = (0, 0);
        while (r, c) != (self.m, self.m) {
            if go_right[r * n + c] {
                items.push(self.right_edge(r, c));
                c += 1;
            } else {
                items.push(self.down_edge(r, c));
                r += 1;
            }
        }
        Ok(Action::new(items))
    }

    /// Every corner-to-corner path, `C(2m, m)` of them.
    pub fn enumerate_paths(&self) -> Vec<Action> {
        fn walk(g: &GridStructure, r: usize, c: usize, cur: &mut Vec<usize>, out: &mut Vec<Action>) {
            if (r, c) == (g.m, g.m) {
                out.push(Action::new(cur.clone()));
                return;
            }
            if c < g.m {
                cur.push(g.right_edge(r, c));
                walk(g, r, c + 1, cur, out);
                cur.pop();
            }
            if r < g.m {
                cur.push(g.down_edge(r, c));
                walk(g, r + 1, c, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, 0, 0, &mut Vec::new(), &mut out);
        out
    }
}

/// Group assignment plus the number of items required from each group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    pub groups: Vec<usize>,
    pub quotas: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(groups: Vec<usize>, quotas: Vec<usize>) -> Result<Self> {
        let mut sizes = vec![0usize; quotas.len()];
        for (e, &g) in groups.iter().enumerate() {
            *sizes.get_mut(g).ok_or_else(|| {
                Error::input(format!(
                    "item {e} has group {g} but only {} quotas were given",
                    quotas.len()
                ))
            })? += 1;
        }
        for (g, (&size, &quota)) in sizes.iter().zip(&quotas).enumerate() {
            if quota > size {
                return Err(Error::input(format!(
                    "group {g} has {size} items, cannot meet quota {quota}"
                )));
            }
        }
        Ok(PartitionSpec { groups, quotas })
    }

    pub fn group_members(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        self.groups
            .iter()
            .enumerate()
            .filter(move |(_, &h)| h == g)
            .map(|(e, _)| e)
    }
}

/// Descending weight, then ascending index.
fn by_weight_desc(weights: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b))
}

fn select_best(weights: &[f64], mut pool: Vec<usize>, k: usize) -> Vec<usize> {
    let cmp = by_weight_desc(weights);
    if k < pool.len() && k > 0 {
        pool.select_nth_unstable_by(k - 1, &cmp);
    }
    pool.truncate(k);
    pool.sort_unstable_by(&cmp);
    pool
}

/// The `k` heaviest items, emitted heaviest first.
pub fn top_k(weights: &[f64], k: usize) -> Result<Action> {
    if k == 0 || k > weights.len() {
        return Err(Error::input(format!(
            "K={k} out of range for {} items",
            weights.len()
        )));
    }
    Ok(Action::new(select_best(weights, (0..weights.len()).collect(), k)))
}

/// The quota-many heaviest items of each group, group by group. Exact because
/// the objective is modular and the constraint decomposes by group.
pub fn partition_top_k(weights: &[f64], spec: &PartitionSpec) -> Result<Action> {
    if weights.len() != spec.groups.len() {
        return Err(Error::input(format!(
            "partition covers {} items, got {} weights",
            spec.groups.len(),
            weights.len()
        )));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); spec.quotas.len()];
    for (e, &g) in spec.groups.iter().enumerate() {
        members
            .get_mut(g)
            .ok_or_else(|| Error::input(format!("item {e} has unknown group {g}")))?
            .push(e);
    }
    let mut items = Vec::with_capacity(spec.quotas.iter().sum());
    for (g, (pool, &quota)) in members.into_iter().zip(&spec.quotas).enumerate() {
        if quota > pool.len() {
            return Err(Error::input(format!(
                "group {g} has {} items, cannot meet quota {quota}",
                pool.len()
            )));
        }
        items.extend(select_best(weights, pool, quota));
    }
    Ok(Action::new(items))
}

/// Exhaustive argmax over an explicit family. Ties go to the action whose
/// sorted item list is lexicographically smallest.
pub fn brute_force_oracle(family: &[Action], weights: &[f64]) -> Result<Action> {
    let mut best: Option<(f64, Vec<usize>, &Action)> = None;
    for a in family {
        let v = total_weight(a, weights)?;
        let key = a.sorted();
        let better = match &best {
            None => true,
            Some((bv, bkey, _)) => v > *bv || (v == *bv && key < *bkey),
        };
        if better {
            best = Some((v, key, a));
        }
    }
    best.map(|(_, _, a)| a.clone())
        .ok_or_else(|| Error::input("empty family"))
}

fn k_subsets(pool: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - cur.len() {
                break;
            }
            cur.push(pool[i]);
            rec(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(pool, k, 0, &mut Vec::new(), out);
}

impl FamilySpec {
    /// The exact oracle for this family.
    pub fn solve(&self, weights: &[f64]) -> Result<Action> {
        if weights.len() != self.ground_size() {
            return Err(Error::input(format!(
                "family over {} items, got {} weights",
                self.ground_size(),
                weights.len()
            )));
        }
        match self {
            FamilySpec::Grid(g) => g.longest_path(weights),
            FamilySpec::TopK { k, .. } => top_k(weights, *k),
            FamilySpec::Partition(spec) => partition_top_k(weights, spec),
        }
    }

    /// Lists every member of the family; refuses when there would be more
    /// than `limit` of them.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<Action>> {
        let too_many = || Error::input(format!("family has more than {limit} members"));
        match self {
            FamilySpec::Grid(g) => {
                if binomial(2 * g.side(), g.side()).is_none_or(|n| n > limit as u128) {
                    return Err(too_many());
                }
                Ok(g.enumerate_paths())
            }
            FamilySpec::TopK { items, k } => {
                if binomial(*items, *k).is_none_or(|n| n > limit as u128) {
                    return Err(too_many());
                }
                let mut out = Vec::new();
                k_subsets(&(0..*items).collect::<Vec<_>>(), *k, &mut out);
                Ok(out.into_iter().map(Action::new).collect())
            }
            FamilySpec::Partition(spec) => {
                let mut total: u128 = 1;
                let mut per_group = Vec::new();
                for (g, &q) in spec.quotas.iter().enumerate() {
                    let pool: Vec<usize> = spec.group_members(g).collect();
                    total = total
                        .checked_mul(binomial(pool.len(), q).ok_or_else(too_many)?)
                        .ok_or_else(too_many)?;
                    if total > limit as u128 {
                        return Err(too_many());
                    }
                    let mut subsets = Vec::new();
                    k_subsets(&pool, q, &mut subsets);
                    per_group.push(subsets);
                }
                let mut out: Vec<Vec<usize>> = vec![Vec::new()];
                for subsets in per_group {
                    out = out
                        .iter()
                        .flat_map(|prefix| {
                            subsets.iter().map(move |s| {
                                let mut v = prefix.clone();
                                v.extend_from_slice(s);
                                v
                            })
                        })
                        .collect();
                }
                Ok(out.into_iter().map(Action::new).collect())
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// A combinatorial optimization oracle over a fixed family.
pub trait Oracle: Send {
    fn solve(&mut self, weights: &[f64]) -> Result<Action>;
    fn family(&self) -> &FamilySpec;
}

#[derive(Debug, Clone)]
pub struct ExactOracle {
    family: FamilySpec,
}

impl ExactOracle {
    pub fn new(family: FamilySpec) -> Self {
        ExactOracle { family }
    }
}

impl Oracle for ExactOracle {
    fn solve(&mut self, weights: &[f64]) -> Result<Action> {
        self.family.solve(weights)
    }

    fn family(&self) -> &FamilySpec {
        &self.family
    }
}

/// Wraps an exact oracle into one with sub-optimality gap `γ`.
///
/// With probability `perturb_prob` the wrapper solves a noisy copy of the
/// weights instead and emits that solution only if its true value is at
/// least `(1−γ)` of the optimum; otherwise it emits the exact solution.
#[derive(Debug, Clone)]
pub struct GammaApproximate {
    inner: ExactOracle,
    gamma: f64,
    perturb_prob: f64,
    rng: SimRng,
}

impl GammaApproximate {
    pub fn new(inner: ExactOracle, gamma: f64, rng: SimRng) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::parameter(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        Ok(GammaApproximate {
            inner,
            gamma,
            perturb_prob: 0.5,
            rng,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Oracle for GammaApproximate {
    fn solve(&mut self, weights: &[f64]) -> Result<Action> {
        let exact = self.inner.solve(weights)?;
        if self.gamma == 0.0 || self.rng.random::<f64>() >= self.perturb_prob {
            return Ok(exact);
        }
        let optimum = total_weight(&exact, weights)?;
        let scale = weights.iter().map(|w| w.abs()).sum::<f64>() / weights.len() as f64;
        let noisy: Vec<f64> = weights
            .iter()
            .map(|w| w + 2.0 * self.gamma * scale * self.rng.sample::<f64, _>(StandardNormal))
            .collect();
        let candidate = self.inner.solve(&noisy)?;
        if total_weight(&candidate, weights)? >= (1.0 - self.gamma) * optimum {
            debug_assert!(validate_action(&candidate, self.inner.family()));
            Ok(candidate)
        } else {
            Ok(exact)
        }
    }

    fn family(&self) -> &FamilySpec {
        self.inner.family()
    }
}
