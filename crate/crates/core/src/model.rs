//! Ground set, actions, feedback and the modular reward `f(A, w) = Σ_{e∈A} w(e)`.

use crate::error::{Error, Result};
use crate::oracles::{GridStructure, PartitionSpec};

/// The items `0..L` together with their feature rows `φ_e ∈ ℝ^d`.
///
/// Rows are stored contiguously (row-major) since every hot loop walks the
/// items of a chosen action and touches one row at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSetModel {
    items: usize,
    dim: usize,
    features: Vec<f64>,
    norm_bounded: bool,
}

impl GroundSetModel {
    pub fn new(items: usize, dim: usize, features: Vec<f64>) -> Result<Self> {
        if items == 0 || dim == 0 {
            return Err(Error::input(format!(
                "ground set needs L >= 1 and d >= 1 (got L={items}, d={dim})"
            )));
        }
        if features.len() != items * dim {
            return Err(Error::input(format!(
                "feature matrix has {} entries, expected {items} x {dim}",
                features.len()
            )));
        }
        if let Some(bad) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::input(format!(
                "non-finite feature at row {}, column {}",
                bad / dim,
                bad % dim
            )));
        }
        let mut model = GroundSetModel {
            items,
            dim,
            features,
            norm_bounded: false,
        };
        model.norm_bounded = model.max_row_norm() <= 1.0 + 1e-12;
        Ok(model)
    }

    /// `Φ = I_L`, one indicator feature per item (no generalization).
    pub fn identity(items: usize) -> Result<Self> {
        let mut features = vec![0.0; items * items];
        for e in 0..items {
            features[e * items + e] = 1.0;
        }
        Self::new(items, items, features)
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, e: usize) -> &[f64] {
        &self.features[e * self.dim..(e + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    /// Whether `max_e ‖φ_e‖₂ ≤ 1`, the precondition of the width bound.
    pub fn norm_bounded(&self) -> bool {
        self.norm_bounded
    }

    pub fn max_row_norm(&self) -> f64 {
        self.rows()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Rescales every nonzero row to unit Euclidean norm.
    pub fn normalize_rows(&mut self) {
        for row in self.features.chunks_exact_mut(self.dim) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
        self.norm_bounded = true;
    }

    /// Score vector `Φθ`, one entry per item.
    pub fn scores(&self, theta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(theta.len(), self.dim);
        self.rows().map(|r| dot(r, theta)).collect()
    }
}

/// Inner product with four independent accumulators, which lets the
/// compiler vectorize the reduction.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A feasible subset of items in the order the oracle emitted them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Action {
    pub items: Vec<usize>,
}

impl Action {
    pub fn new(items: Vec<usize>) -> Self {
        Action { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.items.contains(&e)
    }

    /// Items in ascending order, for set comparisons.
    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.items.clone();
        v.sort_unstable();
        v
    }

    pub fn same_set(&self, other: &Action) -> bool {
        self.sorted() == other.sorted()
    }
}

impl From<Vec<usize>> for Action {
    fn from(items: Vec<usize>) -> Self {
        Action { items }
    }
}

/// Semi-bandit observation: the realized weight of every chosen item, and
/// nothing else.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Feedback {
    pub observations: Vec<(usize, f64)>,
}

impl Feedback {
    /// Reveals `weights` on the items of `action` only.
    pub fn reveal(action: &Action, weights: &[f64]) -> Result<Self> {
        let observations = action
            .items
            .iter()
            .map(|&e| {
                weights
                    .get(e)
                    .map(|&w| (e, w))
                    .ok_or_else(|| out_of_range(e, weights.len()))
            })
            .collect::<Result<_>>()?;
        Ok(Feedback { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// True when the observed items are exactly `action`'s, in order.
    pub fn matches(&self, action: &Action) -> bool {
        self.observations.len() == action.items.len()
            && self
                .observations
                .iter()
                .zip(&action.items)
                .all(|((e, _), a)| e == a)
    }
}

fn out_of_range(e: usize, len: usize) -> Error {
    Error::input(format!("item index {e} out of range for {len} items"))
}

/// `f(A, w)`: the summed weight of the items in `action`.
pub fn total_weight(action: &Action, weights: &[f64]) -> Result<f64> {
    action.items.iter().try_fold(0.0, |acc, &e| {
        weights
            .get(e)
            .map(|w| acc + w)
            .ok_or_else(|| out_of_range(e, weights.len()))
    })
}

/// Description of a feasible family `𝒜`, one variant per oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// Corner-to-corner directed paths on a square grid.
    Grid(GridStructure),
    /// All subsets of exactly `k` of the `items`.
    TopK { items: usize, k: usize },
    /// Exactly `quotas[g]` items from each group `g`.
    Partition(PartitionSpec),
}

impl FamilySpec {
    pub fn ground_size(&self) -> usize {
        match self {
            FamilySpec::Grid(g) => g.items(),
            FamilySpec::TopK { items, .. } => *items,
            FamilySpec::Partition(p) => p.groups.len(),
        }
    }

    /// `K`, the largest action size in the family.
    pub fn max_action_size(&self) -> usize {
        match self {
            FamilySpec::Grid(g) => g.path_len(),
            FamilySpec::TopK { k, .. } => *k,
            FamilySpec::Partition(p) => p.quotas.iter().sum(),
        }
    }
}

/// True iff `action` is a member of `family`. Never errors: malformed
/// actions simply are not members.
pub fn validate_action(action: &Action, family: &FamilySpec) -> bool {
    let l = family.ground_size();
    let mut seen = vec![false; l];
    for &e in &action.items {
        if e >= l || seen[e] {
            return false;
        }
        seen[e] = true;
    }
    match family {
        FamilySpec::Grid(grid) => grid.is_path(&seen, action.len()),
        FamilySpec::TopK { k, .. } => action.len() == *k,
        FamilySpec::Partition(spec) => {
            let mut counts = vec![0usize; spec.quotas.len()];
            for &e in &action.items {
                match counts.get_mut(spec.groups[e]) {
                    Some(c) => *c += 1,
                    None => return false,
                }
            }
            counts == spec.quotas
        }
    }
}
