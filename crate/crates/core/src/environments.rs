//! Simulated truth `(Φ, w̄, P)` and per-episode weight sampling.
//!
//! Agents never receive an [`EnvironmentTruth`]; the harness holds it and
//! reveals weights only through [`Feedback`](crate::model::Feedback).

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, FamilySpec, GroundSetModel};
use crate::oracles::{GridStructure, PartitionSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// `w_t(e) = w̄(e) + η`, `η ~ N(0, σ²)` i.i.d.
    Gaussian { sigma: f64 },
    /// `w_t(e) ~ Bernoulli(w̄(e))` independently.
    Bernoulli,
}

/// How the generalization matrix of a coherent environment is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScheme {
    /// Every entry i.i.d. `N(0, 1)`.
    #[default]
    Gaussian,
    /// `Φ = I`; requires `d = L`.
    Identity,
}

/// Feasible family of a tabular (Bernoulli) environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TabularFamily {
    TopK { k: usize },
    /// Per-group quotas; groups come from the environment.
    Partition { quotas: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct EnvironmentTruth {
    model: Arc<GroundSetModel>,
    mean_weights: Vec<f64>,
    noise: NoiseModel,
    theta_star: Option<Vec<f64>>,
    family: FamilySpec,
    groups: Option<Vec<usize>>,
    lambda_true: Option<f64>,
}

impl EnvironmentTruth {
    pub fn new(model: GroundSetModel, mean_weights: Vec<f64>, noise: NoiseModel, family: FamilySpec) -> Result<Self> {
        if mean_weights.len() != model.items() || family.ground_size() != model.items() {
            return Err(Error::input(format!(
                "model has {} items, means have {}, family covers {}",
                model.items(),
                mean_weights.len(),
                family.ground_size()
            )));
        }
        if let NoiseModel::Bernoulli = noise {
            if let Some(e) = mean_weights.iter().position(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::input(format!(
                    "Bernoulli mean of item {e} is {}, outside [0, 1]",
                    mean_weights[e]
                )));
            }
        }
        if let NoiseModel::Gaussian { sigma } = noise {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::parameter(format!("noise scale must be nonnegative, got {sigma}")));
            }
        }
        let groups = match &family {
            FamilySpec::Partition(p) => Some(p.groups.clone()),
            _ => None,
        };
        Ok(EnvironmentTruth {
            model: Arc::new(model),
            mean_weights,
            noise,
            theta_star: None,
            family,
            groups,
            lambda_true: None,
        })
    }

    pub fn model(&self) -> &Arc<GroundSetModel> {
        &self.model
    }

    pub fn mean_weights(&self) -> &[f64] {
        &self.mean_weights
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn theta_star(&self) -> Option<&[f64]> {
        self.theta_star.as_deref()
    }

    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    pub fn lambda_true(&self) -> Option<f64> {
        self.lambda_true
    }

    /// True iff `w̄` lies in the span of `Φ` by construction.
    pub fn is_coherent(&self) -> bool {
        self.theta_star.is_some()
    }

    /// Rescales every feature row to unit norm. A coherent truth keeps
    /// `w̄ = Φθ*` against the rescaled rows; tabular means are unchanged.
    pub fn normalize_features(&mut self) {
        let model = Arc::make_mut(&mut self.model);
        model.normalize_rows();
        if let Some(theta) = &self.theta_star {
            self.mean_weights = model.rows().map(|row| dot(row, theta)).collect();
        }
    }

    /// One i.i.d. draw `w_t ~ P` for every item.
    pub fn sample_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.noise {
            NoiseModel::Gaussian { sigma } => self
                .mean_weights
                .iter()
                .map(|&m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            NoiseModel::Bernoulli => self
                .mean_weights
                .iter()
                .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Writes the table as `item,group,mean,f1,...,fd`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let d = self.model.dim();
        let mut out = String::from("item,group,mean");
        for j in 1..=d {
            out.push_str(&format!(",f{j}"));
        }
        out.push('\n');
        for (e, row) in self.model.rows().enumerate() {
            let g = self.groups.as_ref().map_or(-1, |g| g[e] as i64);
            out.push_str(&format!("{e},{g},{}", self.mean_weights[e]));
            for x in row {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Grid longest-path environment with `w̄ = Φθ*`, `θ* ~ N(0, λ²_true I)`.
///
/// Draw order from `rng`: `Φ` row by row, then `θ*`.
pub fn generate_coherent_gaussian<R: Rng + ?Sized>(
    m: usize,
    d: usize,
    lambda_true: f64,
    sigma_true: f64,
    scheme: FeatureScheme,
    normalize: bool,
    rng: &mut R,
) -> Result<EnvironmentTruth> {
    if lambda_true.is_nan() || lambda_true <= 0.0 {
        return Err(Error::parameter(format!("lambda_true must be positive, got {lambda_true}")));
    }
    let grid = GridStructure::new(m)?;
    let l = grid.items();
    let mut model = match scheme {
        FeatureScheme::Gaussian => {
            if d == 0 {
                return Err(Error::parameter("feature dimension must be at least 1"));
            }
            let features = (0..l * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            GroundSetModel::new(l, d, features)?
        }
        FeatureScheme::Identity => {
            if d != l {
                return Err(Error::parameter(format!("identity features need d = L = {l}, got d = {d}")));
            }
            GroundSetModel::identity(l)?
        }
    };
    if normalize {
        model.normalize_rows();
    }
    let theta: Vec<f64> = (0..d)
        .map(|_| lambda_true * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let means = model.rows().map(|row| dot(row, &theta)).collect();
    let mut truth = EnvironmentTruth::new(
        model,
        means,
        NoiseModel::Gaussian { sigma: sigma_true },
        FamilySpec::Grid(grid),
    )?;
    truth.theta_star = Some(theta);
    truth.lambda_true = Some(lambda_true);
    Ok(truth)
}

/// Synthetic stand-in for a census-style targeting table.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliSpec {
    pub items: usize,
    /// At least [`CENSUS_FEATURES`]; extra columns are uninformative.
    pub dim: usize,
    pub family: TabularFamily,
    pub high_mean: f64,
    pub low_mean: f64,
}

/// Seven one-hot age bins, gender, long-hours flag, scaled education.
pub const CENSUS_FEATURES: usize = 10;

const AGE_BONUS: [f64; 7] = [-4.0, -1.0, 1.0, 2.0, 2.0, 1.0, -2.0];
const INCOME_THRESHOLD: f64 = 16.0;

/// Latent "high income" rule. It thresholds a score with an interaction
/// term, so the resulting two-level mean is not linear in the features.
fn high_income(age_bin: usize, male: bool, long_hours: bool, edu_years: u32) -> bool {
    let mut score = edu_years as f64 + AGE_BONUS[age_bin];
    if male {
        score += 1.5;
    }
    if long_hours {
        score += 3.0;
        if edu_years >= 13 {
            score += 2.0;
        }
    }
    score >= INCOME_THRESHOLD
}

/// Bernoulli environment whose means take two levels, decided by a latent
/// attribute that is a deterministic but nonlinear function of the
/// features. Linear generalization is informative but imperfect.
///
/// Group of each item (for partition families) is its gender: 0 or 1.
pub fn generate_bernoulli_tabular<R: Rng + ?Sized>(spec: &BernoulliSpec, rng: &mut R) -> Result<EnvironmentTruth> {
    for p in [spec.high_mean, spec.low_mean] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!("Bernoulli mean {p} outside [0, 1]")));
        }
    }
    if spec.dim < CENSUS_FEATURES {
        return Err(Error::parameter(format!(
            "census-style features need d >= {CENSUS_FEATURES}, got {}",
            spec.dim
        )));
    }
    let (l, d) = (spec.items, spec.dim);
    let mut features = vec![0.0; l * d];
    let mut means = Vec::with_capacity(l);
    let mut groups = Vec::with_capacity(l);
    for e in 0..l {
        let row = &mut features[e * d..(e + 1) * d];
        let age_bin = rng.random_range(0..7usize);
        let male = rng.random_bool(0.5);
        let long_hours = rng.random_bool(0.4);
        let edu_years = rng.random_range(6..=16u32);
        row[age_bin] = 1.0;
        row[7] = if male { 1.0 } else { 0.0 };
        row[8] = if long_hours { 1.0 } else { 0.0 };
        row[9] = edu_years as f64 / 16.0;
        for x in row[CENSUS_FEATURES..].iter_mut() {
            *x = rng.random::<f64>();
        }
        means.push(if high_income(age_bin, male, long_hours, edu_years) {
            spec.high_mean
        } else {
            spec.low_mean
        });
        groups.push(male as usize);
    }
    let model = GroundSetModel::new(l, d, features)?;
    let family = tabular_family(&spec.family, l, Some(groups))?;
    EnvironmentTruth::new(model, means, NoiseModel::Bernoulli, family)
}

fn tabular_family(family: &TabularFamily, l: usize, groups: Option<Vec<usize>>) -> Result<FamilySpec> {
    match family {
        TabularFamily::TopK { k } => {
            if *k == 0 || *k > l {
                return Err(Error::input(format!("K={k} out of range for {l} items")));
            }
            Ok(FamilySpec::TopK { items: l, k: *k })
        }
        TabularFamily::Partition { quotas } => {
            let groups = groups.ok_or_else(|| Error::input("partition family needs group ids on every item"))?;
            Ok(FamilySpec::Partition(PartitionSpec::new(groups, quotas.clone())?))
        }
    }
}

/// Reads a Bernoulli environment from a CSV with header
/// `item,group,mean,f1,...,fd`, one row per item in index order.
pub fn load_tabular_environment(path: &Path, family: &TabularFamily) -> Result<EnvironmentTruth> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4 || cols[..3] != ["item", "group", "mean"] {
        return Err(Error::input(format!(
            "{}: header must start with item,group,mean and have at least one feature column",
            path.display()
        )));
    }
    for (j, name) in cols[3..].iter().enumerate() {
        if *name != format!("f{}", j + 1) {
            return Err(Error::input(format!(
                "{}: feature column {} is named {name:?}, expected f{}",
                path.display(),
                j + 1,
                j + 1
            )));
        }
    }
    let d = cols.len() - 3;
    let mut features = Vec::new();
    let mut means = Vec::new();
    let mut groups: Vec<i64> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |what: &str, value: &str| {
            Error::input(format!("{} line {line}: invalid {what} {value:?}", path.display()))
        };
        let item: usize = field(0).parse().map_err(|_| bad("item", field(0)))?;
        if item != row {
            return Err(Error::input(format!(
                "{} line {line}: item {item} out of order, expected {row}",
                path.display()
            )));
        }
        groups.push(field(1).parse().map_err(|_| bad("group", field(1)))?);
        let mean: f64 = field(2).parse().map_err(|_| bad("mean", field(2)))?;
        if !(0.0..=1.0).contains(&mean) {
            return Err(Error::input(format!(
                "{} line {line} (item {item}): mean {mean} outside [0, 1]",
                path.display()
            )));
        }
        means.push(mean);
        for j in 0..d {
            let s = field(3 + j);
            let x: f64 = s.parse().map_err(|_| bad("feature", s))?;
            if !x.is_finite() {
                return Err(bad("feature", s));
            }
            features.push(x);
        }
    }
    let l = means.len();
    if l == 0 {
        return Err(Error::input(format!("{}: no item rows", path.display())));
    }
    let model = GroundSetModel::new(l, d, features)?;
    let group_ids = if groups.iter().all(|&g| g >= 0) {
        Some(groups.iter().map(|&g| g as usize).collect())
    } else {
        None
    };
    let family = tabular_family(family, l, group_ids)?;
    EnvironmentTruth::new(model, means, NoiseModel::Bernoulli, family)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| format!(" line {}", p.line())).unwrap_or_default();
    Error::input(format!("{}{line}: {err}", path.display()))
}
