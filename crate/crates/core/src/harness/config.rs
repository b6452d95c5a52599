use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::recommended_c;
use crate::environments::FeatureScheme;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Coherent Gaussian longest-path problem on an `(m+1)×(m+1)` grid.
    LongestPath,
    /// Synthetic two-level Bernoulli table, top-`k` family.
    BernoulliTopk,
    /// Synthetic two-level Bernoulli table, per-group quota family.
    BernoulliPartition,
    /// Bernoulli table read from `env_path`.
    CsvEnv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Comblints,
    Comblinucb,
    Combucb1,
    Combts,
}

impl AgentKind {
    pub fn is_linear(self) -> bool {
        matches!(self, AgentKind::Comblints | AgentKind::Comblinucb)
    }
}

/// Everything that determines an experiment. Defaults reproduce the
/// longest-path default case: `m=30, d=200, λ_true=λ=10, σ_true=σ=1,
/// n=150`, 200 runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub agent: AgentKind,
    pub m: usize,
    pub d: usize,
    /// Episodes per run.
    pub n: usize,
    /// Monte-Carlo runs.
    pub runs: usize,
    pub lambda_true: f64,
    pub sigma_true: f64,
    pub lambda: f64,
    pub sigma: f64,
    /// CombLinUCB scale; mutually exclusive with `delta`.
    pub c: Option<f64>,
    /// Derive `c` from the confidence radius at this failure probability.
    pub delta: Option<f64>,
    /// `S ≥ ‖θ*‖₂` for the radius; defaults to `λ√d`.
    pub theta_norm_bound: Option<f64>,
    /// Oracle sub-optimality gap; 0 means exact.
    pub gamma: f64,
    pub base_seed: u64,
    pub parallelism: usize,
    pub normalize_features: bool,
    /// Reuse one truth across runs (frequentist regret) instead of a fresh
    /// draw per run (Bayes regret).
    pub fixed_truth: bool,
    pub feature_scheme: FeatureScheme,
    /// `L` for synthetic Bernoulli tables.
    pub items: usize,
    /// `K` for top-k families and the default 50/50 partition.
    pub k: usize,
    pub quotas: Option<Vec<usize>>,
    pub high_mean: f64,
    pub low_mean: f64,
    pub env_path: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::LongestPath,
            agent: AgentKind::Comblints,
            m: 30,
            d: 200,
            n: 150,
            runs: 200,
            lambda_true: 10.0,
            sigma_true: 1.0,
            lambda: 10.0,
            sigma: 1.0,
            c: None,
            delta: None,
            theta_norm_bound: None,
            gamma: 0.0,
            base_seed: 0,
            parallelism: 1,
            normalize_features: false,
            fixed_truth: false,
            feature_scheme: FeatureScheme::Gaussian,
            items: 2000,
            k: 100,
            quotas: None,
            high_mean: 0.15,
            low_mean: 0.05,
            env_path: None,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.runs == 0 {
            return fail(format!("n and runs must be at least 1 (n={}, runs={})", self.n, self.runs));
        }
        if self.parallelism == 0 {
            return fail("parallelism must be at least 1".into());
        }
        for (name, v) in [("lambda", self.lambda), ("sigma", self.sigma), ("lambda_true", self.lambda_true)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.sigma_true >= 0.0 && self.sigma_true.is_finite()) {
            return fail(format!("sigma_true must be nonnegative, got {}", self.sigma_true));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if self.d == 0 {
            return fail("d must be at least 1".into());
        }
        match self.agent {
            AgentKind::Comblinucb => match (self.c, self.delta) {
                (Some(c), None) if c > 0.0 => {}
                (Some(c), None) => return fail(format!("c must be positive, got {c}")),
                (None, Some(delta)) if delta > 0.0 && delta < 1.0 => {}
                (None, Some(delta)) => return fail(format!("delta must lie in (0, 1), got {delta}")),
                _ => return fail("comblinucb needs exactly one of `c` or `delta`".into()),
            },
            _ => {
                if self.c.is_some() || self.delta.is_some() {
                    return fail(format!("`c`/`delta` only apply to comblinucb, not {:?}", self.agent));
                }
            }
        }
        if self.theta_norm_bound.is_some() && self.delta.is_none() {
            return fail("theta_norm_bound is only used together with delta".into());
        }
        match self.kind {
            ExperimentKind::LongestPath => {
                if self.m == 0 {
                    return fail("m must be at least 1".into());
                }
            }
            ExperimentKind::BernoulliTopk | ExperimentKind::BernoulliPartition => {
                for (name, p) in [("high_mean", self.high_mean), ("low_mean", self.low_mean)] {
                    if !(0.0..=1.0).contains(&p) {
                        return fail(format!("{name} must lie in [0, 1], got {p}"));
                    }
                }
                if self.k == 0 || self.k > self.items {
                    return fail(format!("k={} out of range for {} items", self.k, self.items));
                }
            }
            ExperimentKind::CsvEnv => {
                if self.env_path.is_none() {
                    return fail("csv_env needs env_path".into());
                }
            }
        }
        Ok(())
    }

    /// Confidence scale for CombLinUCB: `c` as given, or the smallest
    /// admissible radius for `delta` with `S` defaulting to `λ√d`.
    pub fn resolve_c(&self, d: usize, k: usize) -> Result<Option<f64>> {
        if self.agent != AgentKind::Comblinucb {
            return Ok(None);
        }
        if let Some(c) = self.c {
            return Ok(Some(c));
        }
        let delta = self
            .delta
            .ok_or_else(|| Error::Config("comblinucb needs `c` or `delta`".into()))?;
        let s = self
            .theta_norm_bound
            .unwrap_or(self.lambda * (d as f64).sqrt());
        recommended_c(self.lambda, self.sigma, d, self.n, k, delta, s).map(Some)
    }
}

/// The single parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    M,
    D,
    Sigma,
    Lambda,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::M => "m",
            SweepParam::D => "d",
            SweepParam::Sigma => "sigma",
            SweepParam::Lambda => "lambda",
        }
    }

    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::parameter(format!("{} must be a positive integer, got {v}", self.name())))
            }
        };
        match self {
            SweepParam::M => cfg.m = as_count(value)?,
            SweepParam::D => cfg.d = as_count(value)?,
            SweepParam::Sigma => cfg.sigma = value,
            SweepParam::Lambda => cfg.lambda = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(SweepParam::M),
            "d" => Ok(SweepParam::D),
            "sigma" => Ok(SweepParam::Sigma),
            "lambda" => Ok(SweepParam::Lambda),
            other => Err(Error::parameter(format!(
                "unknown sweep parameter {other:?}; expected one of m, d, sigma, lambda"
            ))),
        }
    }
}
