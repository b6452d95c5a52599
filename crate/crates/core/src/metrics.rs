//! Regret, return and the width-ledger bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{total_weight, Action};

/// Identifies the environment a run was played on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentDigest {
    pub seed: u64,
    pub items: usize,
    pub dim: usize,
    pub max_action_size: usize,
}

/// Per-episode ledger of one Monte-Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub env: EnvironmentDigest,
    /// `R_t` (or `R^γ_t` with an approximate oracle).
    pub regrets: Vec<f64>,
    /// `f(A^t, w_t)`.
    pub returns: Vec<f64>,
    /// `f(A*, w_t)`.
    pub optimal_returns: Vec<f64>,
    /// `Σ_{e∈A^t} √(φ_eᵀΣ_tφ_e)` at selection time; linear agents only.
    pub width_sums: Option<Vec<f64>>,
    /// `f(A*, w̄)`.
    pub optimal_mean_value: f64,
    /// Width-bound value when the features are norm-bounded.
    pub width_bound: Option<f64>,
}

impl RunRecord {
    pub fn episodes(&self) -> usize {
        self.regrets.len()
    }

    pub fn cum_regret(&self) -> f64 {
        self.regrets.iter().sum()
    }

    pub fn cum_return(&self) -> f64 {
        self.returns.iter().sum()
    }

    pub fn width_ledger_total(&self) -> Option<f64> {
        self.width_sums.as_ref().map(|w| w.iter().sum())
    }
}

/// `R_t = f(A*, w_t) − f(A^t, w_t)`.
pub fn realized_regret(a_star: &Action, a_t: &Action, weights: &[f64]) -> Result<f64> {
    Ok(total_weight(a_star, weights)? - total_weight(a_t, weights)?)
}

/// `R^γ_t = f(A^opt, w_t) − f(A^t, w_t) / (1 − γ)`.
pub fn scaled_realized_regret(a_opt: &Action, a_t: &Action, weights: &[f64], gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::parameter(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    Ok(total_weight(a_opt, weights)? - total_weight(a_t, weights)? / (1.0 - gamma))
}

/// Monte-Carlo estimate of the Bayes cumulative regret curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRegretEstimate {
    pub runs: usize,
    pub mean_regret: Vec<f64>,
    pub se_regret: Vec<f64>,
    pub mean_cum_regret: Vec<f64>,
    /// `(1/t)·mean Σ_{τ≤t} f(A^τ, w_τ)`.
    pub mean_per_step_return: Vec<f64>,
    pub cum_regret: f64,
    /// Across-run standard error of the cumulative regret.
    pub se_cum_regret: f64,
}

fn mean_and_se(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_records(records: &[RunRecord]) -> Result<usize> {
    let first = records
        .first()
        .ok_or_else(|| Error::input("no run records to aggregate"))?;
    let n = first.episodes();
    if n == 0 {
        return Err(Error::input("run records have no episodes"));
    }
    if let Some(r) = records.iter().find(|r| r.episodes() != n || r.returns.len() != n) {
        return Err(Error::input(format!(
            "run {} has {} episodes, expected {n}",
            r.run_id,
            r.episodes()
        )));
    }
    Ok(n)
}

pub fn estimate_bayes_regret(records: &[RunRecord]) -> Result<BayesRegretEstimate> {
    let n = check_records(records)?;
    let mut mean_regret = Vec::with_capacity(n);
    let mut se_regret = Vec::with_capacity(n);
    let mut mean_cum_regret = Vec::with_capacity(n);
    let mut mean_per_step_return = Vec::with_capacity(n);
    let (mut cum, mut cum_ret) = (0.0, 0.0);
    for t in 0..n {
        let (m, se) = mean_and_se(records.iter().map(|r| r.regrets[t]));
        cum += m;
        cum_ret += records.iter().map(|r| r.returns[t]).sum::<f64>() / records.len() as f64;
        mean_regret.push(m);
        se_regret.push(se);
        mean_cum_regret.push(cum);
        mean_per_step_return.push(cum_ret / (t + 1) as f64);
    }
    let (_, se_cum_regret) = mean_and_se(records.iter().map(RunRecord::cum_regret));
    Ok(BayesRegretEstimate {
        runs: records.len(),
        mean_regret,
        se_regret,
        mean_cum_regret,
        mean_per_step_return,
        cum_regret: cum,
        se_cum_regret,
    })
}

/// `(1/n)·E[Σ_t f(A^t, w_t)]`, averaged across runs.
pub fn per_step_return(records: &[RunRecord]) -> Result<f64> {
    let n = check_records(records)?;
    Ok(records.iter().map(|r| r.cum_return() / n as f64).sum::<f64>() / records.len() as f64)
}

/// Worst-case bound on `Σ_t Σ_{e∈A^t} √(φ_eᵀΣ_tφ_e)` when `‖φ_e‖₂ ≤ 1`:
/// `Kλ√(d·n·ln(1 + nKλ²/(dσ²)) / ln(1 + λ²/σ²))`.
pub fn lemma_width_bound(lambda: f64, sigma: f64, d: usize, n: usize, k: usize) -> f64 {
    let (df, nf, kf) = (d as f64, n as f64, k as f64);
    let ratio = lambda * lambda / (sigma * sigma);
    kf * lambda * (df * nf * (1.0 + nf * kf * ratio / df).ln() / ratio.ln_1p()).sqrt()
}
