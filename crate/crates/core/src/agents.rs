//! Learning agents: CombLinTS and CombLinUCB (linear generalization through a
//! Gaussian belief), and the tabular baselines CombUCB1 and CombTS that
//! estimate each item's mean independently.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::belief::GaussianBelief;
use crate::error::{Error, Result};
use crate::model::{Action, Feedback, GroundSetModel};
use crate::oracles::Oracle;
use crate::SimRng;

/// What the interaction loop needs from a learner. Agents see features and
/// the semi-bandit feedback of their own actions, nothing else.
pub trait Agent: Send {
    fn select(&mut self, rng: &mut SimRng) -> Result<Action>;

    fn update(&mut self, action: &Action, feedback: &Feedback) -> Result<()>;

    /// `Σ_{e∈A} √(φ_eᵀΣ_tφ_e)` under the current belief; `None` for agents
    /// without one.
    fn width_sum(&self, _action: &Action) -> Option<f64> {
        None
    }

    fn name(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exploration {
    /// Sample `θ_t ~ N(θ̄_t, Σ_t)` and act greedily on `Φθ_t`.
    Thompson,
    /// Act greedily on `⟨φ_e, θ̄_t⟩ + c·√(φ_eᵀΣ_tφ_e)`.
    Ucb { c: f64 },
}

pub struct LinearAgent {
    belief: GaussianBelief,
    model: Arc<GroundSetModel>,
    oracle: Box<dyn Oracle>,
    exploration: Exploration,
}

impl LinearAgent {
    pub fn comblints(model: Arc<GroundSetModel>, oracle: Box<dyn Oracle>, lambda: f64, sigma: f64) -> Result<Self> {
        Self::new(model, oracle, lambda, sigma, Exploration::Thompson)
    }

    pub fn comblinucb(
        model: Arc<GroundSetModel>,
        oracle: Box<dyn Oracle>,
        lambda: f64,
        sigma: f64,
        c: f64,
    ) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::parameter(format!("confidence scale c must be positive, got {c}")));
        }
        Self::new(model, oracle, lambda, sigma, Exploration::Ucb { c })
    }

    fn new(
        model: Arc<GroundSetModel>,
        oracle: Box<dyn Oracle>,
        lambda: f64,
        sigma: f64,
        exploration: Exploration,
    ) -> Result<Self> {
        if oracle.family().ground_size() != model.items() {
            return Err(Error::input(format!(
                "oracle family covers {} items, model has {}",
                oracle.family().ground_size(),
                model.items()
            )));
        }
        let belief = GaussianBelief::new(model.dim(), lambda, sigma)?;
        Ok(LinearAgent {
            belief,
            model,
            oracle,
            exploration,
        })
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    /// Replaces the belief, e.g. to start from a converged posterior.
    pub fn set_belief(&mut self, belief: GaussianBelief) -> Result<()> {
        if belief.dim() != self.model.dim() {
            return Err(Error::input("belief dimension does not match the model"));
        }
        self.belief = belief;
        Ok(())
    }

    pub fn exploration(&self) -> Exploration {
        self.exploration
    }

    /// `Φθ_t` for one posterior draw.
    pub fn thompson_scores(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        let theta = self.belief.sample_coefficients(rng)?;
        Ok(self.model.scores(theta.as_slice()))
    }

    /// `ŵ_t(e) = ⟨φ_e, θ̄_t⟩ + c√(φ_eᵀΣ_tφ_e)`. `c = 0` is accepted here so
    /// the zero-bonus limit can be inspected.
    pub fn ucb_scores(&self, c: f64) -> Vec<f64> {
        let mean = self.belief.mean().as_slice();
        self.model
            .rows()
            .map(|phi| crate::model::dot(phi, mean) + c * self.belief.confidence_width(phi))
            .collect()
    }
}

impl Agent for LinearAgent {
    fn select(&mut self, rng: &mut SimRng) -> Result<Action> {
        let scores = match self.exploration {
            Exploration::Thompson => self.thompson_scores(rng)?,
            Exploration::Ucb { c } => self.ucb_scores(c),
        };
        self.oracle.solve(&scores)
    }

    fn update(&mut self, action: &Action, feedback: &Feedback) -> Result<()> {
        check_feedback(action, feedback)?;
        self.belief.update_in_place(feedback, &self.model)
    }

    fn width_sum(&self, action: &Action) -> Option<f64> {
        Some(self.belief.width_sum(action, &self.model))
    }

    fn name(&self) -> &'static str {
        match self.exploration {
            Exploration::Thompson => "comblints",
            Exploration::Ucb { .. } => "comblinucb",
        }
    }
}

fn check_feedback(action: &Action, feedback: &Feedback) -> Result<()> {
    if feedback.matches(action) {
        Ok(())
    } else {
        Err(Error::input("feedback does not match the chosen action"))
    }
}

/// CombUCB1: per-item empirical means with radius `√(1.5 ln t / T_e)`.
pub struct CombUcb1 {
    counts: Vec<u64>,
    means: Vec<f64>,
    episode: u64,
    oracle: Box<dyn Oracle>,
}

impl CombUcb1 {
    pub fn new(oracle: Box<dyn Oracle>) -> Self {
        let l = oracle.family().ground_size();
        CombUcb1 {
            counts: vec![0; l],
            means: vec![0.0; l],
            episode: 0,
            oracle,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// UCB vector for episode `t ≥ 1`. Unobserved items all receive one
    /// common score above every observed item's UCB.
    pub fn ucb_scores(&self, t: u64) -> Vec<f64> {
        let log_t = (t.max(1) as f64).ln();
        let mut scores: Vec<f64> = self
            .counts
            .iter()
            .zip(&self.means)
            .map(|(&n, &m)| if n == 0 { f64::NAN } else { ucb_index(m, n, log_t) })
            .collect();
        let top = scores.iter().copied().filter(|x| !x.is_nan()).fold(f64::NEG_INFINITY, f64::max);
        let surrogate = if top.is_finite() { top + 1.0 } else { 1.0 };
        for s in scores.iter_mut().filter(|s| s.is_nan()) {
            *s = surrogate;
        }
        scores
    }
}

/// `ŵ + √(1.5 ln t / T)`.
pub fn ucb_index(mean: f64, count: u64, log_t: f64) -> f64 {
    mean + (1.5 * log_t / count as f64).sqrt()
}

impl Agent for CombUcb1 {
    fn select(&mut self, _rng: &mut SimRng) -> Result<Action> {
        let scores = self.ucb_scores(self.episode + 1);
        self.oracle.solve(&scores)
    }

    fn update(&mut self, action: &Action, feedback: &Feedback) -> Result<()> {
        check_feedback(action, feedback)?;
        for &(e, w) in &feedback.observations {
            self.counts[e] += 1;
            self.means[e] += (w - self.means[e]) / self.counts[e] as f64;
        }
        self.episode += 1;
        Ok(())
    }

    fn name(&self) -> &'static str {
        "combucb1"
    }
}

/// CombTS: independent `Beta(α_e, β_e)` posteriors from a `Beta(1, 1)` prior.
pub struct CombTs {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    oracle: Box<dyn Oracle>,
}

impl CombTs {
    pub fn new(oracle: Box<dyn Oracle>) -> Self {
        let l = oracle.family().ground_size();
        CombTs {
            alpha: vec![1.0; l],
            beta: vec![1.0; l],
            oracle,
        }
    }

    pub fn params(&self, e: usize) -> (f64, f64) {
        (self.alpha[e], self.beta[e])
    }

    pub fn set_params(&mut self, e: usize, alpha: f64, beta: f64) -> Result<()> {
        if !(alpha > 0.0 && beta > 0.0) || e >= self.alpha.len() {
            return Err(Error::input(format!("invalid Beta({alpha}, {beta}) for item {e}")));
        }
        self.alpha[e] = alpha;
        self.beta[e] = beta;
        Ok(())
    }

    pub fn sample_scores<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| {
                Beta::new(a, b)
                    .map(|dist| dist.sample(rng))
                    .map_err(|err| Error::numerical(format!("Beta({a}, {b}): {err}")))
            })
            .collect()
    }
}

impl Agent for CombTs {
    fn select(&mut self, rng: &mut SimRng) -> Result<Action> {
        let scores = self.sample_scores(rng)?;
        self.oracle.solve(&scores)
    }

    /// `α += w`, `β += 1 − w`; exact conjugacy for `w ∈ {0, 1}`.
    fn update(&mut self, action: &Action, feedback: &Feedback) -> Result<()> {
        check_feedback(action, feedback)?;
        if let Some(&(e, w)) = feedback.observations.iter().find(|(_, w)| !(0.0..=1.0).contains(w)) {
            return Err(Error::input(format!("CombTS needs weights in [0, 1], item {e} has {w}")));
        }
        for &(e, w) in &feedback.observations {
            self.alpha[e] += w;
            self.beta[e] += 1.0 - w;
        }
        Ok(())
    }

    fn name(&self) -> &'static str {
        "combts"
    }
}

/// Smallest admissible CombLinUCB scale:
/// `(1/σ)√(d ln(1 + nKλ²/(dσ²)) + 2 ln(1/δ)) + S/λ`, where `S ≥ ‖θ*‖₂`.
pub fn recommended_c(
    lambda: f64,
    sigma: f64,
    d: usize,
    n: usize,
    k: usize,
    delta: f64,
    theta_norm_bound: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(lambda > 0.0 && sigma > 0.0) || d == 0 || n == 0 || k == 0 {
        return Err(Error::parameter("lambda, sigma, d, n and K must be positive"));
    }
    if theta_norm_bound.is_nan() || theta_norm_bound < 0.0 {
        return Err(Error::parameter("theta norm bound must be nonnegative"));
    }
    let (df, nk) = (d as f64, (n * k) as f64);
    let log_det = df * (1.0 + nk * lambda * lambda / (df * sigma * sigma)).ln();
    Ok((log_det + 2.0 * (1.0 / delta).ln()).sqrt() / sigma + theta_norm_bound / lambda)
}
