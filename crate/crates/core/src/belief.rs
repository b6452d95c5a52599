//! Gaussian belief over the coefficient vector, maintained by rank-1 Kalman
//! updates.
//!
//! The belief starts at `N(0, λ²I)`. Each observed pair `(φ, w)` applies
//!
//! ```text
//! u = Σφ,  s = φᵀΣφ + σ²
//! θ̄ ← θ̄ + u (w − φᵀθ̄) / s
//! Σ ← Σ − uuᵀ / s
//! ```
//!
//! which is the exact Bayesian posterior under Gaussian noise of scale `σ`.
//! Agents never invert `Σ`; [`information_form`] exists to cross-check the
//! sequential updates against the batch formula.

use nalgebra::{Cholesky, DMatrix, DVector, DVectorView};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{dot, Action, Feedback, GroundSetModel};

const JITTER_RETRIES: usize = 10;
const JITTER_SCALE: f64 = 1e-10;
const DIVISION_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    lambda: f64,
    sigma: f64,
}

impl GaussianBelief {
    /// The prior `θ̄ = 0`, `Σ = λ²I`.
    pub fn new(dim: usize, lambda: f64, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::parameter("belief dimension must be at least 1"));
        }
        check_scales(lambda, sigma)?;
        Ok(GaussianBelief {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * (lambda * lambda),
            lambda,
            sigma,
        })
    }

    /// Builds a belief from an explicit mean and covariance. The covariance
    /// must be square, finite and symmetric to 1e-10 relative asymmetry.
    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>, lambda: f64, sigma: f64) -> Result<Self> {
        check_scales(lambda, sigma)?;
        let d = mean.len();
        if d == 0 || cov.shape() != (d, d) {
            return Err(Error::input(format!(
                "covariance shape {:?} does not match mean length {d}",
                cov.shape()
            )));
        }
        if cov.iter().chain(mean.iter()).any(|x| !x.is_finite()) {
            return Err(Error::input("non-finite belief entries"));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        if (&cov - cov.transpose()).amax() > 1e-10 * scale {
            return Err(Error::input("covariance is not symmetric"));
        }
        Ok(GaussianBelief { mean, cov, lambda, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Returns the posterior after applying `feedback` item by item, in the
    /// order given. `self` is left untouched.
    pub fn kalman_update(&self, feedback: &Feedback, model: &GroundSetModel) -> Result<Self> {
        let mut next = self.clone();
        next.update_in_place(feedback, model)?;
        Ok(next)
    }

    pub fn update_in_place(&mut self, feedback: &Feedback, model: &GroundSetModel) -> Result<()> {
        if model.dim() != self.dim() {
            return Err(Error::input(format!(
                "model has d={}, belief has d={}",
                model.dim(),
                self.dim()
            )));
        }
        let mut u = DVector::zeros(self.dim());
        for &(e, w) in &feedback.observations {
            if e >= model.items() {
                return Err(Error::input(format!(
                    "feedback item {e} out of range for {} items",
                    model.items()
                )));
            }
            self.observe_into(model.row(e), w, &mut u)?;
        }
        Ok(())
    }

    /// One rank-1 step for a single `(φ, w)` pair.
    pub fn observe(&mut self, phi: &[f64], w: f64) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(Error::input(format!(
                "feature length {} does not match d={}",
                phi.len(),
                self.dim()
            )));
        }
        let mut u = DVector::zeros(self.dim());
        self.observe_into(phi, w, &mut u)
    }

    fn observe_into(&mut self, phi: &[f64], w: f64, u: &mut DVector<f64>) -> Result<()> {
        let d = self.dim();
        let phi = DVectorView::from_slice(phi, d);
        u.gemv(1.0, &self.cov, &phi, 0.0);
        let s = phi.dot(u) + self.sigma * self.sigma;
        if s < DIVISION_FLOOR {
            return Ok(());
        }
        let innovation = w - phi.dot(&self.mean);
        self.mean.axpy(innovation / s, u, 1.0);

        // Σ −= wwᵀ with w = u/√s. w_i·w_j == w_j·w_i in floating point, so
        // the update keeps Σ exactly symmetric.
        let scale = s.sqrt().recip();
        let w: Vec<f64> = u.iter().map(|x| x * scale).collect();
        for (j, col) in self.cov.as_mut_slice().chunks_exact_mut(d).enumerate() {
            let wj = w[j];
            for (c, wi) in col.iter_mut().zip(&w) {
                *c -= wi * wj;
            }
        }

        let floor = -(JITTER_RETRIES as f64) * JITTER_SCALE * self.cov.trace().abs() / d as f64;
        for i in 0..d {
            let v = self.cov[(i, i)];
            if !v.is_finite() || v < floor {
                return Err(Error::numerical(format!(
                    "covariance lost positive definiteness (diagonal {i} = {v:e})"
                )));
            }
        }
        if !self.mean.iter().all(|x| x.is_finite()) {
            return Err(Error::numerical("posterior mean is not finite"));
        }
        Ok(())
    }

    /// Lower Cholesky factor of `Σ`. On failure adds `1e-10·trace(Σ)/d` to
    /// the diagonal and retries, up to ten times.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if let Some(ch) = Cholesky::new(self.cov.clone()) {
            return Ok(ch.l());
        }
        let eps = JITTER_SCALE * self.cov.trace() / d as f64;
        if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
            return Err(Error::numerical("covariance has non-positive trace"));
        }
        let mut jittered = self.cov.clone();
        for _ in 0..JITTER_RETRIES {
            for i in 0..d {
                jittered[(i, i)] += eps;
            }
            if let Some(ch) = Cholesky::new(jittered.clone()) {
                return Ok(ch.l());
            }
        }
        Err(Error::numerical(format!(
            "Cholesky factorization failed after {JITTER_RETRIES} jitter attempts"
        )))
    }

    /// One draw `θ ~ N(θ̄, Σ)`.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let l = self.cholesky_factor()?;
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut theta = self.mean.clone();
        theta.gemv(1.0, &l, &z, 1.0);
        Ok(theta)
    }

    /// Quadratic form `φᵀΣφ`.
    pub fn quadratic_form(&self, phi: &[f64]) -> f64 {
        let d = self.dim();
        self.cov
            .as_slice()
            .chunks_exact(d)
            .zip(phi)
            .map(|(col, &pj)| dot(col, phi) * pj)
            .sum()
    }

    /// `√(φᵀΣφ)`, the posterior standard deviation of `⟨φ, θ⟩`.
    pub fn confidence_width(&self, phi: &[f64]) -> f64 {
        self.quadratic_form(phi).max(0.0).sqrt()
    }

    /// `Σ_{e∈A} √(φ_eᵀΣφ_e)`.
    pub fn width_sum(&self, action: &Action, model: &GroundSetModel) -> f64 {
        action
            .items
            .iter()
            .map(|&e| self.confidence_width(model.row(e)))
            .sum()
    }
}

fn check_scales(lambda: f64, sigma: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::parameter(format!("lambda must be positive, got {lambda}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::parameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Every `(φ, w)` pair observed so far, across episodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationHistory {
    entries: Vec<(Vec<f64>, f64)>,
}

impl ObservationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, phi: Vec<f64>, w: f64) {
        self.entries.push((phi, w));
    }

    pub fn record(&mut self, feedback: &Feedback, model: &GroundSetModel) {
        for &(e, w) in &feedback.observations {
            self.push(model.row(e).to_vec(), w);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.entries.iter().map(|(p, w)| (p.as_slice(), *w))
    }
}

/// Batch posterior in information form:
/// `Σ⁻¹ = I/λ² + Σφφᵀ/σ²` and `Σ⁻¹θ̄ = Σφw/σ²`.
pub fn information_form(
    dim: usize,
    lambda: f64,
    sigma: f64,
    history: &ObservationHistory,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_scales(lambda, sigma)?;
    let mut precision = DMatrix::identity(dim, dim) / (lambda * lambda);
    let mut vector = DVector::zeros(dim);
    let inv_s2 = 1.0 / (sigma * sigma);
    for (phi, w) in history.iter() {
        if phi.len() != dim {
            return Err(Error::input("history feature length does not match dimension"));
        }
        let phi = DVectorView::from_slice(phi, dim);
        precision.ger(inv_s2, &phi, &phi, 1.0);
        vector.axpy(w * inv_s2, &phi, 1.0);
    }
    Ok((precision, vector))
}
