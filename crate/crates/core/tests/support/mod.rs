#![allow(dead_code)]

//! Property checks shared by the integration tests and the acceptance
//! runner. Each returns a one-line summary on success.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use semibandit::belief::{information_form, GaussianBelief, ObservationHistory};
use semibandit::harness::{check_bounds, ExperimentConfig};
use semibandit::model::{total_weight, validate_action, Action, FamilySpec, Feedback, GroundSetModel};
use semibandit::oracles::{brute_force_oracle, ExactOracle, GammaApproximate, GridStructure, Oracle, PartitionSpec};
use semibandit::rng::stream_rng;
use semibandit::SimRng;

pub type Check = Result<String, String>;

fn normal(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

fn normal_vec(rng: &mut SimRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

/// Σ symmetric, factorizable without jitter, and every probe's `φᵀΣφ`
/// no larger than before.
pub struct PdTracker {
    probes: Vec<Vec<f64>>,
    last: Vec<f64>,
    pub steps: usize,
}

impl PdTracker {
    pub fn new(belief: &GaussianBelief, probes: Vec<Vec<f64>>) -> Self {
        let last = probes.iter().map(|p| belief.quadratic_form(p)).collect();
        PdTracker { probes, last, steps: 0 }
    }

    pub fn random(belief: &GaussianBelief, count: usize, rng: &mut SimRng) -> Self {
        let probes = (0..count).map(|_| normal_vec(rng, belief.dim())).collect();
        Self::new(belief, probes)
    }

    pub fn check(&mut self, belief: &GaussianBelief) -> Result<(), String> {
        let cov = belief.covariance();
        if cov != &cov.transpose() {
            return Err(format!("Σ not symmetric after {} updates", self.steps));
        }
        if Cholesky::new(cov.clone()).is_none() {
            return Err(format!("Σ not positive definite after {} updates", self.steps));
        }
        for (p, last) in self.probes.iter().zip(self.last.iter_mut()) {
            let q = belief.quadratic_form(p);
            if q > *last * (1.0 + 1e-9) + 1e-300 {
                return Err(format!("φᵀΣφ grew from {last:e} to {q:e} after {} updates", self.steps));
            }
            *last = q;
        }
        self.steps += 1;
        Ok(())
    }
}

/// Sequential rank-1 updates agree with the batch information form.
pub fn kalman_matches_information_form(histories: usize, seed: u64) -> Check {
    let mut rng = stream_rng(seed, 0);
    let mut worst: f64 = 0.0;
    let mut pd_steps = 0;
    for h in 0..histories {
        let d = rng.random_range(1..=10);
        let len = rng.random_range(0..=200);
        let lambda = [1.0, 3.0, 10.0][rng.random_range(0..3)];
        let sigma = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let theta = normal_vec(&mut rng, d);
        let mut belief = GaussianBelief::new(d, lambda, sigma).map_err(|e| e.to_string())?;
        let mut tracker = PdTracker::random(&belief, 100, &mut rng);
        let mut history = ObservationHistory::new();
        for _ in 0..len {
            let phi = normal_vec(&mut rng, d);
            let w = phi.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() + sigma * normal(&mut rng);
            belief.observe(&phi, w).map_err(|e| e.to_string())?;
            tracker.check(&belief)?;
            history.push(phi, w);
        }
        pd_steps += tracker.steps;

        let (precision, vector) = information_form(d, lambda, sigma, &history).map_err(|e| e.to_string())?;
        let chol = Cholesky::new(precision).ok_or("precision matrix not positive definite")?;
        let cov = chol.inverse();
        let mean = chol.solve(&vector);
        let cov_err = max_abs(&(belief.covariance() - &cov)) / max_abs(&cov);
        let mean_scale = mean.amax().max(cov.amax().sqrt());
        let mean_err = (belief.mean() - &mean).amax() / mean_scale;
        let err = cov_err.max(mean_err);
        worst = worst.max(err);
        if err > 1e-8 {
            return Err(format!("history {h} (d={d}, len={len}): relative error {err:e}"));
        }
    }
    Ok(format!("{histories} histories, worst relative error {worst:.2e}, {pd_steps} PD checks"))
}

/// Permuting the observations of one episode leaves the posterior unchanged.
pub fn update_order_invariance(trials: usize, seed: u64) -> Check {
    let mut rng = stream_rng(seed, 1);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let d = rng.random_range(1..=8);
        let l = rng.random_range(2..=20);
        let model = GroundSetModel::new(l, d, normal_vec(&mut rng, l * d)).map_err(|e| e.to_string())?;
        let mut prior = GaussianBelief::new(d, 10.0, 1.0).map_err(|e| e.to_string())?;
        // some earlier episodes so the prior is not isotropic
        for _ in 0..rng.random_range(0..5) {
            let e = rng.random_range(0..l);
            prior.observe(model.row(e), normal(&mut rng)).map_err(|e| e.to_string())?;
        }
        let mut items: Vec<usize> = (0..l).collect();
        items.shuffle(&mut rng);
        items.truncate(rng.random_range(1..=l));
        let weights = normal_vec(&mut rng, l);
        let action = Action::new(items.clone());
        let a = prior
            .kalman_update(&Feedback::reveal(&action, &weights).map_err(|e| e.to_string())?, &model)
            .map_err(|e| e.to_string())?;
        items.shuffle(&mut rng);
        let permuted = Action::new(items);
        let b = prior
            .kalman_update(&Feedback::reveal(&permuted, &weights).map_err(|e| e.to_string())?, &model)
            .map_err(|e| e.to_string())?;
        let cov_err = max_abs(&(a.covariance() - b.covariance())) / max_abs(a.covariance());
        let mean_err = (a.mean() - b.mean()).amax() / a.mean().amax().max(a.covariance().amax().sqrt());
        let err = cov_err.max(mean_err);
        worst = worst.max(err);
        if err > 1e-10 {
            return Err(format!("trial {t}: relative difference {err:e}"));
        }
        let mut tracker = PdTracker::random(&prior, 10, &mut rng);
        tracker.check(&a)?;
        tracker = PdTracker::random(&prior, 10, &mut rng);
        tracker.check(&b)?;
    }
    Ok(format!("{trials} episodes, worst relative difference {worst:.2e}"))
}

fn compare_with_brute_force(family: &FamilySpec, weights: &[f64]) -> Result<(), String> {
    let members = family.enumerate(1 << 20).map_err(|e| e.to_string())?;
    let best = brute_force_oracle(&members, weights).map_err(|e| e.to_string())?;
    let got = family.solve(weights).map_err(|e| e.to_string())?;
    if !validate_action(&got, family) {
        return Err(format!("oracle returned infeasible {:?}", got.items));
    }
    if family.solve(weights).map_err(|e| e.to_string())? != got {
        return Err("oracle is not deterministic".into());
    }
    let (v_got, v_best) = (
        total_weight(&got, weights).unwrap(),
        total_weight(&best, weights).unwrap(),
    );
    if (v_got - v_best).abs() > 1e-12 * (1.0 + v_best.abs()) {
        return Err(format!("oracle value {v_got} below brute force {v_best}"));
    }
    Ok(())
}

/// Grid, top-K and partition oracles against exhaustive enumeration.
pub fn oracles_match_brute_force(draws: usize, seed: u64) -> Check {
    let mut rng = stream_rng(seed, 2);
    let mut instances = 0;
    for m in 1..=3 {
        let grid = FamilySpec::Grid(GridStructure::new(m).unwrap());
        for _ in 0..draws {
            let w = normal_vec(&mut rng, grid.ground_size());
            compare_with_brute_force(&grid, &w).map_err(|e| format!("grid m={m}: {e}"))?;
            instances += 1;
        }
    }
    for _ in 0..draws {
        let l = rng.random_range(1..=12);
        let k = rng.random_range(1..=l);
        let fam = FamilySpec::TopK { items: l, k };
        let w = normal_vec(&mut rng, l);
        compare_with_brute_force(&fam, &w).map_err(|e| format!("top-{k} of {l}: {e}"))?;
        instances += 1;
    }
    for _ in 0..draws {
        let l = rng.random_range(2..=12);
        let groups: Vec<usize> = (0..l).map(|_| rng.random_range(0..2)).collect();
        let sizes = [0, 1].map(|g| groups.iter().filter(|&&x| x == g).count());
        let quotas = vec![rng.random_range(0..=sizes[0]), rng.random_range(0..=sizes[1])];
        let spec = PartitionSpec::new(groups, quotas.clone()).map_err(|e| e.to_string())?;
        let fam = FamilySpec::Partition(spec);
        let w = normal_vec(&mut rng, l);
        compare_with_brute_force(&fam, &w).map_err(|e| format!("partition {quotas:?} of {l}: {e}"))?;
        instances += 1;
    }
    Ok(format!("{instances} instances agree with brute force"))
}

/// Width ledger never exceeds the worst-case bound on norm-bounded runs.
pub fn width_ledger_within_bound(runs: usize, seed: u64) -> Check {
    let cfg = ExperimentConfig {
        m: 2,
        d: 3,
        n: 50,
        runs,
        normalize_features: true,
        base_seed: seed,
        ..ExperimentConfig::default()
    };
    let report = check_bounds(&cfg).map_err(|e| e.to_string())?;
    let tightest = report
        .rows
        .iter()
        .map(|(_, ledger, bound)| ledger / bound)
        .fold(0.0, f64::max);
    if report.violations > 0 {
        return Err(format!("{} of {} runs exceed the bound", report.violations, report.rows.len()));
    }
    Ok(format!("{} runs, largest ledger/bound ratio {tightest:.3}", report.rows.len()))
}

/// `f(A, w) ≥ (1−γ)·max f` for every call of the γ-approximate wrapper.
pub fn gamma_wrapper_guarantee(calls: usize, seed: u64) -> Check {
    let mut rng = stream_rng(seed, 3);
    let families = [
        FamilySpec::Grid(GridStructure::new(3).unwrap()),
        FamilySpec::TopK { items: 12, k: 4 },
        FamilySpec::Partition(PartitionSpec::new((0..10).map(|e| e % 2).collect(), vec![2, 3]).unwrap()),
    ];
    let mut swapped = 0;
    for (i, fam) in families.iter().enumerate() {
        for (j, gamma) in [0.05, 0.2, 0.5].into_iter().enumerate() {
            let mut oracle = GammaApproximate::new(ExactOracle::new(fam.clone()), gamma, stream_rng(seed, (10 * i + j) as u64))
                .map_err(|e| e.to_string())?;
            let share = calls / 9 + usize::from(3 * i + j < calls % 9);
            for _ in 0..share {
                let w: Vec<f64> = (0..fam.ground_size()).map(|_| rng.random::<f64>()).collect();
                let exact = fam.solve(&w).unwrap();
                let got = oracle.solve(&w).map_err(|e| e.to_string())?;
                if !validate_action(&got, fam) {
                    return Err(format!("γ={gamma}: infeasible action {:?}", got.items));
                }
                let opt = total_weight(&exact, &w).unwrap();
                let val = total_weight(&got, &w).unwrap();
                if val < (1.0 - gamma) * opt - 1e-12 {
                    return Err(format!("γ={gamma}: value {val} below (1-γ)·{opt}"));
                }
                swapped += usize::from(!got.same_set(&exact));
            }
        }
    }
    Ok(format!("{calls} calls, {swapped} returned a non-optimal action"))
}

/// Runs a CombLinTS agent on a small grid and checks Σ after every update.
pub fn belief_stays_pd_during_play(runs: usize, seed: u64) -> Check {
    use semibandit::agents::{Agent, LinearAgent};
    use semibandit::environments::{generate_coherent_gaussian, FeatureScheme};
    use std::sync::Arc;

    let mut steps = 0;
    for r in 0..runs {
        let mut env_rng = stream_rng(seed.wrapping_add(r as u64), 0);
        let truth = generate_coherent_gaussian(3, 6, 10.0, 1.0, FeatureScheme::Gaussian, false, &mut env_rng)
            .map_err(|e| e.to_string())?;
        let oracle = Box::new(ExactOracle::new(truth.family().clone()));
        let mut agent = LinearAgent::comblints(Arc::clone(truth.model()), oracle, 10.0, 1.0).map_err(|e| e.to_string())?;
        let mut tracker = PdTracker::random(agent.belief(), 20, &mut env_rng);
        let mut agent_rng = stream_rng(seed.wrapping_add(r as u64), 2);
        for _ in 0..40 {
            let action = agent.select(&mut agent_rng).map_err(|e| e.to_string())?;
            let w = truth.sample_weights(&mut env_rng);
            let fb = Feedback::reveal(&action, &w).unwrap();
            agent.update(&action, &fb).map_err(|e| e.to_string())?;
            tracker.check(agent.belief())?;
        }
        steps += tracker.steps;
    }
    Ok(format!("{runs} runs, {steps} episode-level PD and monotonicity checks"))
}

pub fn relative_eq(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol * a.amax().max(b.amax()).max(f64::MIN_POSITIVE)
}
