use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::agents::{Agent, CombTs, CombUcb1, LinearAgent};
use crate::environments::{
    generate_bernoulli_tabular, generate_coherent_gaussian, load_tabular_environment, BernoulliSpec,
    EnvironmentTruth, TabularFamily,
};
use crate::error::{Error, Result};
use crate::metrics::{
    estimate_bayes_regret, lemma_width_bound, scaled_realized_regret, BayesRegretEstimate,
    EnvironmentDigest, RunRecord,
};
use crate::model::{total_weight, Feedback, GroundSetModel};
use crate::oracles::{ExactOracle, GammaApproximate, Oracle};
use crate::rng::{run_seed, stream_rng, streams};
use crate::SimRng;

use super::config::{AgentKind, ExperimentConfig, ExperimentKind, SweepParam};

/// Builds the hidden truth of one run from the environment stream.
pub fn build_truth(config: &ExperimentConfig, rng: &mut SimRng) -> Result<EnvironmentTruth> {
    let tabular_family = || match (&config.quotas, config.kind) {
        (Some(q), _) => TabularFamily::Partition { quotas: q.clone() },
        (None, ExperimentKind::BernoulliPartition) => TabularFamily::Partition {
            quotas: vec![config.k / 2, config.k - config.k / 2],
        },
        (None, _) => TabularFamily::TopK { k: config.k },
    };
    let mut truth = match config.kind {
        ExperimentKind::LongestPath => {
            return generate_coherent_gaussian(
                config.m,
                config.d,
                config.lambda_true,
                config.sigma_true,
                config.feature_scheme,
                config.normalize_features,
                rng,
            )
        }
        ExperimentKind::BernoulliTopk | ExperimentKind::BernoulliPartition => {
            let spec = BernoulliSpec {
                items: config.items,
                dim: config.d,
                family: tabular_family(),
                high_mean: config.high_mean,
                low_mean: config.low_mean,
            };
            generate_bernoulli_tabular(&spec, rng)?
        }
        ExperimentKind::CsvEnv => {
            let path = config
                .env_path
                .as_ref()
                .ok_or_else(|| Error::Config("csv_env needs env_path".into()))?;
            load_tabular_environment(path, &tabular_family())?
        }
    };
    if config.normalize_features {
        truth.normalize_features();
    }
    Ok(truth)
}

/// Instantiates the configured learner. It receives the features and the
/// feasible family, never the mean weights.
pub fn build_agent(
    config: &ExperimentConfig,
    model: Arc<GroundSetModel>,
    family: &crate::model::FamilySpec,
    oracle_rng: SimRng,
) -> Result<Box<dyn Agent>> {
    let exact = ExactOracle::new(family.clone());
    let oracle: Box<dyn Oracle> = if config.gamma > 0.0 {
        Box::new(GammaApproximate::new(exact, config.gamma, oracle_rng)?)
    } else {
        Box::new(exact)
    };
    Ok(match config.agent {
        AgentKind::Comblints => Box::new(LinearAgent::comblints(model, oracle, config.lambda, config.sigma)?),
        AgentKind::Comblinucb => {
            let c = config
                .resolve_c(model.dim(), family.max_action_size())?
                .expect("resolve_c returns a scale for comblinucb");
            Box::new(LinearAgent::comblinucb(model, oracle, config.lambda, config.sigma, c)?)
        }
        AgentKind::Combucb1 => Box::new(CombUcb1::new(oracle)),
        AgentKind::Combts => Box::new(CombTs::new(oracle)),
    })
}

/// The episodic loop: select, draw `w_t`, reveal `w_t` on `A^t` only,
/// record, update. The comparator is the exact `A* = ORACLE(w̄)`.
pub fn play(
    truth: &EnvironmentTruth,
    agent: &mut dyn Agent,
    episodes: usize,
    gamma: f64,
    weight_rng: &mut SimRng,
    agent_rng: &mut SimRng,
) -> Result<RunRecord> {
    let family = truth.family();
    let a_star = family.solve(truth.mean_weights())?;
    let optimal_mean_value = total_weight(&a_star, truth.mean_weights())?;
    let mut regrets = Vec::with_capacity(episodes);
    let mut returns = Vec::with_capacity(episodes);
    let mut optimal_returns = Vec::with_capacity(episodes);
    let mut widths: Option<Vec<f64>> = None;
    for t in 1..=episodes {
        let ctx = |e: Error| e.with_context(format!("episode {t}"));
        let action = agent.select(agent_rng).map_err(ctx)?;
        if let Some(w) = agent.width_sum(&action) {
            widths.get_or_insert_with(|| Vec::with_capacity(episodes)).push(w);
        }
        let weights = truth.sample_weights(weight_rng);
        let feedback = Feedback::reveal(&action, &weights).map_err(ctx)?;
        regrets.push(scaled_realized_regret(&a_star, &action, &weights, gamma)?);
        returns.push(total_weight(&action, &weights)?);
        optimal_returns.push(total_weight(&a_star, &weights)?);
        agent.update(&action, &feedback).map_err(ctx)?;
    }
    let model = truth.model();
    Ok(RunRecord {
        run_id: 0,
        env: EnvironmentDigest {
            seed: 0,
            items: model.items(),
            dim: model.dim(),
            max_action_size: family.max_action_size(),
        },
        regrets,
        returns,
        optimal_returns,
        width_sums: widths,
        optimal_mean_value,
        width_bound: None,
    })
}

/// One Monte-Carlo run, a pure function of `(config, run_index)`.
pub fn run_single(config: &ExperimentConfig, run_index: usize) -> Result<RunRecord> {
    let seed = run_seed(config.base_seed, run_index as u64);
    let truth_seed = if config.fixed_truth {
        run_seed(config.base_seed, u64::MAX)
    } else {
        seed
    };
    let truth = build_truth(config, &mut stream_rng(truth_seed, streams::ENVIRONMENT))?;
    let model = truth.model().clone();
    let mut agent = build_agent(config, model.clone(), truth.family(), stream_rng(seed, streams::ORACLE))?;
    let mut record = play(
        &truth,
        agent.as_mut(),
        config.n,
        config.gamma,
        &mut stream_rng(seed, streams::WEIGHTS),
        &mut stream_rng(seed, streams::AGENT),
    )
    .map_err(|e| e.with_context(format!("run {run_index}")))?;
    record.run_id = run_index;
    record.env.seed = truth_seed;
    if config.agent.is_linear() && model.norm_bounded() {
        record.width_bound = Some(lemma_width_bound(
            config.lambda,
            config.sigma,
            model.dim(),
            config.n,
            truth.family().max_action_size(),
        ));
    }
    Ok(record)
}

/// All runs of `config`, in run order regardless of scheduling.
pub fn run_all(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if config.parallelism > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.parallelism)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            return pool.install(|| (0..config.runs).into_par_iter().map(|i| run_single(config, i)).collect());
        }
    }
    (0..config.runs).map(|i| run_single(config, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub cum_regret: f64,
    pub cum_return: f64,
    pub width_ledger_total: Option<f64>,
    pub width_bound: Option<f64>,
    pub optimal_mean_value: f64,
}

/// Aggregated output of one experiment.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub config: ExperimentConfig,
    pub estimate: BayesRegretEstimate,
    pub runs: Vec<RunSummary>,
    pub wall_clock_secs: f64,
}

impl ResultTable {
    pub fn from_records(config: ExperimentConfig, records: &[RunRecord], wall_clock_secs: f64) -> Result<Self> {
        let estimate = estimate_bayes_regret(records)?;
        let runs = records
            .iter()
            .map(|r| RunSummary {
                run_id: r.run_id,
                cum_regret: r.cum_regret(),
                cum_return: r.cum_return(),
                width_ledger_total: r.width_ledger_total(),
                width_bound: r.width_bound,
                optimal_mean_value: r.optimal_mean_value,
            })
            .collect();
        Ok(ResultTable {
            config,
            estimate,
            runs,
            wall_clock_secs,
        })
    }

    /// Mean over runs of `f(A*, w̄)`.
    pub fn mean_optimal_value(&self) -> f64 {
        self.runs.iter().map(|r| r.optimal_mean_value).sum::<f64>() / self.runs.len() as f64
    }

    /// Mean of `(1/t)Σ_{τ≤t} f(A^τ, w_τ)` at episode `t` (1-based).
    pub fn per_step_return_at(&self, t: usize) -> f64 {
        self.estimate.mean_per_step_return[t - 1]
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let start = Instant::now();
    let records = run_all(config)?;
    ResultTable::from_records(config.clone(), &records, start.elapsed().as_secs_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub cum_regret: f64,
    pub se_cum_regret: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub param: SweepParam,
    pub tables: Vec<(f64, ResultTable)>,
    pub summary: Vec<SweepRow>,
}

/// One experiment per value of `param`, everything else held fixed.
/// Results come back sorted by value.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::parameter("sweep needs at least one value"));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let configs = values
        .iter()
        .map(|&v| param.apply(config, v))
        .collect::<Result<Vec<_>>>()?;
    let mut tables = Vec::with_capacity(values.len());
    for (v, cfg) in values.iter().zip(configs) {
        tables.push((*v, run_experiment(&cfg)?));
    }
    let summary = tables
        .iter()
        .map(|(v, t)| SweepRow {
            value: *v,
            cum_regret: t.estimate.cum_regret,
            se_cum_regret: t.estimate.se_cum_regret,
        })
        .collect();
    Ok(SweepResult { param, tables, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub rows: Vec<(usize, f64, f64)>,
    pub violations: usize,
}

/// Runs `config` with norm-bounded features and compares each run's width
/// ledger against the worst-case bound.
pub fn check_bounds(config: &ExperimentConfig) -> Result<BoundReport> {
    if !config.agent.is_linear() {
        return Err(Error::Config(format!(
            "check-bounds needs a linear agent, got {:?}",
            config.agent
        )));
    }
    let mut cfg = config.clone();
    cfg.normalize_features = true;
    let records = run_all(&cfg)?;
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        let ledger = r
            .width_ledger_total()
            .ok_or_else(|| Error::numerical("linear agent produced no width ledger"))?;
        let bound = r
            .width_bound
            .ok_or_else(|| Error::numerical("normalized features were not norm-bounded"))?;
        rows.push((r.run_id, ledger, bound));
    }
    let violations = rows.iter().filter(|(_, l, b)| l > b).count();
    Ok(BoundReport { rows, violations })
}
