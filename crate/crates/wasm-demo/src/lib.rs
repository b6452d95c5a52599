//! Browser bindings for the semi-bandit simulator.
//!
//! Three operations, each taking primitives and returning JSON:
//! `simulate`, `grid_paths` and `ucb_scale`. The `*_json` functions hold
//! the logic and are plain Rust so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use semibandit::agents::recommended_c;
use semibandit::harness::{build_agent, build_truth, run_experiment, AgentKind, ExperimentConfig};
use semibandit::metrics::lemma_width_bound;
use semibandit::model::{total_weight, Feedback};
use semibandit::oracles::GridStructure;
use semibandit::rng::{run_seed, stream_rng, streams};

const MAX_M: usize = 40;
const MAX_D: usize = 200;
const MAX_WORK: usize = 40_000_000;

#[derive(Serialize)]
struct Curve {
    agent: &'static str,
    cum_regret: Vec<f64>,
    se_regret: Vec<f64>,
    per_step_return: Vec<f64>,
    final_regret: f64,
    final_se: f64,
}

fn parse_agent(name: &str) -> Result<AgentKind, String> {
    match name {
        "comblints" => Ok(AgentKind::Comblints),
        "comblinucb" => Ok(AgentKind::Comblinucb),
        "combucb1" => Ok(AgentKind::Combucb1),
        "combts" => Ok(AgentKind::Combts),
        other => Err(format!("unknown agent {other:?}")),
    }
}

fn check_size(m: usize, d: usize, n: usize, runs: usize) -> Result<(), String> {
    if m == 0 || m > MAX_M || d == 0 || d > MAX_D {
        return Err(format!("demo limits: 1 ≤ m ≤ {MAX_M}, 1 ≤ d ≤ {MAX_D}"));
    }
    // rough cost of the rank-1 updates, to keep the tab responsive
    if runs * n * 2 * m * d * d > MAX_WORK {
        return Err("too much work for the browser; lower runs, n, m or d".into());
    }
    Ok(())
}

/// Mean cumulative regret curve of `agent` on the longest-path problem.
#[allow(clippy::too_many_arguments)]
pub fn simulate_json(
    agent: &str,
    m: usize,
    d: usize,
    n: usize,
    runs: usize,
    lambda: f64,
    sigma: f64,
    seed: u64,
) -> Result<String, String> {
    check_size(m, d, n, runs)?;
    let agent = parse_agent(agent)?;
    let cfg = ExperimentConfig {
        agent,
        m,
        d,
        n,
        runs,
        lambda,
        sigma,
        base_seed: seed,
        delta: (agent == AgentKind::Comblinucb).then(|| 1.0 / (n * 2 * m) as f64),
        ..ExperimentConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let table = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let est = &table.estimate;
    let mut acc = 0.0;
    let se_regret = est
        .se_regret
        .iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect();
    let curve = Curve {
        agent: match agent {
            AgentKind::Comblints => "CombLinTS",
            AgentKind::Comblinucb => "CombLinUCB",
            AgentKind::Combucb1 => "CombUCB1",
            AgentKind::Combts => "CombTS",
        },
        cum_regret: est.mean_cum_regret.clone(),
        se_regret,
        per_step_return: est.mean_per_step_return.clone(),
        final_regret: est.cum_regret,
        final_se: est.se_cum_regret,
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Snapshot {
    episode: usize,
    /// Path as node coordinates `[row, col]`, corner to corner.
    chosen: Vec<[usize; 2]>,
    regret: f64,
}

#[derive(Serialize)]
struct GridPaths {
    m: usize,
    optimal: Vec<[usize; 2]>,
    optimal_value: f64,
    snapshots: Vec<Snapshot>,
}

fn nodes(grid: &GridStructure, items: &[usize]) -> Vec<[usize; 2]> {
    let mut out = vec![[0, 0]];
    for &e in items {
        let (_, (r, c)) = grid.endpoints(e);
        out.push([r, c]);
    }
    out
}

/// Plays one CombLinTS run and records the chosen path at `snapshots`
/// evenly spaced episodes, next to the optimal path.
pub fn grid_paths_json(m: usize, d: usize, n: usize, lambda: f64, sigma: f64, seed: u64, snapshots: usize) -> Result<String, String> {
    check_size(m, d, n, 1)?;
    let cfg = ExperimentConfig {
        m,
        d,
        n,
        runs: 1,
        lambda,
        sigma,
        base_seed: seed,
        ..ExperimentConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let err = |e: semibandit::Error| e.to_string();
    let run = run_seed(seed, 0);
    let truth = build_truth(&cfg, &mut stream_rng(run, streams::ENVIRONMENT)).map_err(err)?;
    let grid = GridStructure::new(m).map_err(err)?;
    let mut agent = build_agent(&cfg, truth.model().clone(), truth.family(), stream_rng(run, streams::ORACLE)).map_err(err)?;
    let a_star = truth.family().solve(truth.mean_weights()).map_err(err)?;
    let best = total_weight(&a_star, truth.mean_weights()).map_err(err)?;

    let every = (n / snapshots.max(1)).max(1);
    let mut weight_rng = stream_rng(run, streams::WEIGHTS);
    let mut agent_rng = stream_rng(run, streams::AGENT);
    let mut shots = Vec::new();
    for t in 1..=n {
        let action = agent.select(&mut agent_rng).map_err(err)?;
        let w = truth.sample_weights(&mut weight_rng);
        if t == 1 || t % every == 0 || t == n {
            shots.push(Snapshot {
                episode: t,
                chosen: nodes(&grid, &action.items),
                regret: best - total_weight(&action, truth.mean_weights()).map_err(err)?,
            });
        }
        let fb = Feedback::reveal(&action, &w).map_err(err)?;
        agent.update(&action, &fb).map_err(err)?;
    }
    let out = GridPaths {
        m,
        optimal: nodes(&grid, &a_star.items),
        optimal_value: best,
        snapshots: shots,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Scale {
    c: f64,
    width_bound: f64,
    k: usize,
}

/// CombLinUCB confidence scale and the worst-case width sum for an `m`-grid.
pub fn ucb_scale_json(m: usize, d: usize, n: usize, lambda: f64, sigma: f64, delta: f64) -> Result<String, String> {
    let k = GridStructure::new(m).map_err(|e| e.to_string())?.path_len();
    let s = lambda * (d as f64).sqrt();
    let c = recommended_c(lambda, sigma, d, n, k, delta, s).map_err(|e| e.to_string())?;
    let out = Scale {
        c,
        width_bound: lemma_width_bound(lambda, sigma, d, n, k),
        k,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate(agent: &str, m: usize, d: usize, n: usize, runs: usize, lambda: f64, sigma: f64, seed: u32) -> Result<String, JsValue> {
    simulate_json(agent, m, d, n, runs, lambda, sigma, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn grid_paths(m: usize, d: usize, n: usize, lambda: f64, sigma: f64, seed: u32, snapshots: usize) -> Result<String, JsValue> {
    grid_paths_json(m, d, n, lambda, sigma, seed as u64, snapshots).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn ucb_scale(m: usize, d: usize, n: usize, lambda: f64, sigma: f64, delta: f64) -> Result<String, JsValue> {
    ucb_scale_json(m, d, n, lambda, sigma, delta).map_err(|e| JsValue::from_str(&e))
}
