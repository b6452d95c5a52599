//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 1 8`.

mod support;

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use semibandit::harness::{
    episodes_csv, run_experiment, sweep, AgentKind, ExperimentConfig, ExperimentKind, ResultTable, SweepParam,
};

type Outcome = Result<String, String>;

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).max(4)
}

fn default_case() -> ExperimentConfig {
    ExperimentConfig {
        parallelism: threads(),
        ..ExperimentConfig::default()
    }
}

fn run(cfg: &ExperimentConfig) -> Result<ResultTable, String> {
    run_experiment(cfg).map_err(|e| e.to_string())
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol * target
}

struct State {
    default_table: Option<ResultTable>,
}

impl State {
    fn default_table(&mut self) -> Result<&ResultTable, String> {
        if self.default_table.is_none() {
            self.default_table = Some(run(&default_case())?);
        }
        Ok(self.default_table.as_ref().unwrap())
    }
}

fn default_regret(state: &mut State) -> Outcome {
    let t = state.default_table()?;
    let r = t.estimate.cum_regret;
    let msg = format!("R(150) = {r:.4e} ± {:.2e}, target 1.56e4 ± 20%", t.estimate.se_cum_regret);
    if within(r, 1.56e4, 0.20) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn large_scale(state: &mut State) -> Outcome {
    let cfg = ExperimentConfig {
        m: 250,
        runs: 50,
        parallelism: threads(),
        ..ExperimentConfig::default()
    };
    let t = run(&cfg)?;
    let r = t.estimate.cum_regret;
    let base = state.default_table()?.estimate.cum_regret;
    let ratio = r / base;
    let msg = format!(
        "R(150) = {r:.4e} ± {:.2e}, target 6.56e4 ± 25%; ratio to default {ratio:.2}, target [3.4, 5.0]",
        t.estimate.se_cum_regret
    );
    if within(r, 6.56e4, 0.25) && (3.4..=5.0).contains(&ratio) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn linear_in_m(_: &mut State) -> Outcome {
    let cfg = ExperimentConfig {
        runs: 100,
        parallelism: threads(),
        ..ExperimentConfig::default()
    };
    let ms = [10.0, 20.0, 30.0, 40.0, 50.0];
    let result = sweep(&cfg, SweepParam::M, &ms).map_err(|e| e.to_string())?;
    let ys: Vec<f64> = result.summary.iter().map(|r| r.cum_regret).collect();
    let r2 = r_squared(&ms, &ys);
    let curve = ys.iter().map(|y| format!("{y:.3e}")).collect::<Vec<_>>().join(", ");
    let msg = format!("R(150) over m=10..50: [{curve}], R² = {r2:.4}, target ≥ 0.9");
    if r2 >= 0.9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn robustness(_: &mut State) -> Outcome {
    let cfg = ExperimentConfig {
        m: 10,
        d: 50,
        runs: 100,
        parallelism: threads(),
        ..ExperimentConfig::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (param, values) in [(SweepParam::Sigma, [0.1, 1.0, 10.0]), (SweepParam::Lambda, [1.0, 10.0, 100.0])] {
        let result = sweep(&cfg, param, &values).map_err(|e| e.to_string())?;
        let best = result.summary.iter().map(|r| r.cum_regret).fold(f64::INFINITY, f64::min);
        let worst = result.summary.iter().map(|r| r.cum_regret).fold(0.0, f64::max);
        ok &= worst <= 2.0 * best;
        let cells = result
            .summary
            .iter()
            .map(|r| format!("{}={:.3e}", param.name(), r.cum_regret))
            .collect::<Vec<_>>()
            .join(" ");
        parts.push(format!("{cells} (worst/best {:.2})", worst / best));
    }
    let msg = format!("{}; target worst/best ≤ 2", parts.join("; "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bernoulli_agnostic(_: &mut State) -> Outcome {
    let base = ExperimentConfig {
        kind: ExperimentKind::BernoulliPartition,
        items: 2000,
        k: 100,
        quotas: Some(vec![50, 50]),
        d: 10,
        runs: 20,
        n: 1000,
        lambda: 1.0,
        sigma: 0.5,
        parallelism: threads(),
        ..ExperimentConfig::default()
    };
    let lin = run(&base)?;
    let ucb = run(&ExperimentConfig { agent: AgentKind::Combucb1, ..base.clone() })?;
    let ts = run(&ExperimentConfig { agent: AgentKind::Combts, ..base.clone() })?;
    let opt = lin.mean_optimal_value();
    let early = lin.per_step_return_at(100) / opt;
    let (l, u, t) = (lin.per_step_return_at(1000), ucb.per_step_return_at(1000), ts.per_step_return_at(1000));
    let msg = format!(
        "CombLinTS at t=100: {:.1}% of optimum (target ≥ 70%); per-step return at t=1000: \
         CombLinTS {l:.3}, CombUCB1 {u:.3}, CombTS {t:.3}",
        100.0 * early
    );
    if early >= 0.7 && l > u && l > t {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn property_suite(_: &mut State) -> Outcome {
    let checks: [(&str, Outcome); 6] = [
        ("a", support::kalman_matches_information_form(200, 101)),
        ("b", support::update_order_invariance(200, 102)),
        ("c", support::oracles_match_brute_force(100, 103)),
        ("d", support::width_ledger_within_bound(50, 104)),
        ("e", support::gamma_wrapper_guarantee(10_000, 105)),
        ("f", support::belief_stays_pd_during_play(20, 106)),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (tag, outcome) in checks {
        match outcome {
            Ok(s) => lines.push(format!("({tag}) {s}")),
            Err(s) => {
                ok = false;
                lines.push(format!("({tag}) FAILED {s}"));
            }
        }
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ucb_sublinear(_: &mut State) -> Outcome {
    let (n, k) = (300usize, 20usize);
    let cfg = ExperimentConfig {
        agent: AgentKind::Comblinucb,
        m: 10,
        d: 50,
        n,
        runs: 100,
        delta: Some(1.0 / (n * k) as f64),
        parallelism: threads(),
        ..ExperimentConfig::default()
    };
    let c = cfg.resolve_c(50, k).map_err(|e| e.to_string())?.unwrap();
    let t = run(&cfg)?;
    let r = &t.estimate.mean_regret;
    let early = r[..30].iter().sum::<f64>() / 30.0;
    let late = r[270..].iter().sum::<f64>() / 30.0;
    let msg = format!("c = {c:.2}; mean regret episodes 1-30: {early:.3}, 271-300: {late:.3} (target ratio < 0.5, got {:.3})", late / early);
    if late < 0.5 * early {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cli_episodes(cfg: &ExperimentConfig, threads: usize, dir: &std::path::Path) -> Result<String, String> {
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_json()).map_err(|e| e.to_string())?;
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_semibandit"))
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .args(["--threads", &threads.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    fs::read_to_string(out.join("episodes.csv")).map_err(|e| e.to_string())
}

fn determinism(state: &mut State) -> Outcome {
    let in_process = episodes_csv(state.default_table()?);
    let tmp = std::env::temp_dir().join(format!("semibandit-acceptance-{}", std::process::id()));
    let cfg = ExperimentConfig::default();
    let eight = cli_episodes(&cfg, 8, &tmp.join("t8"))?;
    let one = cli_episodes(&cfg, 1, &tmp.join("t1"))?;
    let _ = fs::remove_dir_all(&tmp);
    let msg = format!(
        "episodes.csv ({} bytes): in-process threads={} vs CLI threads=8 {}, vs CLI threads=1 {}",
        in_process.len(),
        threads(),
        if in_process == eight { "identical" } else { "DIFFERENT" },
        if in_process == one { "identical" } else { "DIFFERENT" },
    );
    if in_process == eight && in_process == one {
        Ok(msg)
    } else {
        Err(msg)
    }
}

type Criterion = (u32, &'static str, fn(&mut State) -> Outcome);

const CRITERIA: [Criterion; 8] = [
    (1, "default-case Bayes regret", default_regret),
    (2, "large-scale grid", large_scale),
    (3, "linear scaling in m", linear_in_m),
    (4, "robustness to sigma and lambda", robustness),
    (5, "agnostic Bernoulli targeting", bernoulli_agnostic),
    (6, "property suite", property_suite),
    (7, "CombLinUCB sublinear regret", ucb_sublinear),
    (8, "determinism", determinism),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut state = State { default_table: None };
    let mut failures = 0;
    println!("running acceptance criteria");
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check(&mut state);
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{id}] {name} ({secs:.0}s): {detail}");
    }
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
