//! CSV/JSON serialization of experiment results.
//!
//! Files are written to a temporary sibling and renamed into place, so a
//! reader never observes a half-written file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};

use super::runner::{ResultTable, SweepResult};

pub const EPISODES_FILE: &str = "episodes.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const META_FILE: &str = "meta.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// `episode,mean_regret,se_regret,mean_cum_regret,mean_per_step_return`.
pub fn episodes_csv(table: &ResultTable) -> String {
    let est = &table.estimate;
    let mut out = String::from("episode,mean_regret,se_regret,mean_cum_regret,mean_per_step_return\n");
    for t in 0..est.mean_regret.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t + 1,
            format_float(est.mean_regret[t]),
            format_float(est.se_regret[t]),
            format_float(est.mean_cum_regret[t]),
            format_float(est.mean_per_step_return[t]),
        ));
    }
    out
}

/// `run_id,cum_regret,cum_return,width_ledger_total,width_bound`; the bound
/// column is empty when the features are not norm-bounded.
pub fn runs_csv(table: &ResultTable) -> String {
    let mut out = String::from("run_id,cum_regret,cum_return,width_ledger_total,width_bound\n");
    for r in &table.runs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.run_id,
            format_float(r.cum_regret),
            format_float(r.cum_return),
            format_opt(r.width_ledger_total),
            format_opt(r.width_bound),
        ));
    }
    out
}

pub fn summary_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("value,cum_regret,se_cum_regret\n");
    for row in &sweep.summary {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(row.value),
            format_float(row.cum_regret),
            format_float(row.se_cum_regret)
        ));
    }
    out
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes `episodes.csv`, `runs.csv`, `config.json` and `meta.json` into `dir`.
pub fn emit_results(table: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = json!({
        "runs": table.estimate.runs,
        "episodes": table.estimate.mean_regret.len(),
        "cum_regret": table.estimate.cum_regret,
        "se_cum_regret": table.estimate.se_cum_regret,
        "wall_clock_secs": table.wall_clock_secs,
    });
    let files = [
        (EPISODES_FILE, episodes_csv(table)),
        (RUNS_FILE, runs_csv(table)),
        (CONFIG_FILE, table.config.to_json()),
        (META_FILE, serde_json::to_string_pretty(&meta).expect("meta serializes")),
    ];
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        write_atomic(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// One subdirectory `<param>_<value>` per swept value plus `summary.csv`.
pub fn emit_sweep(sweep: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (value, table) in &sweep.tables {
        let sub = dir.join(format!("{}_{}", sweep.param.name(), value));
        written.extend(emit_results(table, &sub)?);
    }
    let path = dir.join(SUMMARY_FILE);
    write_atomic(&path, &summary_csv(sweep))?;
    written.push(path);
    Ok(written)
}
