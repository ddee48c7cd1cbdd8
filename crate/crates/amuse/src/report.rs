//! Run directories and comparison tables.
//!
//! `simulate` stores one `<algorithm>.json` report per run plus a per-day
//! `<algorithm>_days.csv`. `report` reads every report in the directory
//! and writes `per_user.csv`, `cdf_utility.csv`, `cdf_spend.csv`,
//! `cdf_offload.csv`, `groups.csv` and `summary.json`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use amuse_core::sim::{compare, Algorithm, CdfPoint, Comparison, SimReport, UserGroup};
use serde::Serialize;

use crate::error::{IoError, Result};
use crate::sig6;

pub const SUMMARY: &str = "summary.json";

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Writes `report` into `dir` and returns the report path.
pub fn save_run(dir: &Path, report: &SimReport) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let path = dir.join(format!("{}.json", report.algorithm));
    let file = File::create(&path).map_err(|e| IoError::io(&path, e))?;
    serde_json::to_writer_pretty(&file, report)?;
    (&file).write_all(b"\n").map_err(|e| IoError::io(&path, e))?;

    let days = dir.join(format!("{}_days.csv", report.algorithm));
    let mut w = create(&days)?;
    w.write_record([
        "user", "day", "utility", "spend", "offloaded", "volume", "demand", "budget", "overshoot", "forced", "wifi_accuracy",
    ])?;
    for u in &report.users {
        for d in &u.days {
            w.write_record([
                u.user.clone(),
                d.day.to_string(),
                sig6(d.utility),
                sig6(d.spend),
                sig6(d.offloaded),
                sig6(d.volume),
                sig6(d.demand),
                sig6(d.budget),
                u8::from(d.overshoot).to_string(),
                d.forced.to_string(),
                opt(d.wifi_accuracy),
            ])?;
        }
    }
    finish(w, &days)?;
    Ok(path)
}

/// Every `*.json` report in `dir` except the summary, in algorithm order.
pub fn load_runs(dir: &Path) -> Result<Vec<SimReport>> {
    let mut reports = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| IoError::io(dir, e))? {
        let path = entry.map_err(|e| IoError::io(dir, e))?.path();
        if path.extension().is_none_or(|x| x != "json") || path.file_name().is_some_and(|n| n == SUMMARY) {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| IoError::io(&path, e))?;
        let report: SimReport =
            serde_json::from_str(&text).map_err(|e| IoError::InFile { path: path.clone(), inner: Box::new(e.into()) })?;
        reports.push(report);
    }
    if reports.is_empty() {
        return Err(IoError::Trace(format!("{} holds no simulation reports", dir.display())));
    }
    reports.sort_by_key(|r| Algorithm::ALL.iter().position(|&a| a == r.algorithm));
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config_hash: Option<String>,
    pub users: usize,
    pub mean_utility: f64,
    pub mean_spend: f64,
    pub mean_offloaded: f64,
    pub overshoot_days: usize,
    pub forced: usize,
    pub wifi_accuracy: Option<f64>,
    /// Mean per-user ratio against the reference; `None` for the reference.
    pub mean_utility_ratio: Option<f64>,
    pub mean_spend_ratio: Option<f64>,
    pub mean_offload_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub reference: Algorithm,
    pub algorithms: Vec<AlgorithmSummary>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summarize(reports: &[SimReport], comparison: &Comparison) -> Summary {
    let algorithms = reports
        .iter()
        .map(|r| {
            let ratios = comparison.baselines.iter().find(|b| b.algorithm == r.algorithm && r.algorithm != comparison.reference);
            let accuracy: Vec<f64> = r.users.iter().filter_map(|u| u.wifi_accuracy()).collect();
            AlgorithmSummary {
                algorithm: r.algorithm,
                seed: r.seed,
                config_hash: r.config_hash.clone(),
                users: r.users.len(),
                mean_utility: r.mean_utility(),
                mean_spend: r.mean_spend(),
                mean_offloaded: r.mean_offloaded(),
                overshoot_days: r.users.iter().map(|u| u.overshoot_days).sum(),
                forced: r.users.iter().map(|u| u.forced).sum(),
                wifi_accuracy: mean_of(accuracy.into_iter().map(Some)),
                mean_utility_ratio: ratios.and_then(|b| mean_of(b.ratios.iter().map(|x| x.utility))),
                mean_spend_ratio: ratios.and_then(|b| mean_of(b.ratios.iter().map(|x| x.spend))),
                mean_offload_ratio: ratios.and_then(|b| mean_of(b.ratios.iter().map(|x| x.offloaded))),
            }
        })
        .collect();
    Summary { reference: comparison.reference, algorithms }
}

/// Compares the reports and writes every table into `dir`; returns the paths written.
pub fn write_tables(dir: &Path, reports: &[SimReport]) -> Result<Vec<PathBuf>> {
    let comparison = compare(reports)?;
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join("per_user.csv");
    let mut w = create(&path)?;
    w.write_record([
        "algorithm", "user", "group", "monthly_budget", "utility", "spend", "offloaded", "volume", "demand", "overshoot_days",
        "forced", "wifi_accuracy", "utility_ratio", "spend_ratio", "offload_ratio",
    ])?;
    let reference = reports.iter().find(|r| r.algorithm == comparison.reference).expect("reference is one of the reports");
    let groups: Vec<(String, UserGroup)> = comparison.baselines[0].ratios.iter().map(|r| (r.user.clone(), r.group)).collect();
    let group_of = |user: &str| groups.iter().find(|(u, _)| u == user).map(|g| g.1).expect("user sets match");
    for r in reports {
        let baseline = comparison.baselines.iter().find(|b| b.algorithm == r.algorithm && !std::ptr::eq(r, reference));
        for u in &r.users {
            let ratio = baseline.and_then(|b| b.ratios.iter().find(|x| x.user == u.user));
            let (ur, sr, or) = match ratio {
                Some(x) => (x.utility, x.spend, x.offloaded),
                None => (Some(1.0), Some(1.0), Some(1.0)),
            };
            w.write_record([
                r.algorithm.to_string(),
                u.user.clone(),
                group_of(&u.user).name().to_owned(),
                sig6(u.monthly_budget),
                sig6(u.utility),
                sig6(u.spend),
                sig6(u.offloaded),
                sig6(u.volume),
                sig6(u.demand),
                u.overshoot_days.to_string(),
                u.forced.to_string(),
                opt(u.wifi_accuracy()),
                opt(ur),
                opt(sr),
                opt(or),
            ])?;
        }
    }
    finish(w, &path)?;
    written.push(path);

    type Column = fn(&amuse_core::sim::AlgorithmComparison) -> &[CdfPoint];
    let columns: [(&str, Column); 3] =
        [("cdf_utility.csv", |b| &b.cdf_utility), ("cdf_spend.csv", |b| &b.cdf_spend), ("cdf_offload.csv", |b| &b.cdf_offload)];
    for (name, column) in columns {
        let path = dir.join(name);
        let mut w = create(&path)?;
        w.write_record(["algorithm", "ratio", "fraction"])?;
        for b in &comparison.baselines {
            for p in column(b) {
                w.write_record([b.algorithm.to_string(), sig6(p.value), sig6(p.fraction)])?;
            }
        }
        finish(w, &path)?;
        written.push(path);
    }

    let path = dir.join("groups.csv");
    let mut w = create(&path)?;
    w.write_record(["algorithm", "group", "users", "utility", "spend", "offloaded"])?;
    for g in &comparison.group_means {
        w.write_record([
            g.algorithm.to_string(),
            g.group.name().to_owned(),
            g.users.to_string(),
            sig6(g.utility),
            sig6(g.spend),
            sig6(g.offloaded),
        ])?;
    }
    finish(w, &path)?;
    written.push(path);

    let path = dir.join(SUMMARY);
    let file = File::create(&path).map_err(|e| IoError::io(&path, e))?;
    serde_json::to_writer_pretty(&file, &summarize(reports, &comparison))?;
    (&file).write_all(b"\n").map_err(|e| IoError::io(&path, e))?;
    written.push(path);
    Ok(written)
}
