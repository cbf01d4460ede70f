use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use safe_imdp::config::{ExperimentConfig, SeedsConfig};
use safe_imdp::explorer::{iterative_synthesis, Outcome, SynthesisResult};

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seeds: SeedsConfig,
    pub outcome: String,
    pub reason: Option<String>,
    pub iterations: usize,
    pub samples: usize,
    pub p_low: f64,
    pub p_high: f64,
    pub initial_uncertainty: f64,
    pub final_uncertainty: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config_sha256: String,
    software_version: &'static str,
    started: String,
    finished: String,
    artifacts: &'a [&'a str],
    runs: &'a [RunSummary],
}

pub fn config_hash(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

pub fn default_dir(root: &Path, config: &Path, raw: &[u8], kind: &str) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
    let stamp = Utc::now().format("%Y%m%dT%H%M%S%.3f");
    root.join(format!("{stem}-{kind}-{stamp}-{}", &config_hash(raw)[..8]))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub const RUN_ARTIFACTS: &[&str] = &[
    "config.toml",
    "iterations.csv",
    "timings.csv",
    "trajectory.csv",
    "policy.txt",
    "fsa.txt",
    "field.csv",
    "manifest.json",
];

/// Run one experiment and write all of its artifacts into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, raw: &[u8], dir: &Path) -> anyhow::Result<RunSummary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let started = now();
    let mut sys = cfg.ground_truth()?;
    let result = iterative_synthesis(cfg, &mut sys)?;
    let finished = now();

    fs::write(dir.join("config.toml"), raw)?;
    write_iterations(&result, &dir.join("iterations.csv"))?;
    write_timings(&result, &dir.join("timings.csv"))?;
    write_trajectory(&result, cfg.dim(), &dir.join("trajectory.csv"))?;
    let policy = match &result.outcome {
        Outcome::Satisfied { policy } => policy.to_text(),
        other => format!("# no satisfying policy: {}\n", other.name()),
    };
    fs::write(dir.join("policy.txt"), policy)?;
    fs::write(dir.join("fsa.txt"), result.fsa.to_text())?;
    sys.field().write_csv(fs::File::create(dir.join("field.csv"))?)?;

    let summary = summarize(cfg.seeds, &result);
    let manifest = Manifest {
        config_sha256: config_hash(raw),
        software_version: env!("CARGO_PKG_VERSION"),
        started,
        finished,
        artifacts: RUN_ARTIFACTS,
        runs: std::slice::from_ref(&summary),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(summary)
}

pub fn write_batch_manifest(
    dir: &Path,
    raw: &[u8],
    started: String,
    runs: &[RunSummary],
) -> anyhow::Result<()> {
    let manifest = Manifest {
        config_sha256: config_hash(raw),
        software_version: env!("CARGO_PKG_VERSION"),
        started,
        finished: now(),
        artifacts: &["aggregate.csv", "seed-*/"],
        runs,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn batch_started() -> String {
    now()
}

fn summarize(seeds: SeedsConfig, r: &SynthesisResult) -> RunSummary {
    let last = r.reports.last();
    RunSummary {
        seeds,
        outcome: r.outcome.name().to_string(),
        reason: match &r.outcome {
            Outcome::BudgetExhausted { reason } => Some(reason.clone()),
            _ => None,
        },
        iterations: r.iterations(),
        samples: last.map_or(0, |l| l.samples),
        p_low: last.map_or(0.0, |l| l.p_low),
        p_high: last.map_or(0.0, |l| l.p_high),
        initial_uncertainty: r.initial_uncertainty(),
        final_uncertainty: r.final_uncertainty(),
        wall_seconds: r.wall_seconds(),
    }
}

fn write_iterations(r: &SynthesisResult, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "iteration",
        "samples",
        "p_low",
        "p_high",
        "uncertainty",
        "retained_states",
        "mec_states",
        "reach_probability",
        "satisfactions",
        "violations",
        "off_plan",
    ])?;
    for it in &r.reports {
        w.write_record([
            it.iteration.to_string(),
            it.samples.to_string(),
            it.p_low.to_string(),
            it.p_high.to_string(),
            it.uncertainty.to_string(),
            it.retained_states.to_string(),
            it.mec_states.to_string(),
            it.reach_probability.to_string(),
            it.satisfactions.to_string(),
            it.violations.to_string(),
            it.off_plan.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_timings(r: &SynthesisResult, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "wall_seconds"])?;
    for it in &r.reports {
        w.write_record([it.iteration.to_string(), it.wall_seconds.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_trajectory(r: &SynthesisResult, n: usize, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["iteration".to_string(), "step".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend(["region", "automaton", "action"].map(String::from));
    header.extend((1..=n).map(|i| format!("y_{i}")));
    header.push("saturated".into());
    w.write_record(&header)?;
    for row in &r.trajectory {
        let mut rec = vec![row.iteration.to_string(), row.step.to_string()];
        rec.extend(row.x.iter().map(f64::to_string));
        rec.extend([row.region, row.automaton, row.action].map(|v| v.to_string()));
        rec.extend(row.y.iter().map(f64::to_string));
        rec.push(row.saturated.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
