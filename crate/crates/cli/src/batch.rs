use std::path::Path;

use safe_imdp::config::{ExperimentConfig, SeedsConfig};

use crate::artifacts::{self, RunSummary};

/// One aggregate row; `outcome` is "error" when the run itself failed.
#[derive(Debug, Clone)]
pub struct BatchRow {
    pub seed: u64,
    pub outcome: String,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

/// `1,4,7..=9,10..12` style lists. Ranges follow Rust syntax.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("bad seed `{s}`"));
        if let Some((a, b)) = part.split_once("..=") {
            seeds.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            seeds.extend(num(a)?..num(b)?);
        } else {
            seeds.push(num(part)?);
        }
    }
    if seeds.is_empty() {
        return Err("at least one seed is required".into());
    }
    Ok(seeds)
}

/// Seeds for the three random streams of one batch member.
pub fn seeds_for(seed: u64) -> SeedsConfig {
    SeedsConfig {
        ground_truth: seed,
        noise: seed.wrapping_add(1_000_000),
        exploration: seed.wrapping_add(2_000_000),
    }
}

pub fn run(
    cfg: &ExperimentConfig,
    raw: &[u8],
    seeds: &[u64],
    jobs: usize,
    dir: &Path,
) -> anyhow::Result<Vec<BatchRow>> {
    std::fs::create_dir_all(dir)?;
    let started = artifacts::batch_started();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let rows: Vec<BatchRow> = pool.install(|| {
        use rayon::prelude::*;
        seeds
            .par_iter()
            .map(|&seed| {
                let member = cfg.with_seeds(seeds_for(seed));
                let out = dir.join(format!("seed-{seed}"));
                let run = std::panic::catch_unwind(|| artifacts::run_to_dir(&member, raw, &out));
                match run {
                    Ok(Ok(s)) => BatchRow {
                        seed,
                        outcome: s.outcome.clone(),
                        summary: Some(s),
                        error: None,
                    },
                    Ok(Err(e)) => failed(seed, format!("{e:#}")),
                    Err(_) => failed(seed, "run panicked".into()),
                }
            })
            .collect()
    });
    for r in &rows {
        if let Some(e) = &r.error {
            log::error!("seed {}: {e}", r.seed);
        }
    }
    write_aggregate(&rows, &dir.join("aggregate.csv"))?;
    let summaries: Vec<RunSummary> = rows.iter().filter_map(|r| r.summary.clone()).collect();
    artifacts::write_batch_manifest(dir, raw, started, &summaries)?;
    Ok(rows)
}

fn failed(seed: u64, error: String) -> BatchRow {
    BatchRow {
        seed,
        outcome: "error".into(),
        summary: None,
        error: Some(error),
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[k] } else { (s[k - 1] + s[k]) / 2.0 })
}

const HEADER: [&str; 10] = [
    "seed",
    "outcome",
    "iterations",
    "samples",
    "p_low",
    "p_high",
    "initial_uncertainty",
    "final_uncertainty",
    "wall_seconds",
    "note",
];

fn write_aggregate(rows: &[BatchRow], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for r in rows {
        let rec: Vec<String> = match &r.summary {
            Some(s) => vec![
                r.seed.to_string(),
                s.outcome.clone(),
                s.iterations.to_string(),
                s.samples.to_string(),
                s.p_low.to_string(),
                s.p_high.to_string(),
                s.initial_uncertainty.to_string(),
                s.final_uncertainty.to_string(),
                s.wall_seconds.to_string(),
                s.reason.clone().unwrap_or_default(),
            ],
            None => {
                let mut v = vec![r.seed.to_string(), "error".into()];
                v.extend(std::iter::repeat_n(String::new(), 7));
                v.push(r.error.clone().unwrap_or_default());
                v
            }
        };
        w.write_record(&rec)?;
    }
    // Iteration statistics cover satisfied runs only; the rest cover every
    // run that completed.
    let done: Vec<&RunSummary> = rows.iter().filter_map(|r| r.summary.as_ref()).collect();
    let sat: Vec<f64> = done
        .iter()
        .filter(|s| s.outcome == "satisfied")
        .map(|s| s.iterations as f64)
        .collect();
    let col = |f: fn(&RunSummary) -> f64| done.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let columns = [
        sat,
        col(|s| s.samples as f64),
        col(|s| s.p_low),
        col(|s| s.p_high),
        col(|s| s.initial_uncertainty),
        col(|s| s.final_uncertainty),
        col(|s| s.wall_seconds),
    ];
    let note = format!(
        "{} of {} satisfied",
        done.iter().filter(|s| s.outcome == "satisfied").count(),
        rows.len()
    );
    for (name, stat) in [("mean", mean as fn(&[f64]) -> Option<f64>), ("median", median)] {
        let mut rec = vec![name.to_string(), String::new()];
        rec.extend(columns.iter().map(|c| stat(c).map(|v| v.to_string()).unwrap_or_default()));
        rec.push(note.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
