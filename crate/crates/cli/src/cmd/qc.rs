use std::collections::HashMap;
use std::path::PathBuf;

use alcrowd_core::crowd_qc::{
    default_cutoffs, read_assignments, read_gold, read_responses, run_qc, QcOptions,
    ValidationPolicy,
};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::io::{load_config, open, print_json, write_csv, write_json};
use crate::required;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON-lines assignment specs
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// JSON-lines worker responses
    #[arg(long)]
    responses: Option<PathBuf>,
    /// JSON-lines expert labels `{"id", "label"}`
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Responses faster than this many seconds are invalid
    #[arg(long)]
    min_duration_s: Option<f64>,
    #[arg(long)]
    require_controls: Option<bool>,
    /// Worker counts for the subset reliability estimate
    #[arg(long, value_delimiter = ',')]
    worker_counts: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep cutoffs in seconds
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    assignments: Option<PathBuf>,
    responses: Option<PathBuf>,
    gold: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    policy: ValidationPolicy,
    worker_counts: Vec<usize>,
    trials: usize,
    seed: u64,
    cutoffs: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        let o = QcOptions::default();
        Config {
            assignments: None,
            responses: None,
            gold: None,
            out_dir: None,
            policy: o.policy,
            worker_counts: o.worker_counts,
            trials: o.trials,
            seed: o.seed,
            cutoffs: default_cutoffs(),
        }
    }
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    cutoff_s: f64,
    direction: &'a str,
    n_retained: usize,
    n_workers: usize,
    mean_kappa: Option<f64>,
}

#[derive(Serialize)]
struct GoldRow<'a> {
    id: &'a str,
    label: u8,
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Config = load_config(args.config.as_deref())?;
    let assignments_path = required(args.assignments.or(cfg.assignments), "--assignments")?;
    let responses_path = required(args.responses.or(cfg.responses), "--responses")?;
    let out_dir = required(args.out_dir.or(cfg.out_dir), "--out-dir")?;
    let opts = QcOptions {
        policy: ValidationPolicy {
            min_duration_s: args.min_duration_s.unwrap_or(cfg.policy.min_duration_s),
            require_controls: args.require_controls.unwrap_or(cfg.policy.require_controls),
        },
        worker_counts: args.worker_counts.unwrap_or(cfg.worker_counts),
        trials: args.trials.unwrap_or(cfg.trials),
        seed: args.seed.unwrap_or(cfg.seed),
        cutoffs: args.cutoffs.unwrap_or(cfg.cutoffs),
    };

    let assignments = read_assignments(open(&assignments_path)?)
        .with_context(|| format!("reading {}", assignments_path.display()))?;
    let responses = read_responses(open(&responses_path)?)
        .with_context(|| format!("reading {}", responses_path.display()))?;
    let expert = match args.gold.or(cfg.gold) {
        Some(p) => read_gold(open(&p)?).with_context(|| format!("reading {}", p.display()))?,
        None => HashMap::new(),
    };

    let report = run_qc(&assignments, &responses, &expert, &opts)?;
    let sweep: Vec<SweepCsvRow> = report
        .sweep
        .iter()
        .map(|r| SweepCsvRow {
            cutoff_s: r.cutoff_s,
            direction: r.direction.as_str(),
            n_retained: r.n_retained,
            n_workers: r.n_workers,
            mean_kappa: r.mean_kappa,
        })
        .collect();
    let gold: Vec<GoldRow> = report
        .consensus
        .iter()
        .filter_map(|c| c.gold.map(|label| GoldRow { id: &c.id, label }))
        .collect();

    write_json(&out_dir.join("qc_report.json"), &report)?;
    write_csv(&out_dir.join("sweep.csv"), &sweep)?;
    crate::io::write_atomic(&out_dir.join("gold_labels.jsonl"), |w| {
        for g in &gold {
            serde_json::to_writer(&mut *w, g)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    print_json(&serde_json::json!({
        "n_responses": report.n_responses,
        "n_valid": report.n_valid,
        "verdict_counts": report.verdict_counts,
        "n_items": report.consensus.len(),
        "n_unresolved": report.n_unresolved,
        "n_gold": gold.len(),
        "reliability": report.reliability,
    }))
}
