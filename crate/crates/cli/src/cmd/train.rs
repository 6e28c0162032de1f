use std::path::PathBuf;

use alcrowd_core::learners::LearnerKind;
use alcrowd_core::simulator::{run_benchmark, BenchmarkConfig, MetricKind};
use anyhow::Result;
use serde::Serialize;

use crate::io::{load_config, print_json, write_csv, write_json};
use crate::required;

#[derive(clap::Args)]
pub struct Args {
    /// JSON file with BenchmarkConfig fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<LearnerKind>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_parser = parse_metric)]
    metric: Option<MetricKind>,
    #[arg(long)]
    fixed_split: Option<bool>,
}

pub(crate) fn parse_metric(s: &str) -> Result<MetricKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown metric {s:?}; expected f1_pos or f1_weighted"))
}

#[derive(Serialize)]
struct CsvRow {
    learner: LearnerKind,
    precision: f64,
    recall: f64,
    f1_pos: f64,
    f1_weighted: f64,
    ci_low: f64,
    ci_high: f64,
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: BenchmarkConfig = load_config(args.config.as_deref())?;
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { cfg.$f = v; } )* };
    }
    set!(train_size, test_size, learners, repeats, metric, fixed_split);
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(d) = args.dataset {
        cfg.dataset = Some(d);
    }
    let dataset = required(cfg.dataset.clone(), "--dataset")?;
    let out_dir = required(args.out_dir, "--out-dir")?;
    cfg.validate()?;

    let docs = super::read_dataset(&dataset)?;
    let rows = run_benchmark(&cfg, &docs)?;
    let csv_rows: Vec<CsvRow> = rows
        .iter()
        .map(|r| CsvRow {
            learner: r.learner,
            precision: r.precision,
            recall: r.recall,
            f1_pos: r.f1_pos,
            f1_weighted: r.f1_weighted,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
        })
        .collect();
    write_json(
        &out_dir.join("benchmark.json"),
        &serde_json::json!({ "config": cfg, "learners": rows }),
    )?;
    write_csv(&out_dir.join("benchmark.csv"), &csv_rows)?;
    print_json(&csv_rows)
}
