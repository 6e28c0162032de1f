use std::path::PathBuf;

use alcrowd_core::simulator::io::write_curve;
use alcrowd_core::simulator::{
    run_experiment, summarize_strategies, ExperimentConfig, LearnerSpec, MetricKind,
};
use alcrowd_core::strategies::StrategyKind;
use anyhow::Result;

use super::report::series_report;
use super::train::parse_metric;
use crate::io::{load_config, print_json, write_atomic, write_json};
use crate::required;

#[derive(clap::Args)]
pub struct Args {
    /// JSON file with ExperimentConfig fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; every split, seed set and model seed derives from it
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    seed_size: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Comma-separated: random, least_confident, entropy, vote_entropy, kl_divergence
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<StrategyKind>>,
    /// Comma-separated learners; a committee is `lr+rf+svm` or `committee`
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<LearnerSpec>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_parser = parse_metric)]
    metric: Option<MetricKind>,
    #[arg(long)]
    fixed_split: Option<bool>,
    #[arg(long)]
    target_fraction: Option<f64>,
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: ExperimentConfig = load_config(args.config.as_deref())?;
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { cfg.$f = v; } )* };
    }
    set!(train_size, test_size, seed_size, batch_size, strategies, learners, repeats, metric, fixed_split, target_fraction);
    cfg.master_seed = args.seed;
    if let Some(d) = args.dataset {
        cfg.dataset = Some(d);
    }
    let out_dir = required(args.out_dir, "--out-dir")?;
    // arity and size checks before any data is touched
    cfg.validate()?;
    let dataset = required(cfg.dataset.clone(), "--dataset")?;

    let docs = super::read_dataset(&dataset)?;
    let result = run_experiment(&cfg, &docs)?;
    let reports = summarize_strategies(&result.curve, cfg.metric, cfg.target_fraction)?;
    let series = series_report(&result.summary, &reports);

    write_atomic(&out_dir.join("curve.csv"), |w| Ok(write_curve(w, &result.curve)?))?;
    write_json(
        &out_dir.join("summary.json"),
        &serde_json::json!({
            "config": cfg,
            "committee_evaluation": "majority vote of members",
            "series": series,
        }),
    )?;
    print_json(&reports)
}
