use std::path::PathBuf;

use alcrowd_core::simulator::io::read_curve;
use alcrowd_core::simulator::{aggregate, summarize_strategies, MetricKind, SeriesSummary, StrategyReport};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use super::train::parse_metric;
use crate::io::{load_config, open, print_json, write_csv, write_json};
use crate::required;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Learning-curve CSV written by `simulate`
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_metric)]
    metric: Option<MetricKind>,
    #[arg(long)]
    target_fraction: Option<f64>,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    curve: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    metric: MetricKind,
    target_fraction: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            curve: None,
            out_dir: None,
            metric: MetricKind::F1Pos,
            target_fraction: 0.95,
        }
    }
}

#[derive(Serialize)]
pub struct SeriesReport<'a> {
    #[serde(flatten)]
    pub report: &'a StrategyReport,
    pub points: &'a [alcrowd_core::simulator::SummaryPoint],
}

pub fn series_report<'a>(
    summary: &'a [SeriesSummary],
    reports: &'a [StrategyReport],
) -> Vec<SeriesReport<'a>> {
    summary
        .iter()
        .zip(reports)
        .map(|(s, r)| SeriesReport {
            report: r,
            points: &s.points,
        })
        .collect()
}

#[derive(Serialize)]
struct PlotRow<'a> {
    strategy: &'a str,
    learner: String,
    iteration: usize,
    labels_used: usize,
    n_repeats: usize,
    mean: f64,
    ci_low: f64,
    ci_high: f64,
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Config = load_config(args.config.as_deref())?;
    let curve_path = required(args.curve.or(cfg.curve), "--curve")?;
    let out_dir = required(args.out_dir.or(cfg.out_dir), "--out-dir")?;
    let metric = args.metric.unwrap_or(cfg.metric);
    let fraction = args.target_fraction.unwrap_or(cfg.target_fraction);
    if !(fraction > 0.0 && fraction <= 1.0) {
        anyhow::bail!("target fraction must be in (0, 1], got {fraction}");
    }

    let curve = read_curve(open(&curve_path)?)
        .with_context(|| format!("reading {}", curve_path.display()))?;
    let summary = aggregate(&curve, metric)?;
    let reports = summarize_strategies(&curve, metric, fraction)?;
    let plot: Vec<PlotRow> = summary
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |p| PlotRow {
                strategy: s.strategy.as_str(),
                learner: s.learner.to_string(),
                iteration: p.iteration,
                labels_used: p.labels_used,
                n_repeats: p.n_repeats,
                mean: p.mean,
                ci_low: p.ci_low,
                ci_high: p.ci_high,
            })
        })
        .collect();

    write_json(
        &out_dir.join("report.json"),
        &serde_json::json!({
            "metric": metric,
            "target_fraction": fraction,
            "series": series_report(&summary, &reports),
        }),
    )?;
    write_csv(&out_dir.join("plot.csv"), &plot)?;
    print_json(&reports)
}
