use std::path::PathBuf;

use alcrowd_core::corpus::{dedupe_and_filter_with_stats, write_documents};
use anyhow::Result;
use serde::Deserialize;

use crate::io::{load_config, print_json, write_atomic};
use crate::required;

#[derive(clap::Args)]
pub struct Args {
    /// JSON config with `input` and `output` keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Raw JSON-lines dataset
    #[arg(long)]
    input: Option<PathBuf>,
    /// Normalized JSON-lines dataset to write
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Config = load_config(args.config.as_deref())?;
    let input = required(args.input.or(cfg.input), "--input")?;
    let output = required(args.output.or(cfg.output), "--output")?;

    let docs = super::read_dataset(&input)?;
    let (kept, stats) = dedupe_and_filter_with_stats(docs);
    write_atomic(&output, |w| Ok(write_documents(w, &kept, true)?))?;
    print_json(&stats)
}
