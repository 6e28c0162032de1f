use std::path::PathBuf;

use alcrowd_core::corpus::write_documents;
use alcrowd_core::simulator::{generate_synthetic_corpus, SynthSpec};
use anyhow::Result;

use crate::io::{load_config, print_json, write_atomic};
use crate::required;

#[derive(clap::Args)]
pub struct Args {
    /// JSON file with SynthSpec fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    n_docs: Option<usize>,
    #[arg(long)]
    class_vocab: Option<usize>,
    #[arg(long)]
    background_vocab: Option<usize>,
    #[arg(long)]
    balance: Option<f64>,
    #[arg(long)]
    signal: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    doc_len_min: Option<usize>,
    #[arg(long)]
    doc_len_max: Option<usize>,
    #[arg(long)]
    zipf_exponent: Option<f64>,
}

pub fn run(args: Args) -> Result<()> {
    let output = required(args.output, "--output")?;
    let mut spec: SynthSpec = load_config(args.config.as_deref())?;
    spec.seed = args.seed;
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { spec.$f = v; } )* };
    }
    set!(n_docs, class_vocab, background_vocab, balance, signal, noise, doc_len_min, doc_len_max, zipf_exponent);

    let docs = generate_synthetic_corpus(&spec)?;
    write_atomic(&output, |w| Ok(write_documents(w, &docs, false)?))?;
    print_json(&spec)
}
