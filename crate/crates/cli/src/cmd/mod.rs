pub mod preprocess;
pub mod qc;
pub mod report;
pub mod simulate;
pub mod synth;
pub mod train;

use std::path::Path;

use alcrowd_core::corpus::{read_documents, Document};
use anyhow::{Context, Result};

pub fn read_dataset(path: &Path) -> Result<Vec<Document>> {
    let docs = read_documents(crate::io::open(path)?)
        .with_context(|| format!("reading {}", path.display()))?;
    log::info!("read {} documents from {}", docs.len(), path.display());
    Ok(docs)
}
