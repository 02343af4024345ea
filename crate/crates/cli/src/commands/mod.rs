//! One module per subcommand, plus the shared plumbing they all use.

pub mod attack;
pub mod attribute;
pub mod evaluate;
pub mod extract_graph;
pub mod gen_scm;
pub mod grad_check;
pub mod profile;
pub mod train;

use anyhow::{anyhow, Context, Result};
use causal_attn::corpus::{load_dataset, load_oracle, Dataset, Oracle};
use causal_attn::encoder::EncoderParams;
use causal_attn::pipeline::{DocPipeline, ModelBundle};
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;

/// Creates the output directory and drops the resolved-config echo into it.
pub fn prepare_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    std::fs::write(cfg.out_dir.join("resolved.cfg"), cfg.resolved_text())?;
    Ok(cfg.out_dir.clone())
}

/// Applies the `threads` key to rayon's global pool. Safe to call more than
/// once — later calls keep the first pool.
pub fn init_threads(cfg: &RunConfig) {
    if cfg.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
}

pub fn require_path<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| anyhow!("missing {what}: pass --{what} or set {what} = <path> in the config"))
}

pub fn read_dataset(path: &Path, label_space: Option<&[String]>, split: &str) -> Result<Dataset> {
    let file =
        File::open(path).with_context(|| format!("cannot open dataset {}", path.display()))?;
    Ok(load_dataset(BufReader::new(file), label_space, split)
        .with_context(|| path.display().to_string())?)
}

pub fn read_oracle(path: &Path) -> Result<Oracle> {
    let file =
        File::open(path).with_context(|| format!("cannot open oracle {}", path.display()))?;
    Ok(load_oracle(BufReader::new(file)).with_context(|| path.display().to_string())?)
}

/// Loads the oracle named in the config when present.
pub fn maybe_oracle(cfg: &RunConfig) -> Result<Option<Oracle>> {
    cfg.oracle.as_deref().map(read_oracle).transpose()
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let file =
        File::open(path).with_context(|| format!("cannot open model {}", path.display()))?;
    Ok(ModelBundle::load(BufReader::new(file)).with_context(|| path.display().to_string())?)
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

pub fn finish_file(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// Thresholded predictions for every document, in dataset order.
pub fn predictions_for(
    dataset: &Dataset,
    pipeline: &DocPipeline<'_>,
    params: &EncoderParams,
    threshold: f64,
) -> Result<Vec<BTreeSet<usize>>> {
    let preds: causal_attn::Result<Vec<_>> = dataset
        .documents
        .par_iter()
        .map(|doc| pipeline.predict_set(params, doc, threshold))
        .collect();
    Ok(preds?)
}

/// Turns a document id into a safe file stem.
pub fn sanitize_id(id: &str) -> String {
    id.chars().map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}
