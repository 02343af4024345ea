//! `attribute`: erasure attribution scores for every (document, gold label)
//! pair in a split.

use anyhow::Result;
use causal_attn::analysis::{erasure_attribution, write_attribution_csv, AttributionVector};
use causal_attn::corpus::Document;

use super::{
    create_file, finish_file, init_threads, load_bundle, maybe_oracle, prepare_out_dir,
    read_dataset, require_path,
};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    init_threads(cfg);
    let out = prepare_out_dir(cfg)?;
    let model_path = require_path(&cfg.model, "model")?;
    let data_path = require_path(&cfg.data, "data")?;

    let bundle = load_bundle(model_path)?;
    let data = read_dataset(data_path, Some(&bundle.meta.label_space), "attribute")?;
    let oracle = maybe_oracle(cfg)?;
    let pipeline = bundle.pipeline(oracle.as_ref());
    let predict = pipeline.prob_predictor(&bundle.params);

    // The inner erasure loop already fans out across positions, so the scan
    // over documents stays sequential and ordered.
    let mut vectors: Vec<(usize, AttributionVector)> = Vec::new();
    let mut unlabeled = 0usize;
    for (i, doc) in data.documents.iter().enumerate() {
        if doc.labels.is_empty() {
            unlabeled += 1;
            continue;
        }
        for &label in &doc.labels {
            vectors.push((i, erasure_attribution(&predict, doc, label)?));
        }
    }

    let items: Vec<(&Document, &AttributionVector)> =
        vectors.iter().map(|(i, v)| (&data.documents[*i], v)).collect();
    let csv_path = out.join("attribution.csv");
    let mut csv = create_file(&csv_path)?;
    write_attribution_csv(&items, &mut csv)?;
    finish_file(csv)?;

    println!(
        "{} attribution vectors over {} labeled documents ({} without labels skipped); scores at {}",
        items.len(),
        data.len() - unlabeled,
        unlabeled,
        csv_path.display()
    );
    Ok(())
}
