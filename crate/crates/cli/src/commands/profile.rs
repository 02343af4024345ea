//! `profile`: pool each document's top-k% crucial tokens (by erasure score)
//! and cross them with training-corpus frequencies.

use anyhow::Result;
use causal_attn::analysis::{
    erasure_attribution, frequency_profile, top_k_percent, write_frequency_csv,
};

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
    let data = read_dataset(data_path, Some(&bundle.meta.label_space), "profile")?;
    let oracle = maybe_oracle(cfg)?;
    let pipeline = bundle.pipeline(oracle.as_ref());
    let predict = pipeline.prob_predictor(&bundle.params);

    let mut crucial: Vec<(String, usize)> = Vec::new();
    let mut unlabeled = 0usize;
    for doc in &data.documents {
        if doc.labels.is_empty() {
            unlabeled += 1;
            continue;
        }
        for &label in &doc.labels {
            let attr = erasure_attribution(&predict, doc, label)?;
            crucial.extend(top_k_percent(doc, &attr, cfg.top_k_percent)?);
        }
    }

    let report = frequency_profile(&crucial, &bundle.meta.vocab);
    let csv_path = out.join("frequency.csv");
    let mut csv = create_file(&csv_path)?;
    write_frequency_csv(&report, &mut csv)?;
    finish_file(csv)?;

    println!(
        "top {:.1}% pooled {} tokens into {} distinct words ({} unlabeled documents skipped); table at {}",
        cfg.top_k_percent,
        crucial.len(),
        report.rows.len(),
        unlabeled,
        csv_path.display()
    );
    Ok(())
}
