//! `evaluate`: score a trained model on a labeled split and dump the clean
//! classification metrics.

use anyhow::Result;
use causal_attn::analysis::{write_metrics_json, MetricsReport};

use super::{
    create_file, finish_file, init_threads, load_bundle, maybe_oracle, predictions_for,
    prepare_out_dir, read_dataset, require_path,
};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    init_threads(cfg);
    let out = prepare_out_dir(cfg)?;
    let model_path = require_path(&cfg.model, "model")?;
    let data_path = require_path(&cfg.data, "data")?;

    let bundle = load_bundle(model_path)?;
    let data = read_dataset(data_path, Some(&bundle.meta.label_space), "eval")?;
    let oracle = maybe_oracle(cfg)?;
    let pipeline = bundle.pipeline(oracle.as_ref());

    let preds = predictions_for(&data, &pipeline, &bundle.params, bundle.meta.threshold)?;
    let golds: Vec<_> = data.documents.iter().map(|d| d.labels.clone()).collect();
    let report = MetricsReport::from_predictions(&preds, &golds, bundle.meta.label_space.len())?;

    let metrics_path = out.join("metrics.json");
    let mut f = create_file(&metrics_path)?;
    write_metrics_json(&report, &mut f)?;
    finish_file(f)?;

    println!(
        "{} documents: micro-F1 {:.4}, macro-F1 {:.4}; report at {}",
        data.len(),
        report.micro_f1,
        report.macro_f1,
        metrics_path.display()
    );
    Ok(())
}
