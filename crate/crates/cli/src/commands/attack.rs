//! `attack`: run the perturbation suite against a trained model and write
//! per-kind consistency and success rates.

use anyhow::Result;
use causal_attn::attacks::{attack_suite, write_detail_jsonl, write_report_csv, SiteSelection};

use super::{
    create_file, finish_file, init_threads, load_bundle, maybe_oracle, prepare_out_dir,
    read_dataset, require_path,
};
use crate::config::{RunConfig, SiteMode};

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    init_threads(cfg);
    let out = prepare_out_dir(cfg)?;
    let model_path = require_path(&cfg.model, "model")?;
    let data_path = require_path(&cfg.data, "data")?;

    let bundle = load_bundle(model_path)?;
    let data = read_dataset(data_path, Some(&bundle.meta.label_space), "attack")?;
    let oracle = maybe_oracle(cfg)?;
    let pipeline = bundle.pipeline(oracle.as_ref());

    let selection = match cfg.attack_sites {
        SiteMode::All => SiteSelection::All,
        SiteMode::Sampled => {
            SiteSelection::Sampled { per_doc: cfg.attack_per_doc, seed: cfg.seed }
        }
    };
    let report = attack_suite(
        pipeline.set_predictor(&bundle.params, bundle.meta.threshold),
        &data,
        &cfg.attack_kinds,
        selection,
    )?;

    let mut csv = create_file(&out.join("attack_report.csv"))?;
    write_report_csv(&report, &mut csv)?;
    finish_file(csv)?;
    let mut detail = create_file(&out.join("attack_detail.jsonl"))?;
    write_detail_jsonl(&report, &mut detail)?;
    finish_file(detail)?;

    for k in &report.kinds {
        println!(
            "{:<18} sites {:>6}  CR {:>6}  SR {:>6}",
            k.kind.name(),
            k.n_sites,
            pct(k.cr),
            pct(k.sr)
        );
    }
    println!(
        "mean CR over applicable kinds: {}; reports at {}",
        pct(report.mean_cr()),
        out.display()
    );
    Ok(())
}
