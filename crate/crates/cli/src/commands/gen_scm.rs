//! `gen-scm`: synthesize the benchmark with known causal structure.

use anyhow::Result;
use causal_attn::corpus::{generate_scm_dataset, save_dataset, save_oracle, Dataset};

use super::{create_file, finish_file, prepare_out_dir};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let out = prepare_out_dir(cfg)?;
    let data = generate_scm_dataset(&cfg.scm_config())?;

    let splits: [(&str, &Dataset); 4] = [
        ("train", &data.train),
        ("dev", &data.dev),
        ("iid_test", &data.iid_test),
        ("ood_test", &data.ood_test),
    ];
    for (name, split) in splits {
        let mut w = create_file(&out.join(format!("{name}.jsonl")))?;
        save_dataset(split, &mut w)?;
        finish_file(w)?;
        println!("{name}: {} docs", split.len());
    }

    let mut w = create_file(&out.join("oracle.jsonl"))?;
    save_oracle(&data.oracle, &mut w)?;
    finish_file(w)?;

    let mut w = create_file(&out.join("pools.json"))?;
    serde_json::to_writer_pretty(&mut w, &data.pools)?;
    finish_file(w)?;

    println!(
        "label space: {} classes; oracle covers {} docs; outputs in {}",
        data.train.label_space.len(),
        data.oracle.len(),
        out.display()
    );
    Ok(())
}
