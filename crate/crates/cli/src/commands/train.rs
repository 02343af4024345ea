//! `train`: fit the configured mode on a training split, score every epoch on
//! dev (clean F1 plus sampled-attack CR), and keep the checkpoint with the
//! best blended score.

use anyhow::{Context, Result};
use causal_attn::analysis::micro_macro_f1;
use causal_attn::attacks::{attack_suite, SiteSelection};
use causal_attn::corpus::Vocabulary;
use causal_attn::encoder::EncoderParams;
use causal_attn::oie::DocFreq;
use causal_attn::pipeline::{BundleMeta, DocPipeline, ModelBundle};
use causal_attn::training::{
    select_model, train_epoch, AdamW, Checkpoint, DevMetrics, TrainItem,
};
use rayon::prelude::*;
use std::io::Write;

use super::{
    create_file, finish_file, init_threads, maybe_oracle, predictions_for, prepare_out_dir,
    read_dataset, require_path,
};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    init_threads(cfg);
    let out = prepare_out_dir(cfg)?;
    let train_path = require_path(&cfg.train_data, "train_data")?;
    let dev_path = require_path(&cfg.dev_data, "dev_data")?;

    let train = read_dataset(train_path, None, "train")?;
    let dev = read_dataset(dev_path, Some(&train.label_space), "dev")?;
    let num_labels = train.label_space.len();
    anyhow::ensure!(num_labels > 0, "training data carries no labels at all");

    let vocab = Vocabulary::build(&train, cfg.min_freq)?;
    let doc_freq = DocFreq::build(&train);
    let enc_cfg = cfg.encoder_config(vocab.size(), num_labels);
    enc_cfg.validate()?;
    let tcfg = cfg.train_config();
    tcfg.validate()?;
    let oracle = maybe_oracle(cfg)?;

    let pipeline = DocPipeline {
        cfg: &enc_cfg,
        vocab: &vocab,
        doc_freq: &doc_freq,
        merge_threshold: cfg.merge_threshold,
        dedup_threshold: cfg.dedup_threshold,
        mask_source: cfg.mask_source,
        oracle: oracle.as_ref(),
    };

    // Graphs and masks are computed once up front, not per epoch.
    let items: Vec<TrainItem> = train
        .documents
        .par_iter()
        .map(|doc| pipeline.train_item(doc, num_labels))
        .collect::<causal_attn::Result<_>>()
        .context("preprocessing the training split")?;
    let golds: Vec<_> = dev.documents.iter().map(|d| d.labels.clone()).collect();

    let mut params = EncoderParams::init(&enc_cfg, cfg.seed);
    let mut opt = AdamW::new(tcfg.adamw(), &params);
    let mut checkpoints: Vec<Checkpoint> = Vec::with_capacity(tcfg.epochs);
    let mut losses: Vec<f64> = Vec::with_capacity(tcfg.epochs);

    for epoch in 0..tcfg.epochs {
        let mean_loss = train_epoch(&enc_cfg, &mut params, &mut opt, &items, &tcfg, epoch)?;
        let preds = predictions_for(&dev, &pipeline, &params, cfg.threshold)?;
        let (micro_f1, macro_f1) = micro_macro_f1(&preds, &golds, num_labels)?;
        let robustness = attack_suite(
            pipeline.set_predictor(&params, cfg.threshold),
            &dev,
            &cfg.attack_kinds,
            SiteSelection::Sampled { per_doc: cfg.attack_per_doc, seed: cfg.seed },
        )?;
        let mean_cr = robustness.mean_cr();
        println!(
            "epoch {epoch}: loss {mean_loss:.4}, dev micro-F1 {micro_f1:.4}, macro-F1 {macro_f1:.4}, mean CR {}",
            mean_cr.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
        );
        losses.push(mean_loss);
        checkpoints.push(Checkpoint {
            epoch,
            params: params.clone(),
            metrics: DevMetrics { micro_f1, macro_f1, mean_cr },
        });
    }

    let best = select_model(&checkpoints, tcfg.w_perf, tcfg.w_robust)?;
    let best_epoch = best.epoch;

    let mut log = create_file(&out.join("training_log.csv"))?;
    writeln!(log, "epoch,mean_loss,dev_micro_f1,dev_macro_f1,dev_mean_cr,selected")?;
    for (ckpt, loss) in checkpoints.iter().zip(&losses) {
        writeln!(
            log,
            "{},{:.6},{:.6},{:.6},{},{}",
            ckpt.epoch,
            loss,
            ckpt.metrics.micro_f1,
            ckpt.metrics.macro_f1,
            ckpt.metrics.mean_cr.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}")),
            (ckpt.epoch == best_epoch) as u8
        )?;
    }
    finish_file(log)?;

    let bundle = ModelBundle {
        meta: BundleMeta {
            label_space: train.label_space.clone(),
            vocab,
            doc_freq,
            merge_threshold: cfg.merge_threshold,
            dedup_threshold: cfg.dedup_threshold,
            mask_source: cfg.mask_source,
            threshold: cfg.threshold,
        },
        cfg: enc_cfg,
        params: best.params.clone(),
    };
    let model_path = out.join("model.ckpt");
    let w = create_file(&model_path)?;
    bundle.save(w)?;

    println!(
        "selected epoch {best_epoch} (micro-F1 {:.4}, mean CR {}); model at {}",
        best.metrics.micro_f1,
        best.metrics.mean_cr.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}")),
        model_path.display()
    );
    Ok(())
}
