//! The per-epoch training loop.

use super::loss::bce_with_dlogits;
use super::optimizer::{clip_global_norm, AdamW};
use crate::encoder::{backward, forward, EncoderConfig, EncoderParams};
use crate::oie::CausalMask;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Training hyperparameters and the checkpoint-selection weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    pub seed: u64,
    /// Selection weight on clean dev micro-F1.
    pub w_perf: f64,
    /// Selection weight on mean certified ratio under sampled attacks.
    pub w_robust: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.01,
            epochs: 10,
            batch_size: 8,
            clip_norm: 1.0,
            seed: 7,
            w_perf: 0.5,
            w_robust: 0.5,
        }
    }
}

impl TrainConfig {
    /// `lr = 0` is deliberately permitted: it is the documented fixed-point
    /// degenerate case used to verify that the update path is inert.
    pub fn validate(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::config(format!("learning rate {} invalid", self.lr)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch_size must be positive"));
        }
        if !self.clip_norm.is_finite() || self.clip_norm <= 0.0 {
            return Err(Error::config(format!("clip_norm {} invalid", self.clip_norm)));
        }
        if self.w_perf < 0.0 || self.w_robust < 0.0 {
            return Err(Error::config("selection weights must be nonnegative"));
        }
        if (self.w_perf + self.w_robust - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "selection weights must sum to 1 (got {} + {})",
                self.w_perf, self.w_robust
            )));
        }
        Ok(())
    }

    pub fn adamw(&self) -> super::AdamWConfig {
        super::AdamWConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
            weight_decay: self.weight_decay,
        }
    }
}

/// One training example with its mode inputs precomputed.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub doc_id: String,
    pub ids: Vec<usize>,
    /// Document-aligned mask (casam mode).
    pub mask: Option<CausalMask>,
    /// Linearized-graph ids (ciesam mode).
    pub graph_ids: Option<Vec<usize>>,
    /// Multi-hot gold labels.
    pub targets: Vec<f64>,
}

/// One seeded-shuffle pass over `items` with AdamW updates per batch;
/// returns the mean batch loss.
///
/// The shuffle seed mixes the config seed with the epoch index, so a full
/// run is reproducible while epochs still see different orders.
pub fn train_epoch(
    enc_cfg: &EncoderConfig,
    params: &mut EncoderParams,
    opt: &mut AdamW,
    items: &[TrainItem],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<f64> {
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }

    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    order.shuffle(&mut rng);

    let mut batch_losses = Vec::new();
    for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
        let mut grads = params.zeros_like();
        let mut batch_loss = 0.0;
        let inv = 1.0 / batch.len() as f64;
        for &item_idx in batch {
            let item = &items[item_idx];
            let trace = forward(
                enc_cfg,
                params,
                &item.ids,
                item.mask.as_ref(),
                item.graph_ids.as_deref(),
            )?;
            let (loss, dlogits) = bce_with_dlogits(&trace.probs, &item.targets)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "epoch {epoch}, batch {batch_idx}, doc {}: loss became non-finite",
                    item.doc_id
                )));
            }
            batch_loss += loss * inv;
            let g = backward(enc_cfg, params, &trace, &dlogits)?;
            grads.add_scaled(&g, inv);
        }

        let norm = clip_global_norm(&mut grads, cfg.clip_norm);
        if !norm.is_finite() {
            return Err(Error::NonFinite(format!(
                "epoch {epoch}, batch {batch_idx}: gradient norm became non-finite"
            )));
        }
        opt.step(params, &grads);
        batch_losses.push(batch_loss);
    }

    Ok(batch_losses.iter().sum::<f64>() / batch_losses.len() as f64)
}
