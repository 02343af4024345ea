//! Multi-label training: BCE loss, decoupled AdamW, the per-epoch loop, and
//! robustness-aware checkpoint selection.
//!
//! Training is deliberately boring and reproducible: per-epoch seeded
//! shuffles, batch-mean gradients, global-norm clipping, and single-writer
//! parameter updates. The one distinctive piece is [`select_model`], which
//! scores checkpoints by a weighted sum of clean dev micro-F1 and mean
//! certified ratio under sampled attacks, so the chosen model is the most
//! robust adequate one rather than the best-fitting one.

mod loss;
mod optimizer;
mod select;
mod trainer;

pub use loss::{bce_loss, bce_with_dlogits, targets_from_labels};
pub use optimizer::{clip_global_norm, AdamW, AdamWConfig};
pub use select::{select_model, Checkpoint, DevMetrics};
pub use trainer::{train_epoch, TrainConfig, TrainItem};
