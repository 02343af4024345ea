//! A small transformer-style text encoder with pluggable causality-guided
//! attention.
//!
//! The encoder is deliberately desk-scale: pure-Rust `f64` math, a handful of
//! blocks, and per-document forward passes. What it gives up in speed it
//! returns in auditability — every intermediate is cached in a
//! [`ForwardTrace`] so the analytic backward pass can be checked against
//! finite differences to near machine precision.
//!
//! Three operating modes share the same parameter shapes:
//!
//! * `baseline` — standard multi-head self-attention;
//! * `casam` — attention logits are mixed with a masked copy of themselves,
//!   `S' = alpha * S + (1 - alpha) * S (x) A`, softly narrowing attention onto
//!   mask-approved token pairs;
//! * `ciesam` — token embeddings are mixed with embeddings of a linearized
//!   knowledge-graph rendering of the document, `X' = beta * X + (1 - beta) * Xg`,
//!   and attention itself stays untouched.

mod backward;
mod checkpoint;
mod forward;
mod gradcheck;
mod mat;
mod params;

pub use backward::{backward, Gradients};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use forward::{
    casam_attention, ciesam_mix, embed, forward, forward_from_embeddings, scaled_scores, sigmoid,
    softmax_rows, BlockTrace, ForwardTrace, HeadTrace,
};
pub use gradcheck::{grad_check, GradCheckInput, GradCheckReport};
pub use mat::Mat;
pub use params::EncoderParams;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which attention-intervention mechanism the encoder runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Casam,
    Ciesam,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Baseline => "baseline",
            Mode::Casam => "casam",
            Mode::Ciesam => "ciesam",
        };
        f.write_str(s)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "casam" => Ok(Mode::Casam),
            "ciesam" => Ok(Mode::Ciesam),
            other => Err(Error::config(format!(
                "unknown mode `{other}` (expected baseline, casam, or ciesam)"
            ))),
        }
    }
}

/// Hyperparameters fixing the encoder's architecture and mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub mode: Mode,
    /// Number of transformer blocks.
    pub blocks: usize,
    /// Model width; must equal `heads * head_dim`.
    pub embed_dim: usize,
    pub heads: usize,
    pub head_dim: usize,
    /// Hidden width of the position-wise feed-forward layer.
    pub ff_dim: usize,
    /// Maximum sequence length including the leading `[CLS]` slot.
    pub n_max: usize,
    pub vocab_size: usize,
    pub num_labels: usize,
    /// Logit-mixing weight for `casam`; `1.0` reduces to the baseline.
    pub alpha: f64,
    /// Embedding-mixing weight for `ciesam`; `1.0` reduces to the baseline.
    pub beta: f64,
    /// Seed for parameter initialization.
    pub seed: u64,
    /// When true, over-long inputs are silently truncated to fit `n_max`;
    /// when false they are an error.
    pub truncate: bool,
}

impl EncoderConfig {
    /// The default desk-scale configuration used by the CLI.
    pub fn toy(mode: Mode, vocab_size: usize, num_labels: usize) -> Self {
        EncoderConfig {
            mode,
            blocks: 2,
            embed_dim: 64,
            heads: 4,
            head_dim: 16,
            ff_dim: 256,
            n_max: 256,
            vocab_size,
            num_labels,
            alpha: 0.3,
            beta: 0.5,
            seed: 7,
            truncate: true,
        }
    }

    /// A minimal configuration for fast numeric tests.
    pub fn tiny(mode: Mode, vocab_size: usize, num_labels: usize) -> Self {
        EncoderConfig {
            mode,
            blocks: 1,
            embed_dim: 8,
            heads: 2,
            head_dim: 4,
            ff_dim: 16,
            n_max: 16,
            vocab_size,
            num_labels,
            alpha: 0.3,
            beta: 0.5,
            seed: 7,
            truncate: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 {
            return Err(Error::config("blocks must be at least 1"));
        }
        if self.embed_dim != self.heads * self.head_dim {
            return Err(Error::config(format!(
                "embed_dim {} must equal heads {} * head_dim {}",
                self.embed_dim, self.heads, self.head_dim
            )));
        }
        if self.embed_dim == 0 || self.ff_dim == 0 {
            return Err(Error::config("embed_dim and ff_dim must be positive"));
        }
        if self.n_max < 2 {
            return Err(Error::config("n_max must leave room for [CLS] plus one token"));
        }
        if self.vocab_size < crate::corpus::RESERVED_TOKENS.len() {
            return Err(Error::config("vocab_size smaller than the reserved token set"));
        }
        if self.num_labels == 0 {
            return Err(Error::config("num_labels must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(Error::config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) || !self.beta.is_finite() {
            return Err(Error::config(format!("beta {} outside [0, 1]", self.beta)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_round_trips_through_strings() {
        for mode in [Mode::Baseline, Mode::Casam, Mode::Ciesam] {
            assert_eq!(mode.to_string().parse::<Mode>().unwrap(), mode);
        }
        assert!("umbrella".parse::<Mode>().is_err());
    }

    #[test]
    fn validate_rejects_inconsistent_shapes() {
        let mut cfg = EncoderConfig::tiny(Mode::Baseline, 10, 2);
        assert!(cfg.validate().is_ok());
        cfg.embed_dim = 9;
        assert!(cfg.validate().is_err());

        let mut cfg = EncoderConfig::tiny(Mode::Casam, 10, 2);
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        cfg.alpha = f64::NAN;
        assert!(cfg.validate().is_err());

        let mut cfg = EncoderConfig::tiny(Mode::Ciesam, 10, 2);
        cfg.beta = -0.1;
        assert!(cfg.validate().is_err());
    }
}
