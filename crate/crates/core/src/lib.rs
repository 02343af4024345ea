//! Desk-scale toolkit for causality-guided text classification.
//!
//! The crate implements two intervention mechanisms on a small transformer
//! encoder — attention-logit masking (`casam`) and embedding mixing with a
//! linearized knowledge graph (`ciesam`) — together with everything needed to
//! exercise them end to end on CPU:
//!
//! * [`corpus`] — tokenization, JSONL datasets, vocabulary, and a synthetic
//!   benchmark generator with a known causal structure;
//! * [`oie`] — rule-based triplet extraction, lightweight coreference, graph
//!   construction, causal attention masks, and graph linearization;
//! * [`encoder`] — the f64 encoder with analytic gradients and a finite
//!   difference gradient checker;
//! * [`training`] — BCE loss, AdamW, the train loop, robustness-aware model
//!   selection;
//! * [`attacks`] — eight label-preserving perturbation families plus the
//!   consistency (CR/SR) harness;
//! * [`analysis`] — erasure attribution, crucial-word profiles, micro/macro F1;
//! * [`pipeline`] — glue that turns a checkpoint into a per-document predictor
//!   for whichever mode it was trained in.
//!
//! Everything is deterministic given a seed: reports, dumps, and checkpoints
//! are byte-identical across runs with the same config and inputs.

pub mod analysis;
pub mod attacks;
pub mod corpus;
pub mod encoder;
mod error;
pub mod oie;
pub mod pipeline;
pub mod training;

pub use error::{Error, Result};
