//! Parameter tensors for the encoder.
//!
//! All learnable state lives in [`Mat`]s, including bias and layer-norm
//! vectors (stored as single-row matrices). [`EncoderParams::tensors`] and
//! [`EncoderParams::tensors_mut`] walk every tensor in one canonical order,
//! which is what the optimizer, the gradient checker, global-norm clipping,
//! and the checkpoint writer all iterate over — so the order is part of the
//! on-disk format and must not change.

use super::{EncoderConfig, Mat};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Per-block weights: multi-head attention, feed-forward, and two layer norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    /// Per-head query projections, each `embed_dim x head_dim`.
    pub wq: Vec<Mat>,
    pub wk: Vec<Mat>,
    pub wv: Vec<Mat>,
    /// Output projection `embed_dim x embed_dim`.
    pub wo: Mat,
    /// Output bias, `1 x embed_dim`.
    pub bo: Mat,
    pub ln1_gamma: Mat,
    pub ln1_beta: Mat,
    /// Feed-forward up projection `embed_dim x ff_dim`.
    pub w1: Mat,
    pub b1: Mat,
    /// Feed-forward down projection `ff_dim x embed_dim`.
    pub w2: Mat,
    pub b2: Mat,
    pub ln2_gamma: Mat,
    pub ln2_beta: Mat,
}

/// Every learnable tensor in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    /// Token embedding table, `vocab_size x embed_dim`.
    pub tok_emb: Mat,
    /// Learned position embeddings, `n_max x embed_dim`.
    pub pos_emb: Mat,
    pub blocks: Vec<BlockParams>,
    /// Label head `embed_dim x num_labels`; logits are `h_cls * classifier`
    /// with no bias.
    pub classifier: Mat,
}

impl EncoderParams {
    /// Random initialization: weights and embeddings from `N(0, 0.02)`,
    /// biases and layer-norm shifts zero, layer-norm gains one. The draw
    /// order is fixed, so a `(config, seed)` pair always produces the same
    /// parameters.
    pub fn init(cfg: &EncoderConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).expect("valid stddev");
        let mut draw = |rows: usize, cols: usize| {
            Mat::from_fn(rows, cols, |_, _| normal.sample(&mut rng))
        };

        let (d, h, k, f) = (cfg.embed_dim, cfg.heads, cfg.head_dim, cfg.ff_dim);
        let tok_emb = draw(cfg.vocab_size, d);
        let pos_emb = draw(cfg.n_max, d);
        let blocks = (0..cfg.blocks)
            .map(|_| BlockParams {
                wq: (0..h).map(|_| draw(d, k)).collect(),
                wk: (0..h).map(|_| draw(d, k)).collect(),
                wv: (0..h).map(|_| draw(d, k)).collect(),
                wo: draw(d, d),
                bo: Mat::zeros(1, d),
                ln1_gamma: Mat::from_fn(1, d, |_, _| 1.0),
                ln1_beta: Mat::zeros(1, d),
                w1: draw(d, f),
                b1: Mat::zeros(1, f),
                w2: draw(f, d),
                b2: Mat::zeros(1, d),
                ln2_gamma: Mat::from_fn(1, d, |_, _| 1.0),
                ln2_beta: Mat::zeros(1, d),
            })
            .collect();
        let classifier = draw(d, cfg.num_labels);

        EncoderParams { tok_emb, pos_emb, blocks, classifier }
    }

    /// Initialization from the config's own seed.
    pub fn from_config(cfg: &EncoderConfig) -> Self {
        Self::init(cfg, cfg.seed)
    }

    /// All-zero tensors with the shapes implied by `cfg`. Used when loading
    /// a checkpoint into a fresh parameter set.
    pub fn zeros(cfg: &EncoderConfig) -> Self {
        let (d, h, k, f) = (cfg.embed_dim, cfg.heads, cfg.head_dim, cfg.ff_dim);
        EncoderParams {
            tok_emb: Mat::zeros(cfg.vocab_size, d),
            pos_emb: Mat::zeros(cfg.n_max, d),
            blocks: (0..cfg.blocks)
                .map(|_| BlockParams {
                    wq: (0..h).map(|_| Mat::zeros(d, k)).collect(),
                    wk: (0..h).map(|_| Mat::zeros(d, k)).collect(),
                    wv: (0..h).map(|_| Mat::zeros(d, k)).collect(),
                    wo: Mat::zeros(d, d),
                    bo: Mat::zeros(1, d),
                    ln1_gamma: Mat::zeros(1, d),
                    ln1_beta: Mat::zeros(1, d),
                    w1: Mat::zeros(d, f),
                    b1: Mat::zeros(1, f),
                    w2: Mat::zeros(f, d),
                    b2: Mat::zeros(1, d),
                    ln2_gamma: Mat::zeros(1, d),
                    ln2_beta: Mat::zeros(1, d),
                })
                .collect(),
            classifier: Mat::zeros(d, cfg.num_labels),
        }
    }

    /// Same shapes as `self`, every entry zero. Used for gradients and
    /// optimizer moments.
    pub fn zeros_like(&self) -> Self {
        let zero = |m: &Mat| Mat::zeros(m.rows(), m.cols());
        EncoderParams {
            tok_emb: zero(&self.tok_emb),
            pos_emb: zero(&self.pos_emb),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockParams {
                    wq: b.wq.iter().map(&zero).collect(),
                    wk: b.wk.iter().map(&zero).collect(),
                    wv: b.wv.iter().map(&zero).collect(),
                    wo: zero(&b.wo),
                    bo: zero(&b.bo),
                    ln1_gamma: zero(&b.ln1_gamma),
                    ln1_beta: zero(&b.ln1_beta),
                    w1: zero(&b.w1),
                    b1: zero(&b.b1),
                    w2: zero(&b.w2),
                    b2: zero(&b.b2),
                    ln2_gamma: zero(&b.ln2_gamma),
                    ln2_beta: zero(&b.ln2_beta),
                })
                .collect(),
            classifier: zero(&self.classifier),
        }
    }

    /// All tensors in canonical order as `(name, tensor)` pairs.
    pub fn tensors(&self) -> Vec<(String, &Mat)> {
        let mut out: Vec<(String, &Mat)> = vec![
            ("tok_emb".into(), &self.tok_emb),
            ("pos_emb".into(), &self.pos_emb),
        ];
        for (l, b) in self.blocks.iter().enumerate() {
            for (h, m) in b.wq.iter().enumerate() {
                out.push((format!("b{l}.wq{h}"), m));
            }
            for (h, m) in b.wk.iter().enumerate() {
                out.push((format!("b{l}.wk{h}"), m));
            }
            for (h, m) in b.wv.iter().enumerate() {
                out.push((format!("b{l}.wv{h}"), m));
            }
            out.push((format!("b{l}.wo"), &b.wo));
            out.push((format!("b{l}.bo"), &b.bo));
            out.push((format!("b{l}.ln1_gamma"), &b.ln1_gamma));
            out.push((format!("b{l}.ln1_beta"), &b.ln1_beta));
            out.push((format!("b{l}.w1"), &b.w1));
            out.push((format!("b{l}.b1"), &b.b1));
            out.push((format!("b{l}.w2"), &b.w2));
            out.push((format!("b{l}.b2"), &b.b2));
            out.push((format!("b{l}.ln2_gamma"), &b.ln2_gamma));
            out.push((format!("b{l}.ln2_beta"), &b.ln2_beta));
        }
        out.push(("classifier".into(), &self.classifier));
        out
    }

    /// Mutable variant of [`tensors`](Self::tensors), same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)> {
        let mut out: Vec<(String, &mut Mat)> = vec![
            ("tok_emb".into(), &mut self.tok_emb),
            ("pos_emb".into(), &mut self.pos_emb),
        ];
        for (l, b) in self.blocks.iter_mut().enumerate() {
            for (h, m) in b.wq.iter_mut().enumerate() {
                out.push((format!("b{l}.wq{h}"), m));
            }
            for (h, m) in b.wk.iter_mut().enumerate() {
                out.push((format!("b{l}.wk{h}"), m));
            }
            for (h, m) in b.wv.iter_mut().enumerate() {
                out.push((format!("b{l}.wv{h}"), m));
            }
            out.push((format!("b{l}.wo"), &mut b.wo));
            out.push((format!("b{l}.bo"), &mut b.bo));
            out.push((format!("b{l}.ln1_gamma"), &mut b.ln1_gamma));
            out.push((format!("b{l}.ln1_beta"), &mut b.ln1_beta));
            out.push((format!("b{l}.w1"), &mut b.w1));
            out.push((format!("b{l}.b1"), &mut b.b1));
            out.push((format!("b{l}.w2"), &mut b.w2));
            out.push((format!("b{l}.b2"), &mut b.b2));
            out.push((format!("b{l}.ln2_gamma"), &mut b.ln2_gamma));
            out.push((format!("b{l}.ln2_beta"), &mut b.ln2_beta));
        }
        out.push(("classifier".into(), &mut self.classifier));
        out
    }

    /// Total scalar parameter count.
    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.rows() * m.cols()).sum()
    }

    /// Element-wise `self += factor * other`; shapes must match.
    pub fn add_scaled(&mut self, other: &EncoderParams, factor: f64) {
        let theirs = other.tensors();
        for ((_, mine), (_, m)) in self.tensors_mut().into_iter().zip(theirs) {
            mine.add_scaled(m, factor);
        }
    }

    /// Multiplies every tensor by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for (_, m) in self.tensors_mut() {
            m.scale(factor);
        }
    }

    /// Euclidean norm over all tensors jointly.
    pub fn global_norm(&self) -> f64 {
        self.tensors().iter().map(|(_, m)| m.sq_norm()).sum::<f64>().sqrt()
    }
}
