//! Forward pass with full intermediate caching.
//!
//! The pass is per-document: ids go in, a [`ForwardTrace`] comes out holding
//! every activation the backward pass needs. A `[CLS]` slot is prepended at
//! position 0 and its final hidden state feeds the label head.
//!
//! Mechanism hooks:
//!
//! * `casam` mixes each head's attention logits with a masked copy,
//!   `S' = alpha * S + (1 - alpha) * S (x) A`. The mask zeroes *logits*, not
//!   probabilities: a zeroed logit still carries `exp(0)` of softmax mass, so
//!   masked pairs are damped rather than disconnected. The same
//!   document-level mask, expanded with a fully-connected `[CLS]` row and
//!   column, is applied at every head of every block.
//! * `ciesam` leaves attention alone and instead mixes raw token embeddings
//!   with embeddings of the document's linearized knowledge graph,
//!   `X' = beta * X + (1 - beta) * Xg`, before positions are added.

use super::{EncoderConfig, EncoderParams, Mat, Mode};
use crate::corpus::{CLS_ID, PAD_ID};
use crate::oie::CausalMask;
use crate::{Error, Result};

/// Epsilon inside the layer-norm denominator.
pub(crate) const LN_EPS: f64 = 1e-5;

/// Logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows(m: &Mat) -> Mat {
    let mut out = Mat::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let orow = out.row_mut(i);
        let mut sum = 0.0;
        for (o, v) in orow.iter_mut().zip(row) {
            *o = (v - max).exp();
            sum += *o;
        }
        for o in orow.iter_mut() {
            *o /= sum;
        }
    }
    out
}

/// Attention logits `Q K^T / sqrt(d_model)` for one head.
///
/// The scale uses the *model* width (`x.cols()`), not the head width.
pub fn scaled_scores(x: &Mat, wq: &Mat, wk: &Mat) -> Mat {
    let q = x.matmul(wq);
    let k = x.matmul(wk);
    let mut s = q.matmul_nt(&k);
    s.scale(1.0 / (x.cols() as f64).sqrt());
    s
}

/// Causality-guided logit mixing plus attention readout.
///
/// Returns `(S', Y)` where `S' = alpha * S + (1 - alpha) * S (x) A` and
/// `Y = softmax(S') V`. `a` is applied exactly as given (no `[CLS]`
/// expansion here).
pub fn casam_attention(s: &Mat, a: &CausalMask, alpha: f64, v: &Mat) -> Result<(Mat, Mat)> {
    if s.rows() != s.cols() {
        return Err(Error::Shape(format!("score matrix {}x{} not square", s.rows(), s.cols())));
    }
    if a.len() != s.rows() {
        return Err(Error::Shape(format!(
            "mask size {} does not match {} scores",
            a.len(),
            s.rows()
        )));
    }
    if v.rows() != s.rows() {
        return Err(Error::Shape(format!(
            "value rows {} do not match {} scores",
            v.rows(),
            s.rows()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    let mixed = mix_scores(s, a, alpha);
    let y = softmax_rows(&mixed).matmul(v);
    Ok((mixed, y))
}

/// `alpha * S + (1 - alpha) * S (x) A` where `A` is 0/1.
fn mix_scores(s: &Mat, a: &CausalMask, alpha: f64) -> Mat {
    Mat::from_fn(s.rows(), s.cols(), |i, j| {
        let sij = s.get(i, j);
        let aij = if a.get(i, j) { 1.0 } else { 0.0 };
        alpha * sij + (1.0 - alpha) * sij * aij
    })
}

/// Embedding-level mixing `beta * X + (1 - beta) * Xg`.
pub fn ciesam_mix(x: &Mat, x_g: &Mat, beta: f64) -> Result<Mat> {
    if x.rows() != x_g.rows() || x.cols() != x_g.cols() {
        return Err(Error::Shape(format!(
            "embedding shapes {}x{} vs {}x{} differ",
            x.rows(),
            x.cols(),
            x_g.rows(),
            x_g.cols()
        )));
    }
    if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta {beta} outside [0, 1]")));
    }
    let mut out = x.clone();
    out.scale(beta);
    out.add_scaled(x_g, 1.0 - beta);
    Ok(out)
}

/// Hyperbolic-tangent approximation of GELU.
pub(crate) fn gelu(u: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let t = c * (u + 0.044715 * u * u * u);
    0.5 * u * (1.0 + t.tanh())
}

/// Derivative of [`gelu`].
pub(crate) fn gelu_prime(u: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let t = c * (u + 0.044715 * u * u * u);
    let th = t.tanh();
    0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * c * (1.0 + 3.0 * 0.044715 * u * u)
}

/// Row-wise layer norm; returns `(y, x_hat, sigma)` with the normalized rows
/// and per-row standard deviations cached for the backward pass.
pub(crate) fn layer_norm(x: &Mat, gamma: &Mat, beta: &Mat) -> (Mat, Mat, Vec<f64>) {
    let (n, d) = (x.rows(), x.cols());
    let mut y = Mat::zeros(n, d);
    let mut xhat = Mat::zeros(n, d);
    let mut sigma = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let sd = (var + LN_EPS).sqrt();
        sigma.push(sd);
        for j in 0..d {
            let h = (row[j] - mean) / sd;
            xhat.set(i, j, h);
            y.set(i, j, gamma.get(0, j) * h + beta.get(0, j));
        }
    }
    (y, xhat, sigma)
}

fn add_row_bias(m: &mut Mat, bias: &Mat) {
    for i in 0..m.rows() {
        for (v, b) in m.row_mut(i).iter_mut().zip(bias.row(0)) {
            *v += b;
        }
    }
}

/// Cached per-head activations.
#[derive(Debug, Clone)]
pub struct HeadTrace {
    pub q: Mat,
    pub k: Mat,
    pub v: Mat,
    /// Raw attention logits `Q K^T / sqrt(d)`.
    pub s: Mat,
    /// Logits after causal mixing; identical to `s` outside casam mode.
    pub s_mixed: Mat,
    /// Softmax probabilities over `s_mixed`.
    pub p: Mat,
}

/// Cached per-block activations.
#[derive(Debug, Clone)]
pub struct BlockTrace {
    /// Block input.
    pub x_in: Mat,
    pub heads: Vec<HeadTrace>,
    /// Concatenated head outputs, before the output projection.
    pub concat: Mat,
    pub xhat1: Mat,
    pub sigma1: Vec<f64>,
    /// First layer-norm output, input to the feed-forward.
    pub z1: Mat,
    /// Feed-forward pre-activation.
    pub h1: Mat,
    /// Feed-forward post-GELU.
    pub g: Mat,
    pub xhat2: Mat,
    pub sigma2: Vec<f64>,
    /// Block output.
    pub x_out: Mat,
}

/// Everything the backward pass and downstream analysis need from one
/// forward run.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Token ids actually embedded, `[CLS]` first. Empty when the trace came
    /// from [`forward_from_embeddings`], in which case embedding gradients
    /// are unavailable.
    pub input_ids: Vec<usize>,
    /// For `ciesam`: padded graph token ids, `[CLS]` first, same length as
    /// `input_ids`.
    pub graph_ids: Option<Vec<usize>>,
    /// For `casam`: the `[CLS]`-expanded mask the logits were mixed with.
    pub mask: Option<CausalMask>,
    /// Block-stack input (embeddings plus positions).
    pub embedded: Mat,
    pub blocks: Vec<BlockTrace>,
    pub logits: Vec<f64>,
    /// Per-label sigmoid probabilities.
    pub probs: Vec<f64>,
}

fn embed_rows(params: &EncoderParams, ids: &[usize]) -> Mat {
    let d = params.tok_emb.cols();
    Mat::from_fn(ids.len(), d, |i, j| params.tok_emb.get(ids[i], j))
}

/// Embeds raw token ids: `[CLS]` is prepended at position 0 and
/// `X[i] = token_emb[id_i] + pos_emb[i]`.
///
/// The input must already fit (`ids.len() + 1 <= n_max`); oversize input is
/// an error directing the caller at the truncation policy rather than a
/// silent cut.
pub fn embed(cfg: &EncoderConfig, params: &EncoderParams, ids: &[usize]) -> Result<Mat> {
    if 1 + ids.len() > cfg.n_max {
        return Err(Error::invalid(format!(
            "sequence of {} tokens exceeds n_max {}; shorten it or run with the truncate flag",
            ids.len(),
            cfg.n_max
        )));
    }
    for &id in ids {
        if id >= cfg.vocab_size {
            return Err(Error::invalid(format!("token id {id} outside vocabulary")));
        }
    }
    let mut with_cls = Vec::with_capacity(ids.len() + 1);
    with_cls.push(CLS_ID);
    with_cls.extend_from_slice(ids);
    let mut x = embed_rows(params, &with_cls);
    for i in 0..x.rows() {
        for j in 0..cfg.embed_dim {
            let v = x.get(i, j) + params.pos_emb.get(i, j);
            x.set(i, j, v);
        }
    }
    Ok(x)
}

/// Runs the full encoder over raw token ids.
///
/// `mask` is the document-aligned causal mask (`ids.len()` square before any
/// truncation) and is required in `casam` mode; `graph_ids` is the
/// linearized-graph token sequence and is required in `ciesam` mode. Inputs
/// not needed by the active mode may be supplied and are ignored, so callers
/// can assemble them uniformly.
pub fn forward(
    cfg: &EncoderConfig,
    params: &EncoderParams,
    ids: &[usize],
    mask: Option<&CausalMask>,
    graph_ids: Option<&[usize]>,
) -> Result<ForwardTrace> {
    cfg.validate()?;
    let full_len = ids.len();
    let keep = if 1 + full_len > cfg.n_max {
        if !cfg.truncate {
            return Err(Error::invalid(format!(
                "sequence of {} tokens exceeds n_max {} and truncation is disabled",
                full_len, cfg.n_max
            )));
        }
        cfg.n_max - 1
    } else {
        full_len
    };
    let ids = &ids[..keep];
    for &id in ids {
        if id >= cfg.vocab_size {
            return Err(Error::invalid(format!("token id {id} outside vocabulary")));
        }
    }

    // [CLS] always occupies position 0.
    let mut input_ids = Vec::with_capacity(keep + 1);
    input_ids.push(CLS_ID);
    input_ids.extend_from_slice(ids);

    let expanded_mask = match (cfg.mode, mask) {
        (Mode::Casam, None) => {
            return Err(Error::invalid("casam mode requires a causal mask"));
        }
        (Mode::Casam, Some(m)) => {
            if m.len() != full_len {
                return Err(Error::Shape(format!(
                    "mask size {} does not match {} document tokens",
                    m.len(),
                    full_len
                )));
            }
            Some(m.truncated(keep).with_cls())
        }
        _ => None,
    };

    let (x0, graph_with_cls) = match cfg.mode {
        Mode::Ciesam => {
            let graph = graph_ids.ok_or_else(|| {
                Error::invalid("ciesam mode requires linearized graph token ids")
            })?;
            // Align the graph sequence to the raw sequence: truncate if
            // longer, pad with [PAD] if shorter; both embeddings then carry
            // the same positions and share the [CLS] slot, so the mix keeps
            // position information intact.
            let mut g: Vec<usize> = graph.iter().take(keep).copied().collect();
            while g.len() < keep {
                g.push(PAD_ID);
            }
            let x = embed(cfg, params, ids)?;
            let xg = embed(cfg, params, &g)?;
            let mixed = ciesam_mix(&x, &xg, cfg.beta)?;
            let mut with_cls = Vec::with_capacity(keep + 1);
            with_cls.push(CLS_ID);
            with_cls.extend(g);
            (mixed, Some(with_cls))
        }
        _ => (embed(cfg, params, ids)?, None),
    };

    let mut trace = forward_from_embeddings(cfg, params, x0, expanded_mask)?;
    trace.input_ids = input_ids;
    trace.graph_ids = graph_with_cls;
    Ok(trace)
}

/// Runs the block stack and label head from an already-embedded input.
///
/// `mask`, when present, must already be `[CLS]`-expanded to `x0.rows()`.
/// The returned trace has empty `input_ids`, so it supports activation
/// analysis and weight gradients but not embedding-table gradients.
pub fn forward_from_embeddings(
    cfg: &EncoderConfig,
    params: &EncoderParams,
    x0: Mat,
    mask: Option<CausalMask>,
) -> Result<ForwardTrace> {
    if x0.cols() != cfg.embed_dim {
        return Err(Error::Shape(format!(
            "embedded width {} does not match embed_dim {}",
            x0.cols(),
            cfg.embed_dim
        )));
    }
    if let Some(m) = &mask {
        if m.len() != x0.rows() {
            return Err(Error::Shape(format!(
                "expanded mask size {} does not match {} rows",
                m.len(),
                x0.rows()
            )));
        }
    }

    let n = x0.rows();
    let (d, h_dim) = (cfg.embed_dim, cfg.head_dim);
    let mut blocks = Vec::with_capacity(cfg.blocks);
    let mut x = x0.clone();

    for bp in &params.blocks {
        let x_in = x;
        let mut concat = Mat::zeros(n, d);
        let mut heads = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let q = x_in.matmul(&bp.wq[h]);
            let k = x_in.matmul(&bp.wk[h]);
            let v = x_in.matmul(&bp.wv[h]);
            let mut s = q.matmul_nt(&k);
            s.scale(1.0 / (d as f64).sqrt());
            let s_mixed = match (&mask, cfg.mode) {
                (Some(a), Mode::Casam) => mix_scores(&s, a, cfg.alpha),
                _ => s.clone(),
            };
            let p = softmax_rows(&s_mixed);
            let o = p.matmul(&v);
            concat.add_into_cols(h * h_dim, &o);
            heads.push(HeadTrace { q, k, v, s, s_mixed, p });
        }
        let mut attn = concat.matmul(&bp.wo);
        add_row_bias(&mut attn, &bp.bo);

        let mut r1 = x_in.clone();
        r1.add_assign(&attn);
        let (z1, xhat1, sigma1) = layer_norm(&r1, &bp.ln1_gamma, &bp.ln1_beta);

        let mut h1 = z1.matmul(&bp.w1);
        add_row_bias(&mut h1, &bp.b1);
        let g = Mat::from_fn(h1.rows(), h1.cols(), |i, j| gelu(h1.get(i, j)));
        let mut f = g.matmul(&bp.w2);
        add_row_bias(&mut f, &bp.b2);

        let mut r2 = z1.clone();
        r2.add_assign(&f);
        let (x_out, xhat2, sigma2) = layer_norm(&r2, &bp.ln2_gamma, &bp.ln2_beta);

        blocks.push(BlockTrace {
            x_in,
            heads,
            concat,
            xhat1,
            sigma1,
            z1,
            h1,
            g,
            xhat2,
            sigma2,
            x_out: x_out.clone(),
        });
        x = x_out;
    }

    let cls = x.row(0);
    let mut logits = vec![0.0; cfg.num_labels];
    for (m, logit) in logits.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (a, c) in cls.iter().enumerate() {
            acc += c * params.classifier.get(a, m);
        }
        *logit = acc;
    }
    if !logits.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("logits became non-finite during the forward pass".into()));
    }
    let probs = logits.iter().map(|&l| sigmoid(l)).collect();

    Ok(ForwardTrace {
        input_ids: Vec::new(),
        graph_ids: None,
        mask,
        embedded: x0,
        blocks,
        logits,
        probs,
    })
}
