//! Analytic reverse-mode gradients for the encoder.
//!
//! [`backward`] consumes a [`ForwardTrace`] plus the loss gradient with
//! respect to the logits and returns parameter gradients shaped exactly like
//! [`EncoderParams`], so accumulation and the optimizer reuse the same
//! tensor-walk machinery. The derivation mirrors the forward pass step for
//! step; the only mechanism-specific wrinkles are the casam logit-mixing
//! factor `alpha + (1 - alpha) * A` and the ciesam split of embedding
//! gradients between the raw and graph token tables.

use super::forward::{gelu_prime, ForwardTrace};
use super::{EncoderConfig, EncoderParams, Mat, Mode};
use crate::oie::CausalMask;
use crate::{Error, Result};

/// Parameter gradients; same shapes and tensor order as the parameters.
pub type Gradients = EncoderParams;

/// Row-wise softmax Jacobian-vector product: given `dL/dP` and `P`,
/// returns `dL/dS` where `P = softmax(S)` row by row.
fn softmax_backward(dp: &Mat, p: &Mat) -> Mat {
    let (n, m) = (dp.rows(), dp.cols());
    let mut ds = Mat::zeros(n, m);
    for i in 0..n {
        let dpr = dp.row(i);
        let pr = p.row(i);
        let dot: f64 = dpr.iter().zip(pr).map(|(a, b)| a * b).sum();
        let out = ds.row_mut(i);
        for j in 0..m {
            out[j] = pr[j] * (dpr[j] - dot);
        }
    }
    ds
}

/// Layer-norm backward for one matrix of rows; accumulates `dgamma`/`dbeta`
/// and returns `dL/dx`.
fn layer_norm_backward(
    dy: &Mat,
    xhat: &Mat,
    sigma: &[f64],
    gamma: &Mat,
    dgamma: &mut Mat,
    dbeta: &mut Mat,
) -> Mat {
    let (n, d) = (dy.rows(), dy.cols());
    let mut dx = Mat::zeros(n, d);
    let mut a = vec![0.0; d];
    for i in 0..n {
        let dyr = dy.row(i);
        let xr = xhat.row(i);
        for j in 0..d {
            dgamma.row_mut(0)[j] += dyr[j] * xr[j];
            dbeta.row_mut(0)[j] += dyr[j];
            a[j] = dyr[j] * gamma.get(0, j);
        }
        let mean_a: f64 = a.iter().sum::<f64>() / d as f64;
        let mean_ax: f64 = a.iter().zip(xr).map(|(u, v)| u * v).sum::<f64>() / d as f64;
        let out = dx.row_mut(i);
        for j in 0..d {
            out[j] = (a[j] - mean_a - xr[j] * mean_ax) / sigma[i];
        }
    }
    dx
}

fn add_col_sums(grad: &mut Mat, m: &Mat) {
    for i in 0..m.rows() {
        for (g, v) in grad.row_mut(0).iter_mut().zip(m.row(i)) {
            *g += v;
        }
    }
}

fn apply_casam_factor(ds: &mut Mat, a: &CausalMask, alpha: f64) {
    for i in 0..ds.rows() {
        let row = ds.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            let aij = if a.get(i, j) { 1.0 } else { 0.0 };
            *v *= alpha + (1.0 - alpha) * aij;
        }
    }
}

/// Computes parameter gradients for one traced forward pass.
///
/// `dlogits` is `dL/dlogits` (length `num_labels`). The trace must come from
/// [`super::forward`] — traces produced by `forward_from_embeddings` carry no
/// token ids and cannot route gradients into the embedding tables.
pub fn backward(
    cfg: &EncoderConfig,
    params: &EncoderParams,
    trace: &ForwardTrace,
    dlogits: &[f64],
) -> Result<Gradients> {
    if dlogits.len() != cfg.num_labels {
        return Err(Error::Shape(format!(
            "dlogits length {} does not match {} labels",
            dlogits.len(),
            cfg.num_labels
        )));
    }
    if trace.input_ids.is_empty() {
        return Err(Error::invalid(
            "trace has no token ids; gradients require a trace from `forward`",
        ));
    }
    if trace.blocks.len() != cfg.blocks {
        return Err(Error::Shape(format!(
            "trace has {} blocks, config expects {}",
            trace.blocks.len(),
            cfg.blocks
        )));
    }
    if cfg.mode == Mode::Casam && trace.mask.is_none() {
        return Err(Error::invalid("casam trace is missing its expanded mask"));
    }

    let n = trace.input_ids.len();
    let d = cfg.embed_dim;
    let scale = 1.0 / (d as f64).sqrt();
    let mut grads = params.zeros_like();

    // Label head: logits = x_last[0] * classifier.
    let x_last = &trace.blocks.last().expect("blocks >= 1").x_out;
    let mut dx = Mat::zeros(n, d);
    for a in 0..d {
        let cls_a = x_last.get(0, a);
        let mut acc = 0.0;
        for (m, dl) in dlogits.iter().enumerate() {
            grads.classifier.row_mut(a)[m] += cls_a * dl;
            acc += params.classifier.get(a, m) * dl;
        }
        dx.row_mut(0)[a] = acc;
    }

    for ((bt, bp), gb) in trace
        .blocks
        .iter()
        .zip(&params.blocks)
        .zip(&mut grads.blocks)
        .rev()
    {
        // x_out = LN2(z1 + f)
        let dr2 =
            layer_norm_backward(&dx, &bt.xhat2, &bt.sigma2, &bp.ln2_gamma, &mut gb.ln2_gamma, &mut gb.ln2_beta);
        let mut dz1 = dr2.clone();
        let df = dr2;

        // f = gelu(h1) * w2 + b2
        gb.w2.add_assign(&bt.g.matmul_tn(&df));
        add_col_sums(&mut gb.b2, &df);
        let dg = df.matmul_nt(&bp.w2);
        let dh1 = Mat::from_fn(n, cfg.ff_dim, |i, j| dg.get(i, j) * gelu_prime(bt.h1.get(i, j)));

        // h1 = z1 * w1 + b1
        gb.w1.add_assign(&bt.z1.matmul_tn(&dh1));
        add_col_sums(&mut gb.b1, &dh1);
        dz1.add_assign(&dh1.matmul_nt(&bp.w1));

        // z1 = LN1(x_in + attn)
        let dr1 =
            layer_norm_backward(&dz1, &bt.xhat1, &bt.sigma1, &bp.ln1_gamma, &mut gb.ln1_gamma, &mut gb.ln1_beta);
        let mut dx_in = dr1.clone();
        let dattn = dr1;

        // attn = concat * wo + bo
        gb.wo.add_assign(&bt.concat.matmul_tn(&dattn));
        add_col_sums(&mut gb.bo, &dattn);
        let dconcat = dattn.matmul_nt(&bp.wo);

        for (h, ht) in bt.heads.iter().enumerate() {
            let do_h = dconcat.col_slice(h * cfg.head_dim, cfg.head_dim);

            // o = p * v
            let dp = do_h.matmul_nt(&ht.v);
            let dv = ht.p.matmul_tn(&do_h);

            // p = softmax(s'), s' = casam mix of s (or s itself)
            let mut ds = softmax_backward(&dp, &ht.p);
            if cfg.mode == Mode::Casam {
                let mask = trace.mask.as_ref().expect("checked above");
                apply_casam_factor(&mut ds, mask, cfg.alpha);
            }

            // s = q * k^T / sqrt(d)
            let mut dq = ds.matmul(&ht.k);
            dq.scale(scale);
            let mut dk = ds.matmul_tn(&ht.q);
            dk.scale(scale);

            // q = x_in * wq, etc.
            gb.wq[h].add_assign(&bt.x_in.matmul_tn(&dq));
            gb.wk[h].add_assign(&bt.x_in.matmul_tn(&dk));
            gb.wv[h].add_assign(&bt.x_in.matmul_tn(&dv));
            dx_in.add_assign(&dq.matmul_nt(&bp.wq[h]));
            dx_in.add_assign(&dk.matmul_nt(&bp.wk[h]));
            dx_in.add_assign(&dv.matmul_nt(&bp.wv[h]));
        }

        dx = dx_in;
    }

    // Embeddings: x0[i] = mix(i) + pos[i].
    match cfg.mode {
        Mode::Ciesam => {
            let graph_ids = trace
                .graph_ids
                .as_ref()
                .ok_or_else(|| Error::invalid("ciesam trace is missing graph token ids"))?;
            if graph_ids.len() != n {
                return Err(Error::Shape(format!(
                    "graph ids length {} does not match {} positions",
                    graph_ids.len(),
                    n
                )));
            }
            for i in 0..n {
                let row = dx.row(i).to_vec();
                grads.pos_emb.row_mut(i).iter_mut().zip(&row).for_each(|(g, v)| *g += v);
                let raw = trace.input_ids[i];
                let gid = graph_ids[i];
                for (j, v) in row.iter().enumerate() {
                    grads.tok_emb.row_mut(raw)[j] += cfg.beta * v;
                    grads.tok_emb.row_mut(gid)[j] += (1.0 - cfg.beta) * v;
                }
            }
        }
        _ => {
            for i in 0..n {
                let row = dx.row(i).to_vec();
                grads.pos_emb.row_mut(i).iter_mut().zip(&row).for_each(|(g, v)| *g += v);
                let id = trace.input_ids[i];
                grads.tok_emb.row_mut(id).iter_mut().zip(&row).for_each(|(g, v)| *g += v);
            }
        }
    }

    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::forward::forward;

    /// Spot-check a handful of analytic gradients against central
    /// differences on a linear-in-logits objective. The exhaustive check
    /// over a real loss lives in the gradient-checker module.
    #[test]
    fn analytic_gradients_match_finite_differences_spot() {
        let vocab = 10;
        let cfg = EncoderConfig::tiny(Mode::Casam, vocab, 2);
        let mut params = EncoderParams::init(&cfg, 11);
        let ids = vec![4, 5, 6, 7, 4];
        let mask = CausalMask::from_positions(ids.len(), &[0, 1, 4]).unwrap();
        let weights = [0.7, -1.3];

        let objective = |p: &EncoderParams| -> f64 {
            let t = forward(&cfg, p, &ids, Some(&mask), None).unwrap();
            t.logits.iter().zip(&weights).map(|(l, w)| l * w).sum()
        };

        let trace = forward(&cfg, &params, &ids, Some(&mask), None).unwrap();
        let grads = backward(&cfg, &params, &trace, &weights).unwrap();

        let probes = [
            ("tok_emb", 4usize, 3usize),
            ("b0.wq1", 2, 1),
            ("b0.wo", 5, 5),
            ("b0.ln1_gamma", 0, 2),
            ("b0.w2", 7, 0),
            ("classifier", 1, 1),
            ("pos_emb", 2, 6),
        ];
        // Large enough that central-difference rounding noise (about
        // ulp(loss) / eps) stays well under the tolerance even for the
        // near-zero attention-projection gradients at init scale.
        let eps = 1e-4;
        for (name, i, j) in probes {
            let analytic = grads
                .tensors()
                .into_iter()
                .find(|(n, _)| n == name)
                .map(|(_, m)| m.get(i, j))
                .unwrap();
            let original = params
                .tensors()
                .into_iter()
                .find(|(n, _)| n == name)
                .map(|(_, m)| m.get(i, j))
                .unwrap();

            for (n, m) in params.tensors_mut() {
                if n == name {
                    m.set(i, j, original + eps);
                }
            }
            let plus = objective(&params);
            for (n, m) in params.tensors_mut() {
                if n == name {
                    m.set(i, j, original - eps);
                }
            }
            let minus = objective(&params);
            for (n, m) in params.tensors_mut() {
                if n == name {
                    m.set(i, j, original);
                }
            }

            let fd = (plus - minus) / (2.0 * eps);
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-4, "{name}[{i}][{j}]: analytic {analytic} vs fd {fd}");
        }
    }

    #[test]
    fn ciesam_embedding_gradients_split_by_beta() {
        let vocab = 10;
        let mut cfg = EncoderConfig::tiny(Mode::Ciesam, vocab, 1);
        cfg.beta = 0.25;
        let params = EncoderParams::init(&cfg, 3);
        // Raw and graph sequences use disjoint ids so the split is visible.
        let ids = vec![4, 5];
        let graph = vec![8, 9];
        let trace = forward(&cfg, &params, &ids, None, Some(&graph)).unwrap();
        let grads = backward(&cfg, &params, &trace, &[1.0]).unwrap();

        // A raw-only id and its graph counterpart at the same position see
        // gradients in ratio beta : (1 - beta).
        let raw_norm: f64 = grads.tok_emb.row(4).iter().map(|v| v * v).sum();
        let graph_norm: f64 = grads.tok_emb.row(8).iter().map(|v| v * v).sum();
        assert!(raw_norm > 0.0 && graph_norm > 0.0);
        let ratio = (raw_norm / graph_norm).sqrt();
        assert!(
            (ratio - cfg.beta / (1.0 - cfg.beta)).abs() < 1e-9,
            "ratio {ratio}"
        );
    }

    #[test]
    fn backward_rejects_mismatched_dlogits() {
        let cfg = EncoderConfig::tiny(Mode::Baseline, 8, 2);
        let params = EncoderParams::init(&cfg, 0);
        let trace = forward(&cfg, &params, &[4, 5], None, None).unwrap();
        assert!(backward(&cfg, &params, &trace, &[1.0]).is_err());
    }
}
