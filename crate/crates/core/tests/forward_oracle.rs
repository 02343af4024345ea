//! The encoder's forward pass against a from-scratch reimplementation.
//!
//! The reference below shares no code with the library: plain `Vec<Vec<f64>>`
//! matrices, straight-line loops, and its own mask expansion. Any structural
//! mistake in either implementation — mixing order, mask alignment, residual
//! wiring, normalization epsilon, the classifier contraction — shows up as a
//! disagreement far above the 1e-12 gate.

use causal_attn::corpus::{CLS_ID, PAD_ID};
use causal_attn::encoder::{forward, EncoderConfig, EncoderParams, Mat, Mode};
use causal_attn::oie::CausalMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = Vec<Vec<f64>>;

fn to_rows(m: &Mat) -> M {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

fn matmul(a: &M, b: &M) -> M {
    let (n, k, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            let mut acc = 0.0;
            for l in 0..k {
                acc += a[i][l] * b[l][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn matmul_nt(a: &M, b: &M) -> M {
    let (n, p) = (a.len(), b.len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            let mut acc = 0.0;
            for l in 0..a[0].len() {
                acc += a[i][l] * b[j][l];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|v| v / sum).collect()
}

fn layer_norm(x: &M, gamma: &[f64], beta: &[f64]) -> M {
    let d = x[0].len() as f64;
    x.iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let sd = (var + 1e-5).sqrt();
            row.iter()
                .enumerate()
                .map(|(j, v)| gamma[j] * (v - mean) / sd + beta[j])
                .collect()
        })
        .collect()
}

fn gelu(u: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * u * (1.0 + (c * (u + 0.044715 * u.powi(3))).tanh())
}

/// Straight-line forward pass: embeddings, blocks, classifier, sigmoid.
fn reference_forward(
    cfg: &EncoderConfig,
    params: &EncoderParams,
    ids: &[usize],
    mask: Option<&CausalMask>,
    graph_ids: Option<&[usize]>,
) -> Vec<f64> {
    let keep = if 1 + ids.len() > cfg.n_max { cfg.n_max - 1 } else { ids.len() };
    let ids = &ids[..keep];
    let d = cfg.embed_dim;

    // Token + position embeddings for a [CLS]-prefixed sequence.
    let embed = |seq: &[usize]| -> M {
        let mut with_cls = vec![CLS_ID];
        with_cls.extend_from_slice(seq);
        with_cls
            .iter()
            .enumerate()
            .map(|(pos, &id)| {
                (0..d).map(|j| params.tok_emb.get(id, j) + params.pos_emb.get(pos, j)).collect()
            })
            .collect()
    };

    let x0 = match cfg.mode {
        Mode::Ciesam => {
            let g = graph_ids.unwrap();
            let mut g: Vec<usize> = g.iter().take(keep).copied().collect();
            g.resize(keep, PAD_ID);
            let x = embed(ids);
            let xg = embed(&g);
            x.iter()
                .zip(&xg)
                .map(|(r, rg)| {
                    r.iter().zip(rg).map(|(a, b)| cfg.beta * a + (1.0 - cfg.beta) * b).collect()
                })
                .collect()
        }
        _ => embed(ids),
    };

    // [CLS]-expanded 0/1 mask: row and column 0 all ones, rest shifted.
    let a: Option<M> = match cfg.mode {
        Mode::Casam => {
            let m = mask.unwrap();
            let n = keep + 1;
            Some(
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                if i == 0 || j == 0 {
                                    1.0
                                } else if m.get(i - 1, j - 1) {
                                    1.0
                                } else {
                                    0.0
                                }
                            })
                            .collect()
                    })
                    .collect(),
            )
        }
        _ => None,
    };

    let mut x = x0;
    for bp in &params.blocks {
        let n = x.len();
        let mut concat = vec![vec![0.0; d]; n];
        for h in 0..cfg.heads {
            let q = matmul(&x, &to_rows(&bp.wq[h]));
            let k = matmul(&x, &to_rows(&bp.wk[h]));
            let v = matmul(&x, &to_rows(&bp.wv[h]));
            let mut s = matmul_nt(&q, &k);
            let scale = 1.0 / (d as f64).sqrt();
            for row in &mut s {
                for val in row.iter_mut() {
                    *val *= scale;
                }
            }
            if let Some(a) = &a {
                for i in 0..n {
                    for j in 0..n {
                        s[i][j] = cfg.alpha * s[i][j] + (1.0 - cfg.alpha) * s[i][j] * a[i][j];
                    }
                }
            }
            let p: M = s.iter().map(|row| softmax_row(row)).collect();
            let o = matmul(&p, &v);
            for i in 0..n {
                for j in 0..cfg.head_dim {
                    concat[i][h * cfg.head_dim + j] = o[i][j];
                }
            }
        }
        let mut attn = matmul(&concat, &to_rows(&bp.wo));
        for row in &mut attn {
            for (j, val) in row.iter_mut().enumerate() {
                *val += bp.bo.get(0, j);
            }
        }

        let r1: M = x
            .iter()
            .zip(&attn)
            .map(|(xr, ar)| xr.iter().zip(ar).map(|(a, b)| a + b).collect())
            .collect();
        let g1: Vec<f64> = (0..d).map(|j| bp.ln1_gamma.get(0, j)).collect();
        let b1v: Vec<f64> = (0..d).map(|j| bp.ln1_beta.get(0, j)).collect();
        let z1 = layer_norm(&r1, &g1, &b1v);

        let mut h1 = matmul(&z1, &to_rows(&bp.w1));
        for row in &mut h1 {
            for (j, val) in row.iter_mut().enumerate() {
                *val += bp.b1.get(0, j);
            }
        }
        let gact: M = h1.iter().map(|row| row.iter().map(|&u| gelu(u)).collect()).collect();
        let mut f = matmul(&gact, &to_rows(&bp.w2));
        for row in &mut f {
            for (j, val) in row.iter_mut().enumerate() {
                *val += bp.b2.get(0, j);
            }
        }

        let r2: M = z1
            .iter()
            .zip(&f)
            .map(|(zr, fr)| zr.iter().zip(fr).map(|(a, b)| a + b).collect())
            .collect();
        let g2: Vec<f64> = (0..d).map(|j| bp.ln2_gamma.get(0, j)).collect();
        let b2v: Vec<f64> = (0..d).map(|j| bp.ln2_beta.get(0, j)).collect();
        x = layer_norm(&r2, &g2, &b2v);
    }

    (0..cfg.num_labels)
        .map(|m| {
            let logit: f64 = (0..d).map(|a| x[0][a] * params.classifier.get(a, m)).sum();
            1.0 / (1.0 + (-logit).exp())
        })
        .collect()
}

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> CausalMask {
    let count = rng.gen_range(0..=n);
    let mut positions: Vec<usize> = (0..n).collect();
    for i in (1..positions.len()).rev() {
        positions.swap(i, rng.gen_range(0..=i));
    }
    positions.truncate(count);
    CausalMask::from_positions(n, &positions).unwrap()
}

fn check_mode(mode: Mode, seeds: std::ops::Range<u64>) {
    let vocab = 24;
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = EncoderConfig::tiny(mode, vocab, 3);
        cfg.alpha = rng.gen_range(0.0..=1.0);
        cfg.beta = rng.gen_range(0.0..=1.0);
        cfg.blocks = rng.gen_range(1..=2);
        let params = EncoderParams::init(&cfg, seed ^ 0xABCD);

        let len = rng.gen_range(1..=12);
        let ids: Vec<usize> = (0..len).map(|_| rng.gen_range(4..vocab)).collect();
        let mask = random_mask(&mut rng, len);
        let glen = rng.gen_range(0..=14);
        let graph_ids: Vec<usize> = (0..glen).map(|_| rng.gen_range(4..vocab)).collect();

        let trace = forward(&cfg, &params, &ids, Some(&mask), Some(&graph_ids)).unwrap();
        let expected = reference_forward(&cfg, &params, &ids, Some(&mask), Some(&graph_ids));

        assert_eq!(trace.probs.len(), expected.len());
        for (got, want) in trace.probs.iter().zip(&expected) {
            assert!(
                (got - want).abs() <= 1e-12,
                "{mode} seed {seed}: prob {got} vs reference {want}"
            );
        }
    }
}

#[test]
fn baseline_matches_the_reference_on_100_random_inputs() {
    check_mode(Mode::Baseline, 0..100);
}

#[test]
fn casam_matches_the_reference_on_100_random_inputs() {
    check_mode(Mode::Casam, 100..200);
}

#[test]
fn ciesam_matches_the_reference_on_100_random_inputs() {
    check_mode(Mode::Ciesam, 200..300);
}

/// Truncation must agree too: the mask shrinks to the kept prefix and the
/// graph sequence aligns to it.
#[test]
fn truncated_inputs_match_the_reference() {
    for mode in [Mode::Baseline, Mode::Casam, Mode::Ciesam] {
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        let vocab = 24;
        let mut cfg = EncoderConfig::tiny(mode, vocab, 2);
        cfg.truncate = true; // n_max 16, so 20 tokens force a cut
        let params = EncoderParams::init(&cfg, 5);
        let ids: Vec<usize> = (0..20).map(|_| rng.gen_range(4..vocab)).collect();
        let mask = random_mask(&mut rng, ids.len());
        let graph_ids: Vec<usize> = (0..6).map(|_| rng.gen_range(4..vocab)).collect();

        let trace = forward(&cfg, &params, &ids, Some(&mask), Some(&graph_ids)).unwrap();
        let expected = reference_forward(&cfg, &params, &ids, Some(&mask), Some(&graph_ids));
        for (got, want) in trace.probs.iter().zip(&expected) {
            assert!((got - want).abs() <= 1e-12, "{mode}: {got} vs {want}");
        }
    }
}
