//! Decoupled AdamW and global-norm gradient clipping.

use crate::encoder::EncoderParams;

/// AdamW hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// AdamW with decoupled weight decay: the decay term multiplies the
/// parameter directly instead of entering the moment estimates.
#[derive(Debug, Clone)]
pub struct AdamW {
    cfg: AdamWConfig,
    m: EncoderParams,
    v: EncoderParams,
    t: u64,
}

impl AdamW {
    /// Fresh optimizer state shaped like `params`.
    pub fn new(cfg: AdamWConfig, params: &EncoderParams) -> Self {
        AdamW { cfg, m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }

    /// One update: `theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)`.
    pub fn step(&mut self, params: &mut EncoderParams, grads: &EncoderParams) {
        self.t += 1;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let gs = grads.tensors();
        let ms = self.m.tensors_mut();
        // Walk all four parameter sets in lockstep; the canonical tensor
        // order guarantees alignment.
        let vs = self.v.tensors_mut();
        for (((_, theta), (_, g)), ((_, m), (_, v))) in
            params.tensors_mut().into_iter().zip(gs).zip(ms.into_iter().zip(vs))
        {
            let td = theta.data_mut();
            for (i, (mi, vi)) in m.data_mut().iter_mut().zip(v.data_mut()).enumerate() {
                let gi = g.data()[i];
                *mi = c.beta1 * *mi + (1.0 - c.beta1) * gi;
                *vi = c.beta2 * *vi + (1.0 - c.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                td[i] -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * td[i]);
            }
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }
}

/// Scales `grads` so their joint Euclidean norm is at most `max_norm`;
/// returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut EncoderParams, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm.is_finite() && norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}
