//! Finite-difference validation of the analytic backward pass.
//!
//! The checker perturbs sampled parameter entries by `+/- epsilon`, re-runs
//! the forward pass, and compares the central-difference slope against the
//! analytic gradient. The objective is caller-supplied (the CLI uses the
//! training loss), so the checker stays agnostic about what is being
//! optimized.

use super::backward::backward;
use super::forward::forward;
use super::{EncoderConfig, EncoderParams};
use crate::oie::CausalMask;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One input document for the checker.
#[derive(Debug, Clone)]
pub struct GradCheckInput {
    pub ids: Vec<usize>,
    /// Document-aligned mask, required when the config runs in casam mode.
    pub mask: Option<CausalMask>,
    /// Linearized-graph ids, required when the config runs in ciesam mode.
    pub graph_ids: Option<Vec<usize>>,
}

/// Outcome of a finite-difference sweep.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error over all sampled entries.
    pub max_rel_err: f64,
    /// Tensor name and `(row, col)` of the worst entry.
    pub worst_tensor: String,
    pub worst_index: (usize, usize),
    /// Number of parameter entries compared.
    pub checked: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Sweeps sampled parameters of every tensor and reports the worst relative
/// error `|g_analytic - g_fd| / max(|g_analytic|, |g_fd|, 1e-8)`.
///
/// `objective(item_index, logits)` returns the loss contribution of one item
/// and its gradient with respect to the logits; contributions are summed
/// over `inputs`. `epsilon` must lie in `[1e-6, 1e-3]` — larger steps
/// truncate, smaller ones drown in rounding noise.
pub fn grad_check<F>(
    cfg: &EncoderConfig,
    params: &EncoderParams,
    inputs: &[GradCheckInput],
    objective: F,
    epsilon: f64,
    tolerance: f64,
    samples_per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: Fn(usize, &[f64]) -> (f64, Vec<f64>),
{
    cfg.validate()?;
    if !(1e-6..=1e-3).contains(&epsilon) {
        return Err(Error::invalid(format!(
            "epsilon {epsilon} outside [1e-6, 1e-3]"
        )));
    }
    if inputs.is_empty() {
        return Err(Error::invalid("gradient check needs at least one input"));
    }
    if samples_per_tensor == 0 {
        return Err(Error::invalid("samples_per_tensor must be positive"));
    }

    let total_loss = |p: &EncoderParams| -> Result<f64> {
        let mut sum = 0.0;
        for (idx, item) in inputs.iter().enumerate() {
            let trace = forward(cfg, p, &item.ids, item.mask.as_ref(), item.graph_ids.as_deref())?;
            let (loss, _) = objective(idx, &trace.logits);
            sum += loss;
        }
        Ok(sum)
    };

    // Analytic gradients, summed over items.
    let mut analytic = params.zeros_like();
    for (idx, item) in inputs.iter().enumerate() {
        let trace = forward(cfg, params, &item.ids, item.mask.as_ref(), item.graph_ids.as_deref())?;
        let (_, dlogits) = objective(idx, &trace.logits);
        let g = backward(cfg, params, &trace, &dlogits)?;
        analytic.add_scaled(&g, 1.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.clone();
    let mut max_rel_err = 0.0_f64;
    let mut worst_tensor = String::new();
    let mut worst_index = (0, 0);
    let mut checked = 0;

    let shapes: Vec<(String, usize, usize)> = params
        .tensors()
        .into_iter()
        .map(|(name, m)| (name, m.rows(), m.cols()))
        .collect();

    for (name, rows, cols) in shapes {
        let size = rows * cols;
        let picks: Vec<usize> = if size <= samples_per_tensor {
            (0..size).collect()
        } else {
            let mut seen = std::collections::BTreeSet::new();
            while seen.len() < samples_per_tensor {
                seen.insert(rng.gen_range(0..size));
            }
            seen.into_iter().collect()
        };

        for flat in picks {
            let (i, j) = (flat / cols, flat % cols);
            let original = entry(&work, &name, i, j);

            set_entry(&mut work, &name, i, j, original + epsilon);
            let plus = total_loss(&work)?;
            set_entry(&mut work, &name, i, j, original - epsilon);
            let minus = total_loss(&work)?;
            set_entry(&mut work, &name, i, j, original);

            let fd = (plus - minus) / (2.0 * epsilon);
            let ga = entry(&analytic, &name, i, j);
            let rel = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1e-8);
            checked += 1;
            if rel > max_rel_err {
                max_rel_err = rel;
                worst_tensor = name.clone();
                worst_index = (i, j);
            }
        }
    }

    Ok(GradCheckReport {
        max_rel_err,
        worst_tensor,
        worst_index,
        checked,
        epsilon,
        tolerance,
        passed: max_rel_err <= tolerance,
    })
}

fn entry(params: &EncoderParams, name: &str, i: usize, j: usize) -> f64 {
    params
        .tensors()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, m)| m.get(i, j))
        .expect("tensor name from the same walk")
}

fn set_entry(params: &mut EncoderParams, name: &str, i: usize, j: usize, v: f64) {
    for (n, m) in params.tensors_mut() {
        if n == name {
            m.set(i, j, v);
            return;
        }
    }
    panic!("tensor name from the same walk");
}
