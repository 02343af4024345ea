//! Robustness-aware checkpoint selection.
//!
//! The selected model is the one maximizing a weighted blend of clean dev
//! micro-F1 and the mean certified ratio under the sampled attack suite,
//! rather than dev F1 alone.

use crate::encoder::EncoderParams;
use crate::{Error, Result};

/// Dev-set numbers attached to a checkpoint before it becomes eligible
/// for selection.
#[derive(Debug, Clone, PartialEq)]
pub struct DevMetrics {
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// Mean certified ratio over attack kinds, as a percentage in [0, 100].
    /// `None` when no attack kind had any applicable site on the dev set.
    pub mean_cr: Option<f64>,
}

/// One per-epoch snapshot: the parameters plus the dev metrics they scored.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub epoch: usize,
    pub params: EncoderParams,
    pub metrics: DevMetrics,
}

fn score(m: &DevMetrics, w_perf: f64, w_robust: f64) -> f64 {
    // CR is stored as a percentage; the blend uses the [0, 1] fraction so
    // both terms share a scale. A corpus with no attackable site anywhere
    // contributes zero robustness signal for every checkpoint alike.
    w_perf * m.micro_f1 + w_robust * m.mean_cr.map_or(0.0, |cr| cr / 100.0)
}

/// Picks the checkpoint with the highest blended score; ties go to the
/// earliest epoch.
pub fn select_model(checkpoints: &[Checkpoint], w_perf: f64, w_robust: f64) -> Result<&Checkpoint> {
    if checkpoints.is_empty() {
        return Err(Error::invalid("no checkpoints to select from"));
    }
    if !w_perf.is_finite() || !w_robust.is_finite() || w_perf < 0.0 || w_robust < 0.0 {
        return Err(Error::config(format!(
            "selection weights must be finite and nonnegative (got {w_perf}, {w_robust})"
        )));
    }
    if w_perf == 0.0 && w_robust == 0.0 {
        return Err(Error::config("at least one selection weight must be positive"));
    }
    for c in checkpoints {
        let m = &c.metrics;
        let cr_ok = m.mean_cr.map_or(true, |cr| cr.is_finite() && (0.0..=100.0).contains(&cr));
        if !m.micro_f1.is_finite() || !(0.0..=1.0).contains(&m.micro_f1) || !cr_ok {
            return Err(Error::invalid(format!(
                "checkpoint at epoch {} has out-of-range metrics",
                c.epoch
            )));
        }
    }
    let mut best = &checkpoints[0];
    let mut best_score = score(&best.metrics, w_perf, w_robust);
    for c in &checkpoints[1..] {
        let s = score(&c.metrics, w_perf, w_robust);
        if s > best_score {
            best = c;
            best_score = s;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, Mode};

    fn ckpt(epoch: usize, micro: f64, cr: Option<f64>) -> Checkpoint {
        let cfg = EncoderConfig::tiny(Mode::Baseline, 8, 2);
        Checkpoint {
            epoch,
            params: EncoderParams::zeros(&cfg),
            metrics: DevMetrics { micro_f1: micro, macro_f1: micro, mean_cr: cr },
        }
    }

    #[test]
    fn robust_model_beats_higher_f1_fragile_model() {
        // 0.5*0.70 + 0.5*0.90 = 0.80 vs 0.5*0.80 + 0.5*0.60 = 0.70.
        let cs = vec![ckpt(1, 0.80, Some(60.0)), ckpt(2, 0.70, Some(90.0))];
        let best = select_model(&cs, 0.5, 0.5).unwrap();
        assert_eq!(best.epoch, 2);
    }

    #[test]
    fn equal_robustness_falls_back_to_f1_order() {
        let cs = vec![ckpt(1, 0.6, Some(75.0)), ckpt(2, 0.7, Some(75.0))];
        assert_eq!(select_model(&cs, 0.5, 0.5).unwrap().epoch, 2);
    }

    #[test]
    fn exact_ties_go_to_the_earliest_epoch() {
        let cs = vec![ckpt(3, 0.7, Some(80.0)), ckpt(5, 0.7, Some(80.0))];
        assert_eq!(select_model(&cs, 0.5, 0.5).unwrap().epoch, 3);
    }

    #[test]
    fn argmax_is_invariant_to_positive_weight_scaling() {
        let cs = vec![ckpt(1, 0.80, Some(60.0)), ckpt(2, 0.70, Some(90.0)), ckpt(3, 0.5, None)];
        let a = select_model(&cs, 0.5, 0.5).unwrap().epoch;
        let b = select_model(&cs, 2.0, 2.0).unwrap().epoch;
        assert_eq!(a, b);
    }

    #[test]
    fn missing_cr_scores_zero_robustness() {
        let cs = vec![ckpt(1, 0.9, None), ckpt(2, 0.5, Some(100.0))];
        // 0.45 vs 0.75.
        assert_eq!(select_model(&cs, 0.5, 0.5).unwrap().epoch, 2);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(select_model(&[], 0.5, 0.5).is_err());
        let cs = vec![ckpt(1, 0.7, Some(50.0))];
        assert!(select_model(&cs, 0.0, 0.0).is_err());
        assert!(select_model(&cs, -1.0, 0.5).is_err());
        let bad = vec![ckpt(1, 1.7, Some(50.0))];
        assert!(select_model(&bad, 0.5, 0.5).is_err());
    }
}
