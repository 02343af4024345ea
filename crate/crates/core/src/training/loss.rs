//! Binary cross-entropy over independent per-label sigmoids.

use crate::{Error, Result};
use std::collections::BTreeSet;

/// Probability clip bounds; keeps `ln` finite at saturated predictions.
const CLIP: f64 = 1e-12;

/// Multi-hot target vector for a gold label set.
pub fn targets_from_labels(labels: &BTreeSet<usize>, num_labels: usize) -> Vec<f64> {
    let mut t = vec![0.0; num_labels];
    for &l in labels {
        if l < num_labels {
            t[l] = 1.0;
        }
    }
    t
}

/// Mean over labels of `-[y ln p + (1 - y) ln(1 - p)]`, with `p` clipped to
/// `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(probs: &[f64], gold: &BTreeSet<usize>) -> Result<f64> {
    let targets = targets_from_labels(gold, probs.len());
    bce_with_dlogits(probs, &targets).map(|(loss, _)| loss)
}

/// Loss plus its gradient with respect to the *logits*,
/// `d loss / d logit_m = (p_m - y_m) / M`.
///
/// Taking the gradient at the logit level keeps the sigmoid and the loss
/// fused, which is both cheaper and numerically stabler than chaining
/// through `d loss / d p`.
pub fn bce_with_dlogits(probs: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if probs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} probabilities vs {} targets",
            probs.len(),
            targets.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::invalid("loss over an empty label space"));
    }
    let m = probs.len() as f64;
    let mut loss = 0.0;
    let mut dlogits = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.iter().zip(targets) {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::NonFinite(format!("probability {p} outside [0, 1]")));
        }
        let pc = p.clamp(CLIP, 1.0 - CLIP);
        loss += -(y * pc.ln() + (1.0 - y) * (1.0 - pc).ln());
        dlogits.push((p - y) / m);
    }
    Ok((loss / m, dlogits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &[usize]) -> BTreeSet<usize> {
        labels.iter().copied().collect()
    }

    #[test]
    fn uniform_half_probabilities_give_ln_two() {
        let loss = bce_loss(&[0.5, 0.5, 0.5], &set(&[1])).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions_vanish() {
        let loss = bce_loss(&[1.0 - 1e-12, 1e-12], &set(&[0])).unwrap();
        assert!(loss <= 1e-11);
    }

    #[test]
    fn hand_computed_two_label_case() {
        // p = [0.9, 0.2], y = {0}: loss = (-ln 0.9 - ln 0.8) / 2.
        let loss = bce_loss(&[0.9, 0.2], &set(&[0])).unwrap();
        let want = (-(0.9_f64.ln()) - (0.8_f64.ln())) / 2.0;
        assert!((loss - want).abs() < 1e-15);
    }

    #[test]
    fn saturated_probabilities_stay_finite() {
        let loss = bce_loss(&[1.0, 0.0], &set(&[1])).unwrap();
        assert!(loss.is_finite());
        assert!(loss > 10.0);
    }

    #[test]
    fn rejects_non_finite_and_out_of_range() {
        assert!(bce_loss(&[f64::NAN], &set(&[0])).is_err());
        assert!(bce_loss(&[1.5], &set(&[0])).is_err());
        assert!(bce_loss(&[], &set(&[])).is_err());
    }

    #[test]
    fn dlogits_match_finite_difference_of_loss_in_logit_space() {
        let logits = [0.3_f64, -1.2, 2.0];
        let targets = [1.0, 0.0, 1.0];
        let probs: Vec<f64> = logits.iter().map(|l| 1.0 / (1.0 + (-l).exp())).collect();
        let (_, dl) = bce_with_dlogits(&probs, &targets).unwrap();
        let eps = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits;
            plus[i] += eps;
            let mut minus = logits;
            minus[i] -= eps;
            let at = |ls: &[f64; 3]| {
                let ps: Vec<f64> = ls.iter().map(|l| 1.0 / (1.0 + (-l).exp())).collect();
                bce_with_dlogits(&ps, &targets).unwrap().0
            };
            let fd = (at(&plus) - at(&minus)) / (2.0 * eps);
            assert!((dl[i] - fd).abs() < 1e-9, "logit {i}");
        }
    }

    #[test]
    fn targets_are_multi_hot() {
        assert_eq!(targets_from_labels(&set(&[0, 2]), 4), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(targets_from_labels(&set(&[]), 2), vec![0.0, 0.0]);
    }
}
