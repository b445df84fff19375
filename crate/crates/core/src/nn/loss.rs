use super::Real;

/// Numerically stable softmax.
pub fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let m = logits.iter().cloned().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&x| (x - m).exp()).collect();
    let sum = exps.iter().fold(F::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Class-weighted cross-entropy on raw logits.
///
/// loss = -weight[label] * log softmax(logits)[label], computed through
/// log-sum-exp. Returns the loss and the gradient w.r.t. the logits.
pub fn weighted_cross_entropy<F: Real>(
    logits: &[F],
    label: usize,
    weights: &[F],
) -> (F, Vec<F>) {
    assert!(label < logits.len(), "label out of range");
    assert_eq!(weights.len(), logits.len(), "one weight per class");
    let w = weights[label];
    let m = logits.iter().cloned().fold(F::neg_infinity(), F::max);
    let sum = logits
        .iter()
        .map(|&x| (x - m).exp())
        .fold(F::zero(), |a, b| a + b);
    let lse = m + sum.ln();
    let loss = w * (lse - logits[label]);
    let mut grad: Vec<F> = logits.iter().map(|&x| w * (x - lse).exp()).collect();
    grad[label] -= w;
    (loss, grad)
}

/// Weighted binary cross-entropy on a single sigmoid logit.
///
/// Uses the max(z,0) - z*y + ln(1 + exp(-|z|)) form, stable for any logit.
/// Returns the loss and d(loss)/d(logit).
pub fn binary_cross_entropy<F: Real>(logit: F, target: bool, weight: F) -> (F, F) {
    let y = if target { F::one() } else { F::zero() };
    let loss = weight * (logit.max(F::zero()) - logit * y + (F::one() + (-logit.abs()).exp()).ln());
    let sig = F::one() / (F::one() + (-logit).exp());
    (loss, weight * (sig - y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_k() {
        let logits = [0.0f64; 9];
        let weights = [1.0f64; 9];
        let (loss, _) = weighted_cross_entropy(&logits, 3, &weights);
        assert!((loss - 9.0f64.ln()).abs() < 1e-12);
        assert!((loss - 2.1972).abs() < 1e-4);
    }

    #[test]
    fn confident_correct_logit_drives_loss_to_zero() {
        let mut logits = [0.0f64; 9];
        logits[2] = 30.0;
        let weights = [1.0f64; 9];
        let (loss, _) = weighted_cross_entropy(&logits, 2, &weights);
        assert!(loss < 1e-12, "loss {loss}");
    }

    #[test]
    fn weight_scales_loss_and_grad_linearly() {
        let logits = [0.3f64, -1.2, 0.7];
        let w1 = [1.0f64; 3];
        let w2 = [2.0f64; 3];
        let (l1, g1) = weighted_cross_entropy(&logits, 1, &w1);
        let (l2, g2) = weighted_cross_entropy(&logits, 1, &w2);
        assert!((l2 - 2.0 * l1).abs() < 1e-12);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_sums_to_one() {
        let s = softmax(&[1.0f64, 2.0, 3.0, -100.0, 50.0]);
        let sum: f64 = s.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weighted_ce_with_unit_weights_equals_unweighted() {
        let logits = [0.5f64, 1.5, -0.7];
        let weights = [1.0f64; 3];
        let (loss, _) = weighted_cross_entropy(&logits, 0, &weights);
        let probs = softmax(&logits);
        assert!((loss + probs[0].ln()).abs() < 1e-12);
    }

    #[test]
    fn bce_matches_direct_formula_and_is_stable() {
        let (loss, grad) = binary_cross_entropy(0.0f64, true, 1.0);
        assert!((loss - 2.0f64.ln()).abs() < 1e-12);
        assert!((grad + 0.5).abs() < 1e-12);

        // Extreme logits stay finite.
        let (loss, _) = binary_cross_entropy(500.0f64, false, 1.0);
        assert!(loss.is_finite() && loss > 400.0);
        let (loss, _) = binary_cross_entropy(-500.0f64, true, 1.0);
        assert!(loss.is_finite() && loss > 400.0);
        let (loss, _) = binary_cross_entropy(40.0f64, true, 1.0);
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn bce_weight_scales() {
        let (l1, g1) = binary_cross_entropy(0.7f64, false, 1.0);
        let (l3, g3) = binary_cross_entropy(0.7f64, false, 3.0);
        assert!((3.0 * l1 - l3).abs() < 1e-12);
        assert!((3.0 * g1 - g3).abs() < 1e-12);
    }
}
