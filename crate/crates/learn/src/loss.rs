/// Cross-entropy of `softmax(logits)` against class `target`, and its
/// gradient with respect to the logits (`softmax - one_hot`).
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    assert!(target < logits.len(), "target {target} out of range for {} logits", logits.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|v| (v - max).exp()).sum();
    let loss = max + sum.ln() - logits[target];
    let mut grad: Vec<f64> = logits.iter().map(|v| (v - max).exp() / sum).collect();
    grad[target] -= 1.0;
    (loss, grad)
}
