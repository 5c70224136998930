use crate::sensor::ClassLabel;

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Returns `(-log softmax(logits)[target], softmax - one_hot(target))`.
pub fn softmax_cross_entropy(logits: &[f64], target: ClassLabel) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    let t = target.index();
    let loss = log_sum - logits[t];
    let mut grad = softmax(logits);
    grad[t] -= 1.0;
    (loss, grad)
}
