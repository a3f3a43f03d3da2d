use super::NnError;

/// Mean squared error and its gradient `2 (pred - target) / N`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if pred.len() != target.len() {
        return Err(NnError::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(NnError::Empty);
    }
    let n = pred.len() as f64;
    let mut sum = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            sum += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((sum / n, grad))
}
