use crate::error::{Error, Result};

/// Lower clamp applied to the true-class probability before the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Single-sample cross-entropy `-ln p[true_class]`.
pub fn cross_entropy(probabilities: &[f64], true_class: usize) -> Result<f64> {
    let p = probabilities.get(true_class).ok_or_else(|| {
        Error::Usage(format!(
            "class {true_class} out of range for {} probabilities",
            probabilities.len()
        ))
    })?;
    Ok(-p.max(PROBABILITY_FLOOR).ln())
}

/// Gradient of [`cross_entropy`] composed with softmax, with respect to the
/// logits: `softmax(z) - one_hot(true_class)`.
pub fn cross_entropy_logit_grad(probabilities: &[f64], true_class: usize) -> Result<Vec<f64>> {
    if true_class >= probabilities.len() {
        return Err(Error::Usage(format!(
            "class {true_class} out of range for {} probabilities",
            probabilities.len()
        )));
    }
    let mut g = probabilities.to_vec();
    g[true_class] -= 1.0;
    Ok(g)
}
