use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Leaky rectifier: `x` for `x >= 0`, `alpha * x` otherwise.
#[inline]
pub fn leaky_relu(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

pub fn leaky_relu_tensor(t: &Tensor, alpha: f64) -> Tensor {
    t.map(|x| leaky_relu(x, alpha))
}

/// Multiplies `grad` by the LReLU derivative. `alpha > 0` preserves sign,
/// so the activation output alone determines the slope.
pub fn leaky_relu_backward(output: &Tensor, grad: &mut Tensor, alpha: f64) {
    for (g, &y) in grad.as_mut_slice().iter_mut().zip(output.as_slice()) {
        if y < 0.0 {
            *g *= alpha;
        }
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Usage("softmax of an empty vector".into()));
    }
    if let Some(i) = logits.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite logit {} at index {i}", logits[i])));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
