use rand::Rng;

use crate::tensor::{DenseWeights, FilterBank};

/// Half-width `sqrt(6 / (fan_in + fan_out))` of the Glorot uniform range.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// One Glorot-uniform sample on `[-L, L]`.
pub fn glorot_uniform_init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> f64 {
    assert!(fan_in >= 1 && fan_out >= 1, "fan_in and fan_out must be >= 1");
    let limit = glorot_limit(fan_in, fan_out);
    rng.random_range(-limit..=limit)
}

/// Convolution fans count the receptive field: `R * C * in` and `R * C * out`.
/// Biases are zeroed.
pub fn glorot_fill<R: Rng + ?Sized>(bank: &mut FilterBank, rng: &mut R) {
    let field = bank.filter_rows * bank.filter_cols;
    let (fan_in, fan_out) = (field * bank.in_depth, field * bank.out_depth);
    for w in bank.weights.iter_mut() {
        *w = glorot_uniform_init(fan_in, fan_out, rng);
    }
    bank.biases.fill(0.0);
}

pub fn glorot_fill_dense<R: Rng + ?Sized>(layer: &mut DenseWeights, rng: &mut R) {
    let (fan_in, fan_out) = (layer.in_size, layer.out_size);
    for w in layer.weights.iter_mut() {
        *w = glorot_uniform_init(fan_in, fan_out, rng);
    }
    layer.biases.fill(0.0);
}
