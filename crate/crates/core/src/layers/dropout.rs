use rand::Rng;

use super::Mode;
use crate::tensor::Tensor;

/// Inverted dropout. In train mode each unit is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; the returned mask
/// holds the per-unit multiplier. Infer mode is the identity.
pub fn dropout_forward<R: Rng + ?Sized>(input: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> (Tensor, Option<Tensor>) {
    if mode == Mode::Infer || rate == 0.0 {
        return (input.clone(), None);
    }
    let keep = 1.0 / (1.0 - rate);
    let mut mask = input.clone();
    for m in mask.as_mut_slice() {
        *m = if rng.random::<f64>() < rate { 0.0 } else { keep };
    }
    let mut out = input.clone();
    for (o, m) in out.as_mut_slice().iter_mut().zip(mask.as_slice()) {
        *o *= m;
    }
    (out, Some(mask))
}

pub fn dropout_backward(mask: Option<&Tensor>, grad: &mut Tensor) {
    if let Some(mask) = mask {
        for (g, m) in grad.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *g *= m;
        }
    }
}
