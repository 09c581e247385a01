//! Temporal Fire Module: a squeeze/expand block whose filters never span
//! more than one channel column.
//!
//! ```text
//! input ─ 1x1 squeeze ─ LReLU ─┬─ 1x1 expand ─ LReLU ──┐
//!                              └─ Rx1 expand ─ LReLU ──┴─ concat (depth)
//! ```

use rand::Rng;

use super::activation::{leaky_relu_backward, leaky_relu_tensor};
use crate::error::{Error, Result};
use crate::tensor::{conv2d, conv2d_backward_into, FilterBank, Padding, Tensor};
use crate::training::init::glorot_fill;

#[derive(Debug, Clone, PartialEq)]
pub struct FireModule {
    pub squeeze: FilterBank,
    pub expand_pointwise: FilterBank,
    pub expand_temporal: FilterBank,
    pub alpha: f64,
}

/// Activations kept from the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct FireCache {
    input: Tensor,
    squeezed: Tensor,
    pointwise: Tensor,
    temporal: Tensor,
}

impl FireModule {
    /// Zero-initialized module; `out_depth` must be even so the two expand
    /// branches have equal width.
    pub fn new(
        in_depth: usize,
        squeeze_depth: usize,
        out_depth: usize,
        expand_temporal_rows: usize,
        alpha: f64,
    ) -> Result<Self> {
        if out_depth == 0 || !out_depth.is_multiple_of(2) {
            return Err(Error::Spec(format!(
                "fire out_depth must be a positive even number, got {out_depth}"
            )));
        }
        if squeeze_depth == 0 || squeeze_depth > out_depth {
            return Err(Error::Spec(format!(
                "fire squeeze_depth must be in 1..={out_depth}, got {squeeze_depth}"
            )));
        }
        if expand_temporal_rows == 0 {
            return Err(Error::Spec("fire expand_temporal_rows must be positive".into()));
        }
        let half = out_depth / 2;
        Ok(FireModule {
            squeeze: FilterBank::zeros(1, 1, in_depth, squeeze_depth),
            expand_pointwise: FilterBank::zeros(1, 1, squeeze_depth, half),
            expand_temporal: FilterBank::zeros(expand_temporal_rows, 1, squeeze_depth, half),
            alpha,
        })
    }

    pub fn out_depth(&self) -> usize {
        self.expand_pointwise.out_depth + self.expand_temporal.out_depth
    }

    pub fn banks(&self) -> [&FilterBank; 3] {
        [&self.squeeze, &self.expand_pointwise, &self.expand_temporal]
    }

    pub fn banks_mut(&mut self) -> [&mut FilterBank; 3] {
        [&mut self.squeeze, &mut self.expand_pointwise, &mut self.expand_temporal]
    }

    pub fn parameter_count(&self) -> usize {
        self.banks().iter().map(|b| b.parameter_count()).sum()
    }

    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for bank in self.banks_mut() {
            glorot_fill(bank, rng);
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, FireCache)> {
        let squeezed = leaky_relu_tensor(&conv2d(input, &self.squeeze, Padding::Same)?, self.alpha);
        let pointwise = leaky_relu_tensor(&conv2d(&squeezed, &self.expand_pointwise, Padding::Same)?, self.alpha);
        let temporal = leaky_relu_tensor(&conv2d(&squeezed, &self.expand_temporal, Padding::Same)?, self.alpha);
        let out = Tensor::concat_depth(&[&pointwise, &temporal])?;
        Ok((
            out,
            FireCache {
                input: input.clone(),
                squeezed,
                pointwise,
                temporal,
            },
        ))
    }

    /// Backpropagates `grad` (output-shaped), accumulating parameter
    /// gradients into `grads` and returning the input gradient.
    pub fn backward(&self, cache: &FireCache, grad: &Tensor, grads: &mut FireModule) -> Result<Tensor> {
        let mut halves = grad.split_depth(&[self.expand_pointwise.out_depth, self.expand_temporal.out_depth])?;
        let mut g_temporal = halves.pop().expect("two halves");
        let mut g_pointwise = halves.pop().expect("two halves");
        leaky_relu_backward(&cache.pointwise, &mut g_pointwise, self.alpha);
        leaky_relu_backward(&cache.temporal, &mut g_temporal, self.alpha);

        let sq = &cache.squeezed;
        let mut g_squeezed = Tensor::zeros(sq.rows(), sq.cols(), sq.depth());
        conv2d_backward_into(
            sq,
            &self.expand_pointwise,
            &g_pointwise,
            Padding::Same,
            Some(&mut g_squeezed),
            &mut grads.expand_pointwise,
        )?;
        conv2d_backward_into(
            sq,
            &self.expand_temporal,
            &g_temporal,
            Padding::Same,
            Some(&mut g_squeezed),
            &mut grads.expand_temporal,
        )?;
        leaky_relu_backward(sq, &mut g_squeezed, self.alpha);

        let x = &cache.input;
        let mut g_input = Tensor::zeros(x.rows(), x.cols(), x.depth());
        conv2d_backward_into(x, &self.squeeze, &g_squeezed, Padding::Same, Some(&mut g_input), &mut grads.squeeze)?;
        Ok(g_input)
    }
}
