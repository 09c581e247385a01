//! Per-map batch normalization for convolutional activations.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const BATCHNORM_EPSILON: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub epsilon: f64,
    pub momentum: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Vec<Tensor>,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(maps: usize) -> Self {
        BatchNorm {
            scale: vec![1.0; maps],
            shift: vec![0.0; maps],
            running_mean: vec![0.0; maps],
            running_var: vec![1.0; maps],
            epsilon: BATCHNORM_EPSILON,
            momentum: BATCHNORM_MOMENTUM,
        }
    }

    pub fn maps(&self) -> usize {
        self.scale.len()
    }

    /// Scale and shift; running statistics are state, not parameters.
    pub fn parameter_count(&self) -> usize {
        2 * self.maps()
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        if x.depth() != self.maps() {
            return Err(Error::shape("depth", self.maps(), x.depth()));
        }
        Ok(())
    }

    pub fn forward_infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check(x)?;
        let mut out = x.clone();
        let d = self.maps();
        let coef: Vec<(f64, f64)> = (0..d)
            .map(|k| {
                let a = self.scale[k] / (self.running_var[k] + self.epsilon).sqrt();
                (a, self.shift[k] - a * self.running_mean[k])
            })
            .collect();
        for px in out.as_mut_slice().chunks_exact_mut(d) {
            for (v, (a, b)) in px.iter_mut().zip(&coef) {
                *v = a * *v + b;
            }
        }
        Ok(out)
    }

    /// Normalizes with batch statistics and updates the running averages.
    pub fn forward_train(&mut self, batch: &[Tensor]) -> Result<(Vec<Tensor>, BatchNormCache)> {
        if batch.len() < 2 {
            return Err(Error::Usage(format!(
                "batch normalization in train mode needs a batch of at least 2, got {}",
                batch.len()
            )));
        }
        for x in batch {
            self.check(x)?;
            if x.shape() != batch[0].shape() {
                return Err(Error::shape("batch element length", batch[0].len(), x.len()));
            }
        }
        let d = self.maps();
        let n = (batch.len() * batch[0].rows() * batch[0].cols()) as f64;
        let mut mean = vec![0.0; d];
        for x in batch {
            for px in x.as_slice().chunks_exact(d) {
                for (m, v) in mean.iter_mut().zip(px) {
                    *m += v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for x in batch {
            for px in x.as_slice().chunks_exact(d) {
                for ((s, v), m) in var.iter_mut().zip(px).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
        }
        var.iter_mut().for_each(|s| *s /= n);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();

        let mut normalized = Vec::with_capacity(batch.len());
        let mut outputs = Vec::with_capacity(batch.len());
        for x in batch {
            let mut xn = x.clone();
            let mut y = x.clone();
            for (pn, py) in xn.as_mut_slice().chunks_exact_mut(d).zip(y.as_mut_slice().chunks_exact_mut(d)) {
                for k in 0..d {
                    let h = (pn[k] - mean[k]) * inv_std[k];
                    pn[k] = h;
                    py[k] = self.scale[k] * h + self.shift[k];
                }
            }
            normalized.push(xn);
            outputs.push(y);
        }
        for k in 0..d {
            self.running_mean[k] = self.momentum * self.running_mean[k] + (1.0 - self.momentum) * mean[k];
            self.running_var[k] = self.momentum * self.running_var[k] + (1.0 - self.momentum) * var[k];
        }
        Ok((outputs, BatchNormCache { normalized, inv_std }))
    }

    /// Input gradients for the whole batch; scale/shift gradients are
    /// accumulated into `grads`.
    pub fn backward(&self, cache: &BatchNormCache, upstream: &[Tensor], grads: &mut BatchNorm) -> Result<Vec<Tensor>> {
        if upstream.len() != cache.normalized.len() {
            return Err(Error::shape("batch size", cache.normalized.len(), upstream.len()));
        }
        let d = self.maps();
        let n = (upstream.len() * upstream[0].rows() * upstream[0].cols()) as f64;
        // Per map: sum of dy and sum of dy * x_hat.
        let mut sum_dy = vec![0.0; d];
        let mut sum_dy_xhat = vec![0.0; d];
        for (g, xh) in upstream.iter().zip(&cache.normalized) {
            for (pg, ph) in g.as_slice().chunks_exact(d).zip(xh.as_slice().chunks_exact(d)) {
                for k in 0..d {
                    sum_dy[k] += pg[k];
                    sum_dy_xhat[k] += pg[k] * ph[k];
                }
            }
        }
        for k in 0..d {
            grads.shift[k] += sum_dy[k];
            grads.scale[k] += sum_dy_xhat[k];
        }
        let mut out = Vec::with_capacity(upstream.len());
        for (g, xh) in upstream.iter().zip(&cache.normalized) {
            let mut gx = g.clone();
            for (pg, ph) in gx.as_mut_slice().chunks_exact_mut(d).zip(xh.as_slice().chunks_exact(d)) {
                for k in 0..d {
                    let c = self.scale[k] * cache.inv_std[k] / n;
                    pg[k] = c * (n * pg[k] - sum_dy[k] - ph[k] * sum_dy_xhat[k]);
                }
            }
            out.push(gx);
        }
        Ok(out)
    }

    /// Backward pass with running statistics (infer-mode forward), where
    /// the layer is a fixed per-map affine map.
    pub fn backward_frozen(&self, inputs: &[Tensor], upstream: &[Tensor], grads: &mut BatchNorm) -> Result<Vec<Tensor>> {
        if upstream.len() != inputs.len() {
            return Err(Error::shape("batch size", inputs.len(), upstream.len()));
        }
        let d = self.maps();
        let inv_std: Vec<f64> = self.running_var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let mut out = Vec::with_capacity(inputs.len());
        for (x, g) in inputs.iter().zip(upstream) {
            self.check(x)?;
            let mut gx = g.clone();
            for (pg, px) in gx.as_mut_slice().chunks_exact_mut(d).zip(x.as_slice().chunks_exact(d)) {
                for k in 0..d {
                    grads.shift[k] += pg[k];
                    grads.scale[k] += pg[k] * (px[k] - self.running_mean[k]) * inv_std[k];
                    pg[k] *= self.scale[k] * inv_std[k];
                }
            }
            out.push(gx);
        }
        Ok(out)
    }
}
