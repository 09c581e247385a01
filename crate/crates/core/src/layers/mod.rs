//! Layer zoo, declarative network specs, and the instantiated [`Network`].
//!
//! A [`NetworkSpec`] is a plain list of [`LayerSpec`]s. Building a
//! [`Network`] propagates shapes through the list, allocates parameters and
//! draws Glorot-uniform weights. Training runs layer by layer over a whole
//! batch (batch normalization needs batch statistics); inference runs one
//! window at a time through [`Network::forward`].

pub mod activation;
pub mod batchnorm;
pub mod builders;
pub mod dropout;
pub mod fire;
pub mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{conv2d, conv2d_backward_into, dense, dense_backward_into, DenseWeights, FilterBank, Padding, Shape, Tensor};
use crate::training::init::{glorot_fill, glorot_fill_dense};
use activation::{leaky_relu_backward, leaky_relu_tensor, softmax};
use batchnorm::{BatchNorm, BatchNormCache};
use dropout::{dropout_backward, dropout_forward};
use fire::{FireCache, FireModule};

pub use activation::{argmax, leaky_relu};
pub use builders::{build_compact_cnn, build_compact_cnn_with, build_generic_cnn, CompactCnnConfig, GENERIC_BLOCK_FILTERS, GENERIC_BLOCK_PATTERN};

/// LReLU slope used network-wide.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Output maps of a spatial reduction convolution.
pub const SPATIAL_REDUCTION_MAPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Infer,
}

/// One entry of a [`NetworkSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Stride-1 convolution, optionally followed by LReLU. With
    /// `filter_cols == 1` this is a temporal convolution.
    Conv {
        filter_rows: usize,
        filter_cols: usize,
        out_depth: usize,
        padding: Padding,
        alpha: Option<f64>,
    },
    /// Temporal Fire Module (see [`fire`]).
    Fire {
        squeeze_depth: usize,
        expand_temporal_rows: usize,
        out_depth: usize,
        alpha: f64,
    },
    /// Convolution spanning all channels with [`SPATIAL_REDUCTION_MAPS`]
    /// filters, valid in the channel direction, then LReLU.
    SpatialReduction { filter_cols: usize, alpha: f64 },
    Dropout { rate: f64 },
    BatchNorm,
    LeakyRelu { alpha: f64 },
    /// Dense layer over the flattened input followed by softmax.
    DenseSoftmax { classes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_rows: usize,
    pub input_cols: usize,
    pub layers: Vec<LayerSpec>,
    pub num_classes: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Spec(format!("LReLU alpha must be in (0, 1), got {alpha}")));
    }
    Ok(())
}

impl NetworkSpec {
    pub fn input_shape(&self) -> Shape {
        Shape::new(self.input_rows, self.input_cols, 1)
    }

    /// Output shape of every layer, validating the stack on the way.
    pub fn layer_shapes(&self) -> Result<Vec<Shape>> {
        if self.input_rows == 0 || self.input_cols == 0 {
            return Err(Error::Spec("input dimensions must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Spec(format!("need at least 2 classes, got {}", self.num_classes)));
        }
        match self.layers.last() {
            Some(LayerSpec::DenseSoftmax { classes }) if *classes == self.num_classes => {}
            _ => {
                return Err(Error::Spec(format!(
                    "last layer must be dense_softmax with {} classes",
                    self.num_classes
                )))
            }
        }
        let mut shape = self.input_shape();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match *layer {
                LayerSpec::Conv {
                    filter_rows,
                    filter_cols,
                    out_depth,
                    padding,
                    alpha,
                } => {
                    if filter_rows == 0 || filter_cols == 0 || out_depth == 0 {
                        return Err(Error::Spec(format!("layer {i}: conv dimensions must be positive")));
                    }
                    if let Some(a) = alpha {
                        check_alpha(a)?;
                    }
                    padding
                        .output_shape(shape, filter_rows, filter_cols, out_depth)
                        .map_err(|e| Error::Spec(format!("layer {i}: {e}")))?
                }
                LayerSpec::Fire {
                    squeeze_depth,
                    expand_temporal_rows,
                    out_depth,
                    alpha,
                } => {
                    check_alpha(alpha)?;
                    FireModule::new(shape.depth, squeeze_depth, out_depth, expand_temporal_rows, alpha)
                        .map_err(|e| Error::Spec(format!("layer {i}: {e}")))?;
                    Shape::new(shape.rows, shape.cols, out_depth)
                }
                LayerSpec::SpatialReduction { filter_cols, alpha } => {
                    check_alpha(alpha)?;
                    if filter_cols != shape.cols {
                        return Err(Error::Spec(format!(
                            "layer {i}: spatial reduction filter spans {filter_cols} channels but input has {}",
                            shape.cols
                        )));
                    }
                    Shape::new(shape.rows, 1, SPATIAL_REDUCTION_MAPS)
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(Error::Spec(format!("layer {i}: dropout rate must be in [0, 1), got {rate}")));
                    }
                    shape
                }
                LayerSpec::BatchNorm => shape,
                LayerSpec::LeakyRelu { alpha } => {
                    check_alpha(alpha)?;
                    shape
                }
                LayerSpec::DenseSoftmax { classes } => {
                    if i + 1 != self.layers.len() {
                        return Err(Error::Spec(format!("layer {i}: dense_softmax must be the last layer")));
                    }
                    Shape::new(1, 1, classes)
                }
            };
            shapes.push(shape);
        }
        Ok(shapes)
    }

    /// Closed-form parameter count: weights plus biases of every layer,
    /// plus scale and shift per batch-normalized map.
    pub fn parameter_count(&self) -> Result<usize> {
        let shapes = self.layer_shapes()?;
        let mut input = self.input_shape();
        let mut total = 0;
        for (layer, out) in self.layers.iter().zip(&shapes) {
            total += match *layer {
                LayerSpec::Conv {
                    filter_rows,
                    filter_cols,
                    out_depth,
                    ..
                } => filter_rows * filter_cols * input.depth * out_depth + out_depth,
                LayerSpec::Fire {
                    squeeze_depth: s,
                    expand_temporal_rows: r,
                    out_depth,
                    ..
                } => {
                    let half = out_depth / 2;
                    (input.depth * s + s) + (s * half + half) + (r * s * half + half)
                }
                LayerSpec::SpatialReduction { filter_cols, .. } => {
                    filter_cols * input.depth * SPATIAL_REDUCTION_MAPS + SPATIAL_REDUCTION_MAPS
                }
                LayerSpec::Dropout { .. } | LayerSpec::LeakyRelu { .. } => 0,
                LayerSpec::BatchNorm => 2 * input.depth,
                LayerSpec::DenseSoftmax { classes } => input.len() * classes + classes,
            };
            input = *out;
        }
        Ok(total)
    }
}

/// An instantiated layer with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv {
        bank: FilterBank,
        padding: Padding,
        alpha: Option<f64>,
    },
    Fire(FireModule),
    SpatialReduction { bank: FilterBank, alpha: f64 },
    Dropout { rate: f64 },
    BatchNorm(BatchNorm),
    LeakyRelu { alpha: f64 },
    DenseSoftmax(DenseWeights),
}

impl Layer {
    fn param_slices(&self) -> Vec<&[f64]> {
        match self {
            Layer::Conv { bank, .. } | Layer::SpatialReduction { bank, .. } => vec![&bank.weights, &bank.biases],
            Layer::Fire(f) => f.banks().into_iter().flat_map(|b| [&b.weights[..], &b.biases[..]]).collect(),
            Layer::BatchNorm(bn) => vec![&bn.scale, &bn.shift],
            Layer::DenseSoftmax(d) => vec![&d.weights, &d.biases],
            Layer::Dropout { .. } | Layer::LeakyRelu { .. } => Vec::new(),
        }
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Conv { bank, .. } | Layer::SpatialReduction { bank, .. } => {
                vec![&mut bank.weights, &mut bank.biases]
            }
            Layer::Fire(f) => f
                .banks_mut()
                .into_iter()
                .flat_map(|b| [&mut b.weights[..], &mut b.biases[..]])
                .collect(),
            Layer::BatchNorm(bn) => vec![&mut bn.scale, &mut bn.shift],
            Layer::DenseSoftmax(d) => vec![&mut d.weights, &mut d.biases],
            Layer::Dropout { .. } | Layer::LeakyRelu { .. } => Vec::new(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }
}

/// Per-layer state kept by [`Network::forward_batch`] for backpropagation.
#[derive(Debug)]
enum LayerCache {
    Conv { inputs: Vec<Tensor>, outputs: Vec<Tensor> },
    Fire(Vec<FireCache>),
    Dropout(Vec<Option<Tensor>>),
    BatchNorm(BatchNormCache),
    FrozenBatchNorm(Vec<Tensor>),
    Activation(Vec<Tensor>),
    Dense(Vec<Tensor>),
}

/// Everything [`Network::backward_batch`] needs from a forward pass.
#[derive(Debug)]
pub struct ForwardTrace {
    caches: Vec<LayerCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
    mode: Mode,
}

impl Network {
    /// Validates the spec and draws Glorot-uniform weights (zero biases)
    /// from a generator seeded with `seed`. Starts in infer mode.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Network::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            match layer {
                Layer::Conv { bank, .. } | Layer::SpatialReduction { bank, .. } => glorot_fill(bank, &mut rng),
                Layer::Fire(f) => f.init_glorot(&mut rng),
                Layer::DenseSoftmax(d) => glorot_fill_dense(d, &mut rng),
                Layer::BatchNorm(_) | Layer::Dropout { .. } | Layer::LeakyRelu { .. } => {}
            }
        }
        Ok(net)
    }

    /// Validates the spec and allocates all-zero parameters.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        let shapes = spec.layer_shapes()?;
        let mut input = spec.input_shape();
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (ls, out) in spec.layers.iter().zip(&shapes) {
            layers.push(match *ls {
                LayerSpec::Conv {
                    filter_rows,
                    filter_cols,
                    out_depth,
                    padding,
                    alpha,
                } => Layer::Conv {
                    bank: FilterBank::zeros(filter_rows, filter_cols, input.depth, out_depth),
                    padding,
                    alpha,
                },
                LayerSpec::Fire {
                    squeeze_depth,
                    expand_temporal_rows,
                    out_depth,
                    alpha,
                } => Layer::Fire(FireModule::new(input.depth, squeeze_depth, out_depth, expand_temporal_rows, alpha)?),
                LayerSpec::SpatialReduction { filter_cols, alpha } => Layer::SpatialReduction {
                    bank: FilterBank::zeros(1, filter_cols, input.depth, SPATIAL_REDUCTION_MAPS),
                    alpha,
                },
                LayerSpec::Dropout { rate } => Layer::Dropout { rate },
                LayerSpec::BatchNorm => Layer::BatchNorm(BatchNorm::new(input.depth)),
                LayerSpec::LeakyRelu { alpha } => Layer::LeakyRelu { alpha },
                LayerSpec::DenseSoftmax { classes } => Layer::DenseSoftmax(DenseWeights::zeros(input.len(), classes)),
            });
            input = *out;
        }
        Ok(Network {
            spec,
            layers,
            mode: Mode::Infer,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    pub fn input_shape(&self) -> Shape {
        self.spec.input_shape()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn fire_modules(&self) -> impl Iterator<Item = &FireModule> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Fire(f) => Some(f),
            _ => None,
        })
    }

    /// All trainable parameters, flattened in layer order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            for s in layer.param_slices() {
                out.extend_from_slice(s);
            }
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let expected = self.parameter_count();
        if values.len() != expected {
            return Err(Error::shape("parameter vector", expected, values.len()));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for s in layer.param_slices_mut() {
                s.copy_from_slice(&values[offset..offset + s.len()]);
                offset += s.len();
            }
        }
        Ok(())
    }

    /// Non-trainable state (batch-norm running mean and variance) in layer order.
    pub fn buffers(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let Layer::BatchNorm(bn) = layer {
                out.extend_from_slice(&bn.running_mean);
                out.extend_from_slice(&bn.running_var);
            }
        }
        out
    }

    pub fn set_buffers(&mut self, values: &[f64]) -> Result<()> {
        let expected = self.buffers().len();
        if values.len() != expected {
            return Err(Error::shape("buffer vector", expected, values.len()));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            if let Layer::BatchNorm(bn) = layer {
                let d = bn.maps();
                bn.running_mean.copy_from_slice(&values[offset..offset + d]);
                bn.running_var.copy_from_slice(&values[offset + d..offset + 2 * d]);
                offset += 2 * d;
            }
        }
        Ok(())
    }

    fn check_window(&self, window: &Tensor) -> Result<()> {
        let expected = self.input_shape();
        let got = window.shape();
        if got.rows != expected.rows {
            return Err(Error::shape("window rows", expected.rows, got.rows));
        }
        if got.cols != expected.cols {
            return Err(Error::shape("window cols", expected.cols, got.cols));
        }
        if got.depth != expected.depth {
            return Err(Error::shape("window depth", expected.depth, got.depth));
        }
        Ok(())
    }

    /// Class probabilities for one window with inference semantics:
    /// dropout disabled, batch norm on running statistics.
    pub fn forward(&self, window: &Tensor) -> Result<Vec<f64>> {
        softmax(&self.logits(window)?)
    }

    pub fn logits(&self, window: &Tensor) -> Result<Vec<f64>> {
        self.check_window(window)?;
        let mut x = window.clone();
        for layer in &self.layers {
            x = match layer {
                Layer::Conv { bank, padding, alpha } => {
                    let z = conv2d(&x, bank, *padding)?;
                    match alpha {
                        Some(a) => leaky_relu_tensor(&z, *a),
                        None => z,
                    }
                }
                Layer::Fire(f) => f.forward(&x)?,
                Layer::SpatialReduction { bank, alpha } => {
                    leaky_relu_tensor(&conv2d(&x, bank, Padding::Valid)?, *alpha)
                }
                Layer::Dropout { .. } => x,
                Layer::BatchNorm(bn) => bn.forward_infer(&x)?,
                Layer::LeakyRelu { alpha } => leaky_relu_tensor(&x, *alpha),
                Layer::DenseSoftmax(d) => return dense(&x, d),
            };
        }
        unreachable!("validated specs end with dense_softmax")
    }

    /// Predicted class (argmax of the probabilities, lowest index on ties).
    pub fn predict(&self, window: &Tensor) -> Result<usize> {
        Ok(argmax(&self.logits(window)?))
    }

    /// Batch forward pass honouring the current [`Mode`]. In train mode
    /// dropout masks are drawn from `rng` and batch norm uses (and updates)
    /// batch statistics. Returns per-window probabilities and the trace
    /// needed by [`Network::backward_batch`].
    pub fn forward_batch<R: Rng + ?Sized>(&mut self, batch: &[Tensor], rng: &mut R) -> Result<(Vec<Vec<f64>>, ForwardTrace)> {
        if batch.is_empty() {
            return Err(Error::Usage("empty batch".into()));
        }
        for w in batch {
            self.check_window(w)?;
        }
        let mode = self.mode;
        let mut acts: Vec<Tensor> = batch.to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &mut self.layers {
            let (next, cache) = match layer {
                Layer::Conv { bank, padding, alpha } => {
                    let outs = acts
                        .iter()
                        .map(|x| {
                            let z = conv2d(x, bank, *padding)?;
                            Ok(match alpha {
                                Some(a) => leaky_relu_tensor(&z, *a),
                                None => z,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let outputs = if alpha.is_some() { outs.clone() } else { Vec::new() };
                    (outs, LayerCache::Conv { inputs: acts, outputs })
                }
                Layer::SpatialReduction { bank, alpha } => {
                    let outs = acts
                        .iter()
                        .map(|x| Ok(leaky_relu_tensor(&conv2d(x, bank, Padding::Valid)?, *alpha)))
                        .collect::<Result<Vec<_>>>()?;
                    (outs.clone(), LayerCache::Conv { inputs: acts, outputs: outs })
                }
                Layer::Fire(f) => {
                    let mut outs = Vec::with_capacity(acts.len());
                    let mut fc = Vec::with_capacity(acts.len());
                    for x in &acts {
                        let (y, c) = f.forward_cached(x)?;
                        outs.push(y);
                        fc.push(c);
                    }
                    (outs, LayerCache::Fire(fc))
                }
                Layer::Dropout { rate } => {
                    let mut outs = Vec::with_capacity(acts.len());
                    let mut masks = Vec::with_capacity(acts.len());
                    for x in &acts {
                        let (y, m) = dropout_forward(x, *rate, mode, rng);
                        outs.push(y);
                        masks.push(m);
                    }
                    (outs, LayerCache::Dropout(masks))
                }
                Layer::BatchNorm(bn) => match mode {
                    Mode::Train => {
                        let (outs, c) = bn.forward_train(&acts)?;
                        (outs, LayerCache::BatchNorm(c))
                    }
                    Mode::Infer => {
                        let outs = acts.iter().map(|x| bn.forward_infer(x)).collect::<Result<Vec<_>>>()?;
                        (outs, LayerCache::FrozenBatchNorm(acts))
                    }
                },
                Layer::LeakyRelu { alpha } => {
                    let outs: Vec<Tensor> = acts.iter().map(|x| leaky_relu_tensor(x, *alpha)).collect();
                    (outs.clone(), LayerCache::Activation(outs))
                }
                Layer::DenseSoftmax(d) => {
                    let outs = acts
                        .iter()
                        .map(|x| Tensor::from_vec(1, 1, d.out_size, dense(x, d)?))
                        .collect::<Result<Vec<_>>>()?;
                    (outs, LayerCache::Dense(acts))
                }
            };
            acts = next;
            caches.push(cache);
        }
        let probs = acts.iter().map(|z| softmax(z.as_slice())).collect::<Result<Vec<_>>>()?;
        Ok((probs, ForwardTrace { caches }))
    }

    /// Backpropagates per-window logit gradients and returns the gradient of
    /// their sum with respect to [`Network::parameters`], in the same order.
    pub fn backward_batch(&self, trace: &ForwardTrace, logit_grads: &[Vec<f64>]) -> Result<Vec<f64>> {
        if trace.caches.len() != self.layers.len() {
            return Err(Error::Usage("forward trace does not belong to this network".into()));
        }
        let mut grads = Network::zeros(self.spec.clone())?;
        for layer in &mut grads.layers {
            layer.param_slices_mut().into_iter().for_each(|s| s.fill(0.0));
        }
        let mut g: Vec<Tensor> = logit_grads
            .iter()
            .map(|v| Tensor::from_vec(1, 1, v.len(), v.clone()))
            .collect::<Result<Vec<_>>>()?;

        for i in (0..self.layers.len()).rev() {
            let need_input_grad = i > 0;
            let cache = &trace.caches[i];
            g = match (&self.layers[i], &mut grads.layers[i], cache) {
                (Layer::Conv { bank, padding, alpha }, Layer::Conv { bank: gb, .. }, LayerCache::Conv { inputs, outputs }) => {
                    conv_backward_batch(bank, *padding, *alpha, inputs, outputs, g, gb, need_input_grad)?
                }
                (
                    Layer::SpatialReduction { bank, alpha },
                    Layer::SpatialReduction { bank: gb, .. },
                    LayerCache::Conv { inputs, outputs },
                ) => conv_backward_batch(bank, Padding::Valid, Some(*alpha), inputs, outputs, g, gb, need_input_grad)?,
                (Layer::Fire(f), Layer::Fire(gf), LayerCache::Fire(fc)) => fc
                    .iter()
                    .zip(&g)
                    .map(|(c, gy)| f.backward(c, gy, gf))
                    .collect::<Result<Vec<_>>>()?,
                (Layer::Dropout { .. }, _, LayerCache::Dropout(masks)) => {
                    for (gy, m) in g.iter_mut().zip(masks) {
                        dropout_backward(m.as_ref(), gy);
                    }
                    g
                }
                (Layer::BatchNorm(bn), Layer::BatchNorm(gbn), LayerCache::BatchNorm(c)) => bn.backward(c, &g, gbn)?,
                (Layer::BatchNorm(bn), Layer::BatchNorm(gbn), LayerCache::FrozenBatchNorm(inputs)) => {
                    bn.backward_frozen(inputs, &g, gbn)?
                }
                (Layer::LeakyRelu { alpha }, _, LayerCache::Activation(outs)) => {
                    for (gy, y) in g.iter_mut().zip(outs) {
                        leaky_relu_backward(y, gy, *alpha);
                    }
                    g
                }
                (Layer::DenseSoftmax(d), Layer::DenseSoftmax(gd), LayerCache::Dense(inputs)) => inputs
                    .iter()
                    .zip(&g)
                    .map(|(x, gy)| dense_backward_into(x, d, gy.as_slice(), gd))
                    .collect::<Result<Vec<_>>>()?,
                _ => return Err(Error::Usage("forward trace does not match network layers".into())),
            };
        }
        Ok(grads.parameters())
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_backward_batch(
    bank: &FilterBank,
    padding: Padding,
    alpha: Option<f64>,
    inputs: &[Tensor],
    outputs: &[Tensor],
    mut upstream: Vec<Tensor>,
    grad_bank: &mut FilterBank,
    need_input_grad: bool,
) -> Result<Vec<Tensor>> {
    let mut out = Vec::with_capacity(inputs.len());
    for (n, x) in inputs.iter().enumerate() {
        let gy = &mut upstream[n];
        if let Some(a) = alpha {
            leaky_relu_backward(&outputs[n], gy, a);
        }
        if need_input_grad {
            let mut gx = Tensor::zeros(x.rows(), x.cols(), x.depth());
            conv2d_backward_into(x, bank, gy, padding, Some(&mut gx), grad_bank)?;
            out.push(gx);
        } else {
            conv2d_backward_into(x, bank, gy, padding, None, grad_bank)?;
        }
    }
    Ok(out)
}
