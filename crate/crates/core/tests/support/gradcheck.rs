//! Central finite-difference checks of every backward pass. Each check
//! reports its worst relative error and probe count; callers apply the
//! tolerance.

use emgnet::layers::activation::{leaky_relu_backward, leaky_relu_tensor, softmax};
use emgnet::layers::batchnorm::BatchNorm;
use emgnet::layers::dropout::{dropout_backward, dropout_forward};
use emgnet::layers::fire::FireModule;
use emgnet::layers::{LayerSpec, Mode, Network, NetworkSpec};
use emgnet::tensor::{conv2d, conv2d_backward, dense, dense_backward_into, DenseWeights, FilterBank, Padding, Shape, Tensor};
use emgnet::training::{batch_loss_and_gradient, cross_entropy, cross_entropy_logit_grad, Example};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{central, probe, rel_error};

pub const LAYER_TOL: f64 = 1e-4;
pub const NETWORK_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub probes: usize,
}

fn push(out: &mut Vec<Check>, name: impl Into<String>, (worst, probes): (f64, usize)) {
    out.push(Check {
        name: name.into(),
        worst,
        probes,
    });
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn normal_tensor(rng: &mut ChaCha8Rng, shape: Shape) -> Tensor {
    Tensor::from_fn(shape, |_, _, _| rng.sample(StandardNormal))
}

fn weighted_sum(t: &Tensor, w: &[f64]) -> f64 {
    t.as_slice().iter().zip(w).map(|(a, b)| a * b).sum()
}

pub fn conv2d_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (padding, fr, fc) in [(Padding::Same, 3, 2), (Padding::Valid, 3, 2), (Padding::Same, 4, 1), (Padding::Valid, 1, 3)] {
        let input = normal_tensor(&mut rng, Shape::new(7, 3, 2));
        let bank = FilterBank::new(fr, fc, 2, 3, normal_vec(&mut rng, fr * fc * 6), normal_vec(&mut rng, 3)).unwrap();
        let y = conv2d(&input, &bank, padding).unwrap();
        let w = normal_vec(&mut rng, y.len());
        let upstream = Tensor::from_vec(y.rows(), y.cols(), y.depth(), w.clone()).unwrap();
        let (gin, gbank) = conv2d_backward(&input, &bank, &upstream, padding).unwrap();

        let r = probe(input.as_slice(), gin.as_slice(), 20, &mut rng, |x| {
            let t = Tensor::from_vec(7, 3, 2, x.to_vec()).unwrap();
            weighted_sum(&conv2d(&t, &bank, padding).unwrap(), &w)
        });
        push(&mut out, format!("conv {fr}x{fc} {padding:?} input"), r);
        let r = probe(&bank.weights, &gbank.weights, 15, &mut rng, |x| {
            let b = FilterBank { weights: x.to_vec(), ..bank.clone() };
            weighted_sum(&conv2d(&input, &b, padding).unwrap(), &w)
        });
        push(&mut out, format!("conv {fr}x{fc} {padding:?} weights"), r);
        let r = probe(&bank.biases, &gbank.biases, 3, &mut rng, |x| {
            let b = FilterBank { biases: x.to_vec(), ..bank.clone() };
            weighted_sum(&conv2d(&input, &b, padding).unwrap(), &w)
        });
        push(&mut out, format!("conv {fr}x{fc} {padding:?} biases"), r);
    }
    out
}

pub fn dense_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let input = normal_tensor(&mut rng, Shape::new(4, 2, 3));
    let layer = DenseWeights::new(24, 5, normal_vec(&mut rng, 120), normal_vec(&mut rng, 5)).unwrap();
    let w = normal_vec(&mut rng, 5);
    let mut grads = DenseWeights::zeros(24, 5);
    let gin = dense_backward_into(&input, &layer, &w, &mut grads).unwrap();
    let f_out = |x: &Tensor, l: &DenseWeights| dense(x, l).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();

    let r = probe(input.as_slice(), gin.as_slice(), 24, &mut rng, |x| {
        f_out(&Tensor::from_vec(4, 2, 3, x.to_vec()).unwrap(), &layer)
    });
    push(&mut out, "dense input", r);
    let r = probe(&layer.weights, &grads.weights, 40, &mut rng, |x| {
        f_out(&input, &DenseWeights { weights: x.to_vec(), ..layer.clone() })
    });
    push(&mut out, "dense weights", r);
    let r = probe(&layer.biases, &grads.biases, 5, &mut rng, |x| {
        f_out(&input, &DenseWeights { biases: x.to_vec(), ..layer.clone() })
    });
    push(&mut out, "dense biases", r);
    out
}

pub fn fire_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fire = FireModule::new(3, 2, 6, 3, 0.1).unwrap();
    fire.init_glorot(&mut rng);
    for bank in fire.banks_mut() {
        bank.biases.iter_mut().for_each(|b| *b = rng.sample::<f64, _>(StandardNormal) * 0.1);
    }
    let input = normal_tensor(&mut rng, Shape::new(8, 2, 3));
    let (y, cache) = fire.forward_cached(&input).unwrap();
    let w = normal_vec(&mut rng, y.len());
    let upstream = Tensor::from_vec(y.rows(), y.cols(), y.depth(), w.clone()).unwrap();
    let mut grads = fire.clone();
    for bank in grads.banks_mut() {
        bank.weights.fill(0.0);
        bank.biases.fill(0.0);
    }
    let gin = fire.backward(&cache, &upstream, &mut grads).unwrap();

    let r = probe(input.as_slice(), gin.as_slice(), 30, &mut rng, |x| {
        weighted_sum(&fire.forward(&Tensor::from_vec(8, 2, 3, x.to_vec()).unwrap()).unwrap(), &w)
    });
    push(&mut out, "fire input", r);
    for b in 0..3 {
        let analytic = grads.banks()[b].clone();
        let r = probe(&fire.banks()[b].weights, &analytic.weights, 12, &mut rng, |x| {
            let mut f = fire.clone();
            f.banks_mut()[b].weights.copy_from_slice(x);
            weighted_sum(&f.forward(&input).unwrap(), &w)
        });
        push(&mut out, format!("fire bank {b} weights"), r);
        let r = probe(&fire.banks()[b].biases, &analytic.biases, 3, &mut rng, |x| {
            let mut f = fire.clone();
            f.banks_mut()[b].biases.copy_from_slice(x);
            weighted_sum(&f.forward(&input).unwrap(), &w)
        });
        push(&mut out, format!("fire bank {b} biases"), r);
    }
    out
}

fn zero_grads(maps: usize) -> BatchNorm {
    let mut g = BatchNorm::new(maps);
    g.scale.fill(0.0);
    g
}

pub fn batchnorm_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bn = BatchNorm::new(3);
    bn.scale = vec![1.3, 0.7, -0.4];
    bn.shift = vec![0.2, -0.1, 0.5];
    let batch: Vec<Tensor> = (0..4).map(|_| normal_tensor(&mut rng, Shape::new(3, 2, 3))).collect();
    let ws: Vec<Vec<f64>> = (0..4).map(|_| normal_vec(&mut rng, 18)).collect();
    let loss = |bn: &BatchNorm, xs: &[Tensor]| -> f64 {
        let (ys, _) = bn.clone().forward_train(xs).unwrap();
        ys.iter().zip(&ws).map(|(y, w)| weighted_sum(y, w)).sum()
    };
    let (_, cache) = bn.clone().forward_train(&batch).unwrap();
    let upstream: Vec<Tensor> = ws.iter().map(|w| Tensor::from_vec(3, 2, 3, w.clone()).unwrap()).collect();
    let mut grads = zero_grads(3);
    let gin = bn.backward(&cache, &upstream, &mut grads).unwrap();

    let flat: Vec<f64> = batch.iter().flat_map(|t| t.as_slice().to_vec()).collect();
    let gflat: Vec<f64> = gin.iter().flat_map(|t| t.as_slice().to_vec()).collect();
    let r = probe(&flat, &gflat, 40, &mut rng, |x| {
        let xs: Vec<Tensor> = x.chunks(18).map(|c| Tensor::from_vec(3, 2, 3, c.to_vec()).unwrap()).collect();
        loss(&bn, &xs)
    });
    push(&mut out, "batchnorm batch input", r);
    let r = probe(&bn.scale, &grads.scale, 3, &mut rng, |x| {
        loss(&BatchNorm { scale: x.to_vec(), ..bn.clone() }, &batch)
    });
    push(&mut out, "batchnorm scale", r);
    let r = probe(&bn.shift, &grads.shift, 3, &mut rng, |x| {
        loss(&BatchNorm { shift: x.to_vec(), ..bn.clone() }, &batch)
    });
    push(&mut out, "batchnorm shift", r);

    // Inference path with running statistics.
    let mut frozen = bn.clone();
    frozen.running_mean = vec![0.3, -0.2, 0.1];
    frozen.running_var = vec![0.5, 2.0, 1.1];
    let mut fgrads = zero_grads(3);
    let fin = frozen.backward_frozen(&batch, &upstream, &mut fgrads).unwrap();
    let r = probe(batch[1].as_slice(), fin[1].as_slice(), 18, &mut rng, |x| {
        weighted_sum(&frozen.forward_infer(&Tensor::from_vec(3, 2, 3, x.to_vec()).unwrap()).unwrap(), &ws[1])
    });
    push(&mut out, "batchnorm frozen input", r);
    let infer_loss = |bn: &BatchNorm| -> f64 {
        batch
            .iter()
            .zip(&ws)
            .map(|(x, w)| weighted_sum(&bn.forward_infer(x).unwrap(), w))
            .sum()
    };
    let r = probe(&frozen.scale, &fgrads.scale, 3, &mut rng, |x| {
        infer_loss(&BatchNorm { scale: x.to_vec(), ..frozen.clone() })
    });
    push(&mut out, "batchnorm frozen scale", r);
    out
}

pub fn activation_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = normal_tensor(&mut rng, Shape::new(5, 2, 2));
    let w = normal_vec(&mut rng, x.len());
    let y = leaky_relu_tensor(&x, 0.1);
    let mut g = Tensor::from_vec(5, 2, 2, w.clone()).unwrap();
    leaky_relu_backward(&y, &mut g, 0.1);
    let r = probe(x.as_slice(), g.as_slice(), 20, &mut rng, |v| {
        weighted_sum(&leaky_relu_tensor(&Tensor::from_vec(5, 2, 2, v.to_vec()).unwrap(), 0.1), &w)
    });
    push(&mut out, "leaky relu", r);

    let (_, mask) = dropout_forward(&x, 0.3, Mode::Train, &mut ChaCha8Rng::seed_from_u64(9));
    let mut g = Tensor::from_vec(5, 2, 2, w.clone()).unwrap();
    dropout_backward(mask.as_ref(), &mut g);
    let r = probe(x.as_slice(), g.as_slice(), 20, &mut rng, |v| {
        let t = Tensor::from_vec(5, 2, 2, v.to_vec()).unwrap();
        weighted_sum(&dropout_forward(&t, 0.3, Mode::Train, &mut ChaCha8Rng::seed_from_u64(9)).0, &w)
    });
    push(&mut out, "dropout", r);

    for class in 0..4 {
        let z = normal_vec(&mut rng, 4);
        let analytic = cross_entropy_logit_grad(&softmax(&z).unwrap(), class).unwrap();
        let r = probe(&z, &analytic, 4, &mut rng, |v| cross_entropy(&softmax(v).unwrap(), class).unwrap());
        push(&mut out, format!("softmax cross-entropy class {class}"), r);
    }
    out
}

/// Every layer-level check.
pub fn layer_checks() -> Vec<Check> {
    [conv2d_checks(), dense_checks(), fire_checks(), batchnorm_checks(), activation_checks()].concat()
}

/// Two-class compact CNN over a 6x2 window: temporal conv, fire module,
/// batch norm, dropout, spatial reduction, dense softmax.
pub fn miniature_spec() -> NetworkSpec {
    NetworkSpec {
        input_rows: 6,
        input_cols: 2,
        layers: vec![
            LayerSpec::Conv {
                filter_rows: 2,
                filter_cols: 1,
                out_depth: 3,
                padding: Padding::Valid,
                alpha: Some(0.1),
            },
            LayerSpec::Fire {
                squeeze_depth: 2,
                expand_temporal_rows: 3,
                out_depth: 4,
                alpha: 0.1,
            },
            LayerSpec::BatchNorm,
            LayerSpec::Dropout { rate: 0.25 },
            LayerSpec::SpatialReduction { filter_cols: 2, alpha: 0.1 },
            LayerSpec::DenseSoftmax { classes: 2 },
        ],
        num_classes: 2,
    }
}

/// Mean batch loss against every parameter of the miniature network, in
/// train mode (batch statistics, fixed dropout masks) and infer mode.
pub fn network_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let batch: Vec<Example> = (0..3)
        .map(|i| Example {
            input: normal_tensor(&mut rng, Shape::new(6, 2, 1)),
            label: i % 2,
        })
        .collect();
    let refs: Vec<&Example> = batch.iter().collect();
    for (mode, seed) in [(Mode::Train, 11), (Mode::Infer, 12), (Mode::Train, 13)] {
        let mut net = Network::new(miniature_spec(), seed).unwrap();
        net.set_mode(mode);
        let params = net.parameters();
        let (_, grad) = batch_loss_and_gradient(&mut net, &refs, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut worst = 0.0f64;
        for (i, analytic) in grad.iter().enumerate() {
            let mut x = params.clone();
            let numeric = central(&mut x, i, |p| {
                net.set_parameters(p).unwrap();
                batch_loss_and_gradient(&mut net, &refs, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().0
            });
            worst = worst.max(rel_error(*analytic, numeric));
        }
        push(&mut out, format!("miniature network {mode:?} seed {seed}"), (worst, params.len()));
    }
    out
}
