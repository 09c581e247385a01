//! Loss, optimizer, initialization, early stopping and the epoch loop.

pub mod adam;
pub mod early_stop;
pub mod init;
pub mod loss;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{Mode, Network};
use crate::pipeline::metrics::{macro_accuracy, ConfusionMatrix};
use crate::tensor::Tensor;
pub use adam::{adam_step, AdamConfig, AdamState};
pub use early_stop::{early_stop_check, StopDecision};
pub use init::glorot_uniform_init;
pub use loss::{cross_entropy, cross_entropy_logit_grad};

/// One labeled network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Tensor,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_min_improvement: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 128,
            max_epochs: 50,
            early_stop_min_improvement: 0.005,
            early_stop_patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Usage(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Usage(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Usage(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.early_stop_patience == 0 {
            return Err(Error::Usage(
                "batch_size, max_epochs and early_stop_patience must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_acc: f64,
    pub elapsed_ms: f64,
}

/// Wall-clock values live only in the [`EpochRecord`] log, so reports from
/// identical runs compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_macro_acc: Vec<f64>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub best_val_macro_acc: f64,
    pub stop_reason: StopReason,
}

/// Predicted class of every example, inference semantics.
pub fn predict_examples(net: &Network, examples: &[Example]) -> Result<Vec<usize>> {
    examples.iter().map(|e| net.predict(&e.input)).collect()
}

pub fn confusion(net: &Network, examples: &[Example]) -> Result<ConfusionMatrix> {
    let truth: Vec<usize> = examples.iter().map(|e| e.label).collect();
    ConfusionMatrix::from_predictions(net.num_classes(), &truth, &predict_examples(net, examples)?)
}

/// Mean cross-entropy of one batch and its gradient with respect to
/// [`Network::parameters`]. Honours the network's current mode.
pub fn batch_loss_and_gradient(net: &mut Network, batch: &[&Example], rng: &mut ChaCha8Rng) -> Result<(f64, Vec<f64>)> {
    let inputs: Vec<Tensor> = batch.iter().map(|e| e.input.clone()).collect();
    let (probs, trace) = net.forward_batch(&inputs, rng)?;
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut logit_grads = Vec::with_capacity(batch.len());
    for (p, e) in probs.iter().zip(batch) {
        loss += cross_entropy(p, e.label)?;
        let mut g = cross_entropy_logit_grad(p, e.label)?;
        g.iter_mut().for_each(|v| *v /= n);
        logit_grads.push(g);
    }
    Ok((loss / n, net.backward_batch(&trace, &logit_grads)?))
}

/// Batch boundaries over `n` shuffled items; a trailing single item joins the
/// previous batch so batch normalization always sees at least two.
fn batch_ranges(n: usize, batch_size: usize) -> Vec<std::ops::Range<usize>> {
    let mut ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(batch_size)
        .map(|s| s..(s + batch_size).min(n))
        .collect();
    if ranges.len() > 1 && ranges.last().is_some_and(|r| r.len() == 1) {
        let last = ranges.pop().expect("non-empty");
        ranges.last_mut().expect("non-empty").end = last.end;
    }
    ranges
}

pub fn train(net: &mut Network, train_set: &[Example], val_set: &[Example], config: &TrainConfig) -> Result<TrainReport> {
    train_with_log(net, train_set, val_set, config, |r| {
        log::debug!("{}", serde_json::to_string(r).unwrap_or_default())
    })
}

/// Mini-batch Adam on mean cross-entropy with per-epoch validation and
/// early stopping. The network ends in infer mode holding the parameters
/// of the best validation epoch.
pub fn train_with_log(
    net: &mut Network,
    train_set: &[Example],
    val_set: &[Example],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Usage("empty training set".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Usage("empty validation set".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let adam = config.adam();
    let mut params = net.parameters();
    let mut state = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_macro_acc: Vec::new(),
        stopped_epoch: 0,
        best_epoch: 0,
        best_val_macro_acc: f64::NEG_INFINITY,
        stop_reason: StopReason::MaxEpochs,
    };
    let mut best = (params.clone(), net.buffers());

    for epoch in 1..=config.max_epochs {
        net.set_mode(Mode::Train);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for range in batch_ranges(order.len(), config.batch_size) {
            let batch: Vec<&Example> = order[range].iter().map(|&i| &train_set[i]).collect();
            let (loss, grad) = batch_loss_and_gradient(net, &batch, &mut rng)
                .map_err(|e| e.context(format!("epoch {epoch}")))?;
            loss_sum += loss * batch.len() as f64;
            adam_step(&mut params, &grad, &mut state, &adam).map_err(|e| e.context(format!("epoch {epoch}")))?;
            net.set_parameters(&params)?;
        }
        net.set_mode(Mode::Infer);
        let val_acc = macro_accuracy(&confusion(net, val_set)?).map_err(|e| e.context("validation set"))?;
        let train_loss = loss_sum / train_set.len() as f64;
        report.train_loss.push(train_loss);
        report.val_macro_acc.push(val_acc);
        report.stopped_epoch = epoch;
        on_epoch(&EpochRecord {
            epoch,
            train_loss,
            val_macro_acc: val_acc,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if val_acc > report.best_val_macro_acc {
            report.best_val_macro_acc = val_acc;
            report.best_epoch = epoch;
            best = (params.clone(), net.buffers());
        }
        if epoch < config.max_epochs
            && early_stop_check(&report.val_macro_acc, config.early_stop_min_improvement, config.early_stop_patience)
                == StopDecision::Stop
        {
            report.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    net.set_parameters(&best.0)?;
    net.set_buffers(&best.1)?;
    net.set_mode(Mode::Infer);
    Ok(report)
}
