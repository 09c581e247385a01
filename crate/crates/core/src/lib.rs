//! Compact convolutional networks and an SVM + marginal DWT baseline for
//! surface EMG gesture classification, with the windowing, repetition-fold
//! evaluation, synthetic data and latency tooling around them.
//!
//! Modules, bottom up: [`tensor`] (arrays, convolution, dense), [`layers`]
//! (layer zoo, network specs, builders, model files), [`training`] (loss,
//! Adam, early stopping), [`dwt`] and [`svm`] (the baseline), [`pipeline`]
//! (recordings, windows, folds, metrics), [`synth`], [`bench`] and
//! [`experiment`] (the glue the CLI drives).

pub mod bench;
pub mod device;
pub mod dwt;
pub mod error;
pub mod experiment;
pub mod layers;
pub mod pipeline;
pub mod svm;
pub mod synth;
pub mod tensor;
pub mod training;

pub use device::Device;
pub use error::{Error, Result};
