//! Architecture builders: the compact CNN for each device and the generic
//! 12-block CNN baseline.
//!
//! The compact CNN is
//!
//! ```text
//! temporal conv stage (R x 1, valid, LReLU) x temporal_layers
//!   -> Temporal Fire Module x fire_modules
//!   -> spatial reduction (1 x channels, 2 maps, LReLU)
//!   -> dropout -> dense softmax
//! ```
//!
//! Per-layer parameter counts of the two presets (inputs 30x8 and 300x5):
//!
//! | layer                         | myo   | delsys |
//! |-------------------------------|-------|--------|
//! | temporal conv 1 (1 -> t)      | 64    | 102    |
//! | temporal conv 2 (t -> t)      | 784   | 202    |
//! | temporal conv 3 (t -> t)      | 784   | 202    |
//! | fire 1                        | 1,328 | 84     |
//! | fire 2                        | 1,584 | 108    |
//! | spatial reduction             | 514   | 82     |
//! | dense softmax (15 classes)    | 735   | 4,605  |
//! | total                         | 5,793 | 5,385  |
//!
//! Myo uses 3x1 temporal filters with t = 16 and fires of squeeze 16 /
//! expand 16+16; the time axis shrinks 30 -> 24 so the head sees 24x1x2.
//! Delsys uses 50x1 temporal filters with t = 2 and fires of squeeze 4 /
//! expand 4+4; the time axis shrinks 300 -> 153, and the 306-input dense
//! head dominates its budget.

use serde::{Deserialize, Serialize};

use super::{LayerSpec, Network, NetworkSpec, DEFAULT_ALPHA};
use crate::device::Device;
use crate::error::Result;
use crate::tensor::Padding;

/// Number of gesture classes (14 gestures plus rest).
pub const DEFAULT_CLASSES: usize = 15;

/// Filter sizes of the generic CNN blocks, in order.
pub const GENERIC_BLOCK_PATTERN: [(usize, usize); 12] = [
    (3, 3),
    (3, 3),
    (3, 3),
    (1, 1),
    (3, 3),
    (3, 3),
    (3, 3),
    (1, 1),
    (3, 3),
    (3, 3),
    (3, 3),
    (1, 1),
];

/// Maps emitted by every generic CNN block.
pub const GENERIC_BLOCK_FILTERS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactCnnConfig {
    pub input_rows: usize,
    pub input_cols: usize,
    pub num_classes: usize,
    pub temporal_filter_rows: usize,
    pub temporal_layers: usize,
    pub temporal_depth: usize,
    pub temporal_padding: Padding,
    pub fire_modules: usize,
    pub fire_squeeze_depth: usize,
    pub fire_out_depth: usize,
    pub fire_expand_rows: usize,
    pub dropout_rate: f64,
    pub alpha: f64,
}

impl CompactCnnConfig {
    pub fn myo() -> Self {
        CompactCnnConfig {
            input_rows: 30,
            input_cols: 8,
            num_classes: DEFAULT_CLASSES,
            temporal_filter_rows: 3,
            temporal_layers: 3,
            temporal_depth: 16,
            temporal_padding: Padding::Valid,
            fire_modules: 2,
            fire_squeeze_depth: 16,
            fire_out_depth: 32,
            fire_expand_rows: 3,
            dropout_rate: 0.5,
            alpha: DEFAULT_ALPHA,
        }
    }

    pub fn delsys() -> Self {
        CompactCnnConfig {
            input_rows: 300,
            input_cols: 5,
            num_classes: DEFAULT_CLASSES,
            temporal_filter_rows: 50,
            temporal_layers: 3,
            temporal_depth: 2,
            temporal_padding: Padding::Valid,
            fire_modules: 2,
            fire_squeeze_depth: 4,
            fire_out_depth: 8,
            fire_expand_rows: 3,
            dropout_rate: 0.5,
            alpha: DEFAULT_ALPHA,
        }
    }

    pub fn for_device(device: Device) -> Self {
        match device {
            Device::Myo => Self::myo(),
            Device::Delsys => Self::delsys(),
        }
    }

    pub fn to_spec(&self) -> NetworkSpec {
        let mut layers = Vec::new();
        for _ in 0..self.temporal_layers {
            layers.push(LayerSpec::Conv {
                filter_rows: self.temporal_filter_rows,
                filter_cols: 1,
                out_depth: self.temporal_depth,
                padding: self.temporal_padding,
                alpha: Some(self.alpha),
            });
        }
        for _ in 0..self.fire_modules {
            layers.push(LayerSpec::Fire {
                squeeze_depth: self.fire_squeeze_depth,
                expand_temporal_rows: self.fire_expand_rows,
                out_depth: self.fire_out_depth,
                alpha: self.alpha,
            });
        }
        layers.push(LayerSpec::SpatialReduction {
            filter_cols: self.input_cols,
            alpha: self.alpha,
        });
        layers.push(LayerSpec::Dropout {
            rate: self.dropout_rate,
        });
        layers.push(LayerSpec::DenseSoftmax {
            classes: self.num_classes,
        });
        NetworkSpec {
            input_rows: self.input_rows,
            input_cols: self.input_cols,
            layers,
            num_classes: self.num_classes,
        }
    }
}

/// Compact CNN preset for `device`, Glorot-initialized from `seed`.
pub fn build_compact_cnn(device: Device, seed: u64) -> Result<Network> {
    build_compact_cnn_with(&CompactCnnConfig::for_device(device), seed)
}

pub fn build_compact_cnn_with(config: &CompactCnnConfig, seed: u64) -> Result<Network> {
    Network::new(config.to_spec(), seed)
}

/// Twelve `conv -> batchnorm -> LReLU` blocks (same padding, 32 maps each)
/// followed by a dense softmax head.
pub fn generic_cnn_spec(input_rows: usize, input_cols: usize, num_classes: usize) -> NetworkSpec {
    let mut layers = Vec::new();
    for &(filter_rows, filter_cols) in &GENERIC_BLOCK_PATTERN {
        layers.push(LayerSpec::Conv {
            filter_rows,
            filter_cols,
            out_depth: GENERIC_BLOCK_FILTERS,
            padding: Padding::Same,
            alpha: None,
        });
        layers.push(LayerSpec::BatchNorm);
        layers.push(LayerSpec::LeakyRelu { alpha: DEFAULT_ALPHA });
    }
    layers.push(LayerSpec::DenseSoftmax { classes: num_classes });
    NetworkSpec {
        input_rows,
        input_cols,
        layers,
        num_classes,
    }
}

pub fn build_generic_cnn(input_rows: usize, input_cols: usize, num_classes: usize, seed: u64) -> Result<Network> {
    Network::new(generic_cnn_spec(input_rows, input_cols, num_classes), seed)
}
