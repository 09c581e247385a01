//! Labeled recordings and sliding-window extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One held gesture repetition: `samples[t * channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub gesture: usize,
    pub repetition: usize,
    pub sample_rate_hz: f64,
    pub channels: usize,
    pub samples: Vec<f64>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        gesture: usize,
        repetition: usize,
        sample_rate_hz: f64,
        channels: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Data("recording has no channels".into()));
        }
        if !samples.len().is_multiple_of(channels) {
            return Err(Error::shape("samples per channel", channels, samples.len() % channels));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::Data(format!("invalid sample rate {sample_rate_hz}")));
        }
        Ok(Recording {
            subject_id: subject_id.into(),
            gesture,
            repetition,
            sample_rate_hz,
            channels,
            samples,
        })
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.samples[t * self.channels..(t + 1) * self.channels]
    }
}

/// `n_s x n_c` slice of one recording, stored as a depth-1 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub samples: Tensor,
    pub gesture: usize,
    pub repetition: usize,
    pub source_offset: usize,
}

impl Window {
    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Half-open sample range `[offset, offset + n_s)` in the source recording.
    pub fn sample_range(&self) -> std::ops::Range<usize> {
        self.source_offset..self.source_offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub window_ms: f64,
    pub increment_ms: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_ms: 150.0,
            increment_ms: 5.0,
        }
    }
}

impl WindowConfig {
    pub fn window_samples(&self, sample_rate_hz: f64) -> usize {
        (self.window_ms * sample_rate_hz / 1000.0).round() as usize
    }

    pub fn step_samples(&self, sample_rate_hz: f64) -> usize {
        ((self.increment_ms * sample_rate_hz / 1000.0).round() as usize).max(1)
    }
}

/// Windows at offsets `0, step, 2 step, ..`; a recording shorter than one
/// window yields none.
pub fn extract_windows(recording: &Recording, window_ms: f64, increment_ms: f64) -> Result<Vec<Window>> {
    let cfg = WindowConfig {
        window_ms,
        increment_ms,
    };
    let n_s = cfg.window_samples(recording.sample_rate_hz);
    if n_s == 0 {
        return Err(Error::Usage(format!(
            "window of {window_ms} ms at {} Hz has no samples",
            recording.sample_rate_hz
        )));
    }
    let step = cfg.step_samples(recording.sample_rate_hz);
    let total = recording.len();
    if total < n_s {
        log::warn!(
            "recording g{} r{} has {total} samples, shorter than one {n_s}-sample window; skipped",
            recording.gesture,
            recording.repetition
        );
        return Ok(Vec::new());
    }
    let count = (total - n_s) / step + 1;
    let c = recording.channels;
    (0..count)
        .map(|k| {
            let offset = k * step;
            let data = recording.samples[offset * c..(offset + n_s) * c].to_vec();
            Ok(Window {
                samples: Tensor::from_vec(n_s, c, 1, data)?,
                gesture: recording.gesture,
                repetition: recording.repetition,
                source_offset: offset,
            })
        })
        .collect()
}

pub fn extract_all(recordings: &[Recording], config: &WindowConfig) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    for r in recordings {
        out.extend(extract_windows(r, config.window_ms, config.increment_ms)?);
    }
    Ok(out)
}
