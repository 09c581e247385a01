//! Seeded synthetic sEMG-like datasets.
//!
//! Every channel of a recording is band-limited Gaussian noise (unit
//! variance) scaled by the gesture's amplitude on that channel, plus white
//! noise at the configured SNR. Rest (class 0) is the noise floor alone.
//! Gesture amplitudes come from distinct even-weight binary codes over the
//! channels, so any two gestures differ on at least two channels:
//!
//! | difficulty | low / high level | per-channel offset | default SNR |
//! |------------|------------------|--------------------|-------------|
//! | separable  | 0.15 / 1.0       | none               | 20 dB       |
//! | realistic  | 0.4 / 0.8        | uniform +-0.1      | 6 dB        |
//!
//! Each repetition multiplies every channel amplitude by an independent
//! factor in `[0.9, 1.1]`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::device::Device;
use crate::error::{Error, Result};
use crate::pipeline::dataset::{Dataset, Manifest};
use crate::pipeline::windows::Recording;

/// Taps of the band-pass carrier filter.
const CARRIER_TAPS: usize = 63;
const REPETITION_JITTER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Separable,
    Realistic,
}

impl Difficulty {
    pub fn default_snr_db(&self) -> f64 {
        match self {
            Difficulty::Separable => 20.0,
            Difficulty::Realistic => 6.0,
        }
    }

    fn levels(&self) -> (f64, f64, f64) {
        match self {
            Difficulty::Separable => (0.15, 1.0, 0.0),
            Difficulty::Realistic => (0.4, 0.8, 0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub subject_id: String,
    pub device: Device,
    pub num_gestures: usize,
    pub num_repetitions: usize,
    pub channels: usize,
    pub sample_rate_hz: f64,
    pub hold_seconds: f64,
    /// Defaults to the difficulty's SNR when absent.
    pub snr_db: Option<f64>,
    pub cross_subject_seed: u64,
    pub difficulty: Difficulty,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::for_device(Device::Myo, Difficulty::Separable)
    }
}

impl SynthConfig {
    pub fn for_device(device: Device, difficulty: Difficulty) -> Self {
        SynthConfig {
            subject_id: "synthetic-01".into(),
            device,
            num_gestures: 15,
            num_repetitions: 6,
            channels: device.channels(),
            sample_rate_hz: device.default_sample_rate_hz(),
            hold_seconds: 10.0,
            snr_db: None,
            cross_subject_seed: 0,
            difficulty,
        }
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db.unwrap_or_else(|| self.difficulty.default_snr_db())
    }

    /// White-noise standard deviation relative to a unit-variance carrier.
    pub fn noise_std(&self) -> f64 {
        10f64.powf(-self.snr_db() / 20.0)
    }

    pub fn samples_per_recording(&self) -> usize {
        (self.hold_seconds * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels != self.device.channels() {
            return Err(Error::Usage(format!(
                "{} has {} channels, config asks for {}",
                self.device,
                self.device.channels(),
                self.channels
            )));
        }
        if self.num_gestures < 2 || self.num_repetitions == 0 {
            return Err(Error::Usage("need at least 2 gestures and 1 repetition".into()));
        }
        let codes = (1usize << (self.channels - 1)) - 1;
        if self.num_gestures - 1 > codes {
            return Err(Error::Usage(format!(
                "{} channels support at most {} gestures plus rest",
                self.channels, codes
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Usage(format!("invalid sample rate {}", self.sample_rate_hz)));
        }
        if !self.snr_db().is_finite() {
            return Err(Error::Usage("snr_db must be finite".into()));
        }
        if self.samples_per_recording() == 0 {
            return Err(Error::Usage("hold_seconds gives recordings without samples".into()));
        }
        Ok(())
    }

    pub fn gesture_names(&self) -> Vec<String> {
        std::iter::once("rest".to_string())
            .chain((1..self.num_gestures).map(|g| format!("gesture{g:02}")))
            .collect()
    }
}

/// Per-gesture channel amplitudes; row 0 (rest) is all zero.
pub fn gesture_signatures(config: &SynthConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let mut rng = recording_rng(config.cross_subject_seed, 0);
    let n = config.channels;
    let mut codes: Vec<u32> = (1u32..1 << n).filter(|c| c.count_ones() % 2 == 0).collect();
    codes.shuffle(&mut rng);
    let (low, high, spread) = config.difficulty.levels();
    let mut out = vec![vec![0.0; n]];
    for &code in codes.iter().take(config.num_gestures - 1) {
        out.push(
            (0..n)
                .map(|c| {
                    let base = if code >> c & 1 == 1 { high } else { low };
                    if spread > 0.0 {
                        base + rng.random_range(-spread..=spread)
                    } else {
                        base
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Hamming-windowed sinc band-pass over `[low, high]` Hz.
pub fn bandpass_taps(sample_rate_hz: f64, low_hz: f64, high_hz: f64, taps: usize) -> Vec<f64> {
    let m = (taps - 1) as f64;
    let (f1, f2) = (low_hz / sample_rate_hz, high_hz / sample_rate_hz);
    let sinc = |f: f64, t: f64| {
        if t == 0.0 {
            2.0 * f
        } else {
            (2.0 * std::f64::consts::PI * f * t).sin() / (std::f64::consts::PI * t)
        }
    };
    (0..taps)
        .map(|k| {
            let t = k as f64 - m / 2.0;
            let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / m).cos();
            (sinc(f2, t) - sinc(f1, t)) * w
        })
        .collect()
}

/// Carrier pass band: 20-450 Hz, capped at 90% of Nyquist.
pub fn carrier_band(sample_rate_hz: f64) -> (f64, f64) {
    (20.0, 450f64.min(0.45 * sample_rate_hz))
}

fn recording_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit-variance band-limited noise of length `len`.
fn carrier(rng: &mut ChaCha8Rng, taps: &[f64], len: usize) -> Vec<f64> {
    let white: Vec<f64> = (0..len + taps.len() - 1).map(|_| rng.sample(StandardNormal)).collect();
    let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    (0..len)
        .map(|t| taps.iter().zip(&white[t..]).map(|(h, x)| h * x).sum::<f64>() / norm)
        .collect()
}

pub fn generate_dataset(config: &SynthConfig) -> Result<Dataset> {
    let signatures = gesture_signatures(config)?;
    let (lo, hi) = carrier_band(config.sample_rate_hz);
    let taps = bandpass_taps(config.sample_rate_hz, lo, hi, CARRIER_TAPS);
    let len = config.samples_per_recording();
    let n = config.channels;
    let sigma = config.noise_std();
    let mut recordings = Vec::with_capacity(config.num_gestures * config.num_repetitions);
    for (g, signature) in signatures.iter().enumerate() {
        for r in 1..=config.num_repetitions {
            let stream = 1 + (g * config.num_repetitions + r - 1) as u64;
            let mut rng = recording_rng(config.cross_subject_seed, stream);
            let gains: Vec<f64> = signature
                .iter()
                .map(|a| a * (1.0 + rng.random_range(-REPETITION_JITTER..=REPETITION_JITTER)))
                .collect();
            let mut samples = vec![0.0; len * n];
            for (c, gain) in gains.iter().enumerate() {
                let carrier = carrier(&mut rng, &taps, len);
                for (t, s) in carrier.iter().enumerate() {
                    let noise: f64 = rng.sample(StandardNormal);
                    samples[t * n + c] = gain * s + sigma * noise;
                }
            }
            recordings.push(Recording::new(
                config.subject_id.clone(),
                g,
                r,
                config.sample_rate_hz,
                n,
                samples,
            )?);
        }
    }
    Ok(Dataset {
        manifest: Manifest {
            subject_id: config.subject_id.clone(),
            device: config.device,
            sample_rate_hz: config.sample_rate_hz,
            channels: n,
            gestures: config.gesture_names(),
            repetitions: config.num_repetitions,
        },
        recordings,
    })
}
