//! Discrete wavelet transform and marginal DWT (mDWT) features.
//!
//! Filters follow the usual orthogonal filter-bank convention: `dec_lo` is
//! the time-reversed reconstruction low-pass, `rec_hi[k] = (-1)^k
//! rec_lo[N-1-k]` and `dec_hi` is `rec_hi` reversed. With symmetric
//! boundaries each level computes
//!
//! ```text
//! cA[k] = sum_j dec_lo[j] * x[2k + 1 - j]    k = 0 .. floor((N + F - 1) / 2)
//! ```
//!
//! over the half-sample symmetric extension of `x`; periodization reads
//! `x` modulo `N` and keeps `N / 2` coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const DB7_REC_LO: [f64; 14] = [
    0.077_852_054_085_009_17,
    0.396_539_319_481_917_3,
    0.729_132_090_846_235_1,
    0.469_782_287_405_193_1,
    -0.143_906_003_928_564_98,
    -0.224_036_184_993_874_98,
    0.071_309_219_266_830_26,
    0.080_612_609_151_083_07,
    -0.038_029_936_935_014_41,
    -0.016_574_541_630_666_895,
    0.012_550_998_556_099_003,
    0.000_429_577_972_921_366_5,
    -0.001_801_640_704_047_490_8,
    0.000_353_713_799_974_520_24,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    Haar,
    Db7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Symmetric,
    Periodization,
}

/// Decomposition filters of one wavelet.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
}

impl Wavelet {
    pub fn rec_lo(&self) -> Vec<f64> {
        match self {
            Wavelet::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            Wavelet::Db7 => DB7_REC_LO.to_vec(),
        }
    }

    pub fn filters(&self) -> FilterPair {
        let rec_lo = self.rec_lo();
        let n = rec_lo.len();
        let rec_hi: Vec<f64> = (0..n)
            .map(|k| if k % 2 == 0 { rec_lo[n - 1 - k] } else { -rec_lo[n - 1 - k] })
            .collect();
        FilterPair {
            dec_lo: rec_lo.iter().rev().copied().collect(),
            dec_hi: rec_hi.iter().rev().copied().collect(),
        }
    }

    pub fn filter_len(&self) -> usize {
        match self {
            Wavelet::Haar => 2,
            Wavelet::Db7 => 14,
        }
    }
}

impl std::str::FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Wavelet::Haar),
            "db7" => Ok(Wavelet::Db7),
            other => Err(Error::Usage(format!("unknown wavelet '{other}' (expected haar or db7)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub family: Wavelet,
    pub decomposition_levels: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl Default for WaveletSpec {
    fn default() -> Self {
        WaveletSpec {
            family: Wavelet::Db7,
            decomposition_levels: 3,
            boundary: Boundary::Symmetric,
        }
    }
}

impl WaveletSpec {
    pub fn new(family: Wavelet, decomposition_levels: usize) -> Self {
        WaveletSpec {
            family,
            decomposition_levels,
            boundary: Boundary::Symmetric,
        }
    }

    /// Shortest signal that supports a full decomposition.
    pub fn min_signal_length(&self) -> usize {
        self.family.filter_len() << self.decomposition_levels.saturating_sub(1)
    }

    pub fn validate_length(&self, len: usize) -> Result<()> {
        if self.decomposition_levels == 0 {
            return Err(Error::Usage("decomposition_levels must be at least 1".into()));
        }
        let min = self.min_signal_length();
        if len < min {
            return Err(Error::Usage(format!(
                "signal of {len} samples is too short for {} levels of {:?}; minimum length is {min}",
                self.decomposition_levels, self.family
            )));
        }
        if self.boundary == Boundary::Periodization && !len.is_multiple_of(1 << self.decomposition_levels) {
            return Err(Error::Usage(format!(
                "periodization over {} levels needs a length divisible by {}, got {len}",
                self.decomposition_levels,
                1 << self.decomposition_levels
            )));
        }
        Ok(())
    }
}

/// Detail coefficients for levels `1..=L` plus the level-`L` approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub details: Vec<Vec<f64>>,
    pub approximation: Vec<f64>,
}

/// Half-sample symmetric index into a signal of length `n`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// One analysis step: `(approximation, detail)`.
pub fn dwt_single_level(signal: &[f64], filters: &FilterPair, boundary: Boundary) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let f = filters.dec_lo.len();
    let out_len = match boundary {
        Boundary::Symmetric => (n + f - 1) / 2,
        Boundary::Periodization => n / 2,
    };
    let mut ca = Vec::with_capacity(out_len);
    let mut cd = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..f {
            let i = 2 * k as isize + 1 - j as isize;
            let idx = match boundary {
                Boundary::Symmetric if i >= 0 && (i as usize) < n => i as usize,
                Boundary::Symmetric => reflect(i, n),
                Boundary::Periodization => i.rem_euclid(n as isize) as usize,
            };
            a += filters.dec_lo[j] * signal[idx];
            d += filters.dec_hi[j] * signal[idx];
        }
        ca.push(a);
        cd.push(d);
    }
    (ca, cd)
}

/// Multi-level cascade on the approximation branch.
pub fn dwt_decompose(signal: &[f64], spec: &WaveletSpec) -> Result<Decomposition> {
    spec.validate_length(signal.len())?;
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite sample at index {i}")));
    }
    let filters = spec.family.filters();
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(spec.decomposition_levels);
    for _ in 0..spec.decomposition_levels {
        let (a, d) = dwt_single_level(&approx, &filters, spec.boundary);
        details.push(d);
        approx = a;
    }
    Ok(Decomposition {
        details,
        approximation: approx,
    })
}

/// Sum of absolute coefficients per band, ordered detail 1..L then the
/// final approximation.
pub fn marginals(decomposition: &Decomposition) -> Vec<f64> {
    decomposition
        .details
        .iter()
        .chain(std::iter::once(&decomposition.approximation))
        .map(|band| band.iter().map(|c| c.abs()).sum())
        .collect()
}

pub fn feature_length(channels: usize, spec: &WaveletSpec) -> usize {
    channels * (spec.decomposition_levels + 1)
}

/// Column names matching [`mdwt_features`]: `ch0_d1, ch0_d2, .., ch0_a3, ch1_d1, ..`.
pub fn feature_names(channels: usize, spec: &WaveletSpec) -> Vec<String> {
    let l = spec.decomposition_levels;
    (0..channels)
        .flat_map(|c| {
            (1..=l)
                .map(move |k| format!("ch{c}_d{k}"))
                .chain(std::iter::once(format!("ch{c}_a{l}")))
        })
        .collect()
}

/// mDWT feature vector of a `time x channels` window (depth 1).
pub fn mdwt_features(window: &Tensor, spec: &WaveletSpec) -> Result<Vec<f64>> {
    if window.depth() != 1 {
        return Err(Error::shape("window depth", 1, window.depth()));
    }
    let mut out = Vec::with_capacity(feature_length(window.cols(), spec));
    for c in 0..window.cols() {
        let dec = dwt_decompose(&window.column(c, 0), spec).map_err(|e| e.context(format!("channel {c}")))?;
        out.extend(marginals(&dec));
    }
    Ok(out)
}
