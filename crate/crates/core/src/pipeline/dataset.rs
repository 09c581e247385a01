//! On-disk dataset format: `manifest.json` plus one `g<gesture>_r<rep>.csv`
//! per recording, header `ch0,ch1,..`, one row per time step.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::folds::NUM_REPETITIONS;
use super::windows::Recording;
use crate::device::Device;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

fn default_repetitions() -> usize {
    NUM_REPETITIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subject_id: String,
    pub device: Device,
    pub sample_rate_hz: f64,
    pub channels: usize,
    /// Class names; index 0 is rest.
    pub gestures: Vec<String>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.channels != self.device.channels() {
            return Err(Error::Data(format!(
                "manifest declares {} channels but {} records {}",
                self.channels,
                self.device,
                self.device.channels()
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Data(format!("invalid sample rate {}", self.sample_rate_hz)));
        }
        if self.gestures.len() < 2 {
            return Err(Error::Data("manifest needs at least 2 gesture classes".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Data("manifest declares zero repetitions".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub recordings: Vec<Recording>,
}

pub fn recording_file_name(gesture: usize, repetition: usize) -> String {
    format!("g{gesture}_r{repetition}.csv")
}

pub fn write_dataset(dir: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))?;
    let manifest = serde_json::to_string_pretty(&dataset.manifest)?;
    fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
    let header: Vec<String> = (0..dataset.manifest.channels).map(|c| format!("ch{c}")).collect();
    for rec in &dataset.recordings {
        let path = dir.join(recording_file_name(rec.gesture, rec.repetition));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&header)?;
        for t in 0..rec.len() {
            w.write_record(rec.row(t).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::from(e).context(format!("parsing {}", path.display())))?;
    manifest.validate()?;
    Ok(manifest)
}

fn read_recording(path: &PathBuf, manifest: &Manifest, gesture: usize, repetition: usize) -> Result<Recording> {
    let mut reader = csv::Reader::from_path(path)?;
    let width = reader.headers()?.len();
    if width != manifest.channels {
        return Err(Error::Data(format!(
            "{} has {width} columns, manifest declares {} channels",
            path.display(),
            manifest.channels
        )));
    }
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Data(format!("{} row {} column {c}: cannot parse '{field}'", path.display(), line + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!("{} row {} column {c}: non-finite value", path.display(), line + 1)));
            }
            samples.push(v);
        }
    }
    Recording::new(
        manifest.subject_id.clone(),
        gesture,
        repetition,
        manifest.sample_rate_hz,
        manifest.channels,
        samples,
    )
}

/// Reads every `(gesture, repetition)` recording named by the manifest.
pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let mut recordings = Vec::with_capacity(manifest.gestures.len() * manifest.repetitions);
    for g in 0..manifest.gestures.len() {
        for r in 1..=manifest.repetitions {
            let path = dir.join(recording_file_name(g, r));
            let rec = read_recording(&path, &manifest, g, r).map_err(|e| e.context(format!("reading {}", path.display())))?;
            recordings.push(rec);
        }
    }
    Ok(Dataset { manifest, recordings })
}
