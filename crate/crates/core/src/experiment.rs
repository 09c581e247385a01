//! End-to-end experiments: dataset -> windows -> repetition folds -> model
//! -> confusion matrices and pooled macro accuracy.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{benchmark, BenchConfig, BenchReport};
use crate::device::Device;
use crate::dwt::{feature_names, mdwt_features, Wavelet, WaveletSpec};
use crate::error::{Error, Result};
use crate::layers::builders::generic_cnn_spec;
use crate::layers::io::NETWORK_MAGIC;
use crate::layers::{CompactCnnConfig, Network, NetworkSpec};
use crate::pipeline::{
    evaluate, extract_all, make_fold_plans, pooled_macro_accuracy, read_dataset, split_windows, ConfusionMatrix,
    FoldPlan, Manifest, Window, WindowConfig,
};
use crate::svm::{svm_fit, svm_predict, MachineStats, OvaModel, SvmConfig, SVM_MAGIC};
use crate::training::{train_with_log, EpochRecord, Example, TrainConfig, TrainReport};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    CompactCnn,
    GenericCnn,
    SvmMdwt,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::CompactCnn => "compact_cnn",
            ModelKind::GenericCnn => "generic_cnn",
            ModelKind::SvmMdwt => "svm_mdwt",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compact_cnn" => Ok(ModelKind::CompactCnn),
            "generic_cnn" => Ok(ModelKind::GenericCnn),
            "svm_mdwt" => Ok(ModelKind::SvmMdwt),
            other => Err(Error::Usage(format!(
                "unknown model '{other}' (expected compact_cnn, generic_cnn or svm_mdwt)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub device: Device,
    pub model: ModelKind,
    pub dataset: PathBuf,
    pub folds: usize,
    /// Seeds fold selection and every per-fold initialization.
    pub seed: u64,
    pub window: WindowConfig,
    pub train: TrainConfig,
    pub svm: SvmConfig,
    /// Defaults to Haar on Myo windows and db7 on Delsys windows.
    pub wavelet: Option<WaveletSpec>,
    /// Overrides the device's compact CNN preset.
    pub compact: Option<CompactCnnConfig>,
    pub bench: BenchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            device: Device::Myo,
            model: ModelKind::CompactCnn,
            dataset: PathBuf::from("data"),
            folds: 12,
            seed: 0,
            window: WindowConfig::default(),
            train: TrainConfig::default(),
            svm: SvmConfig::default(),
            wavelet: None,
            compact: None,
            bench: BenchConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Usage(format!("invalid config {}: {e}", path.display())))?;
        if config.dataset.is_relative() {
            if let Some(dir) = path.parent() {
                config.dataset = dir.join(&config.dataset);
            }
        }
        Ok(config)
    }

    /// Replaces every seed in the config.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
        self.svm.seed = seed;
        self.bench.seed = seed;
    }

    pub fn wavelet_spec(&self) -> WaveletSpec {
        self.wavelet.unwrap_or(match self.device {
            Device::Myo => WaveletSpec::new(Wavelet::Haar, 3),
            Device::Delsys => WaveletSpec::new(Wavelet::Db7, 3),
        })
    }

    pub fn network_spec(&self, input_rows: usize, input_cols: usize, classes: usize) -> Result<NetworkSpec> {
        match self.model {
            ModelKind::CompactCnn => {
                let mut c = self.compact.clone().unwrap_or_else(|| CompactCnnConfig::for_device(self.device));
                c.input_rows = input_rows;
                c.input_cols = input_cols;
                c.num_classes = classes;
                Ok(c.to_spec())
            }
            ModelKind::GenericCnn => Ok(generic_cnn_spec(input_rows, input_cols, classes)),
            ModelKind::SvmMdwt => Err(Error::Usage("svm_mdwt has no network spec".into())),
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-fold seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Windows of one subject plus the facts needed to build models.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub manifest: Manifest,
    pub windows: Vec<Window>,
    pub window_samples: usize,
    pub step_samples: usize,
}

pub fn prepare(config: &ExperimentConfig) -> Result<PreparedData> {
    let dataset = read_dataset(&config.dataset)?;
    if dataset.manifest.device != config.device {
        return Err(Error::Data(format!(
            "dataset was recorded with {} but the config selects {}",
            dataset.manifest.device, config.device
        )));
    }
    let windows = extract_all(&dataset.recordings, &config.window)?;
    if windows.is_empty() {
        return Err(Error::Data("no recording is long enough for one window".into()));
    }
    let rate = dataset.manifest.sample_rate_hz;
    Ok(PreparedData {
        window_samples: config.window.window_samples(rate),
        step_samples: config.window.step_samples(rate),
        manifest: dataset.manifest,
        windows,
    })
}

/// A trained classifier of either family.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Network(Network),
    Svm { model: OvaModel, wavelet: WaveletSpec },
}

impl TrainedModel {
    pub fn predict(&self, window: &Window) -> Result<usize> {
        match self {
            TrainedModel::Network(net) => net.predict(&window.samples),
            TrainedModel::Svm { model, wavelet } => svm_predict(model, &mdwt_features(&window.samples, wavelet)?),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            TrainedModel::Network(net) => net.parameter_count(),
            TrainedModel::Svm { model, .. } => {
                model.pool.len() * model.feature_length() + model.coef.iter().map(Vec::len).sum::<usize>() + model.rho.len()
            }
        }
    }

    /// Networks use the network file format; SVMs the SVM file format, with
    /// the wavelet recorded in a JSON sidecar `<path>.wavelet.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        match self {
            TrainedModel::Network(net) => net.save(path),
            TrainedModel::Svm { model, wavelet } => {
                model.save(path)?;
                std::fs::write(sidecar(path), serde_json::to_string_pretty(wavelet)? + "\n")?;
                Ok(())
            }
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut magic = [0u8; 8];
        BufReader::new(File::open(path).map_err(|e| Error::from(e).context(format!("opening {}", path.display())))?)
            .read_exact(&mut magic)?;
        if &magic == NETWORK_MAGIC {
            Ok(TrainedModel::Network(Network::load(path)?))
        } else if &magic == SVM_MAGIC {
            let wavelet: WaveletSpec = serde_json::from_str(&std::fs::read_to_string(sidecar(path))?)?;
            Ok(TrainedModel::Svm {
                model: OvaModel::load(path)?,
                wavelet,
            })
        } else {
            Err(Error::Data(format!("{} is not a model file", path.display())))
        }
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".wavelet.json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmSummary {
    pub gamma: f64,
    pub support_vectors: usize,
    pub class_weights: Vec<f64>,
    pub machines: Vec<MachineStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_id: usize,
    pub train_reps: Vec<usize>,
    pub val_reps: Vec<usize>,
    pub test_reps: Vec<usize>,
    pub train_windows: usize,
    pub val_windows: usize,
    pub test_windows: usize,
    pub macro_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub training: Option<TrainReport>,
    pub svm: Option<SvmSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub subject_id: String,
    pub device: Device,
    pub model: ModelKind,
    pub parameter_count: usize,
    pub class_names: Vec<String>,
    pub window_samples: usize,
    pub step_samples: usize,
    pub config: ExperimentConfig,
    pub folds: Vec<FoldReport>,
    pub pooled_macro_accuracy: f64,
    pub mean_fold_macro_accuracy: f64,
    pub pooled_confusion: ConfusionMatrix,
}

fn examples(windows: &[&Window]) -> Vec<Example> {
    windows
        .iter()
        .map(|w| Example {
            input: w.samples.clone(),
            label: w.gesture,
        })
        .collect()
}

/// Trains the configured model on one fold and scores it on the fold's test
/// repetitions.
pub fn run_fold(
    config: &ExperimentConfig,
    data: &PreparedData,
    plan: &FoldPlan,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<(TrainedModel, FoldReport)> {
    let (train, val, test) = split_windows(&data.windows, plan);
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::Data(format!(
            "fold leaves an empty split (train {}, val {}, test {})",
            train.len(),
            val.len(),
            test.len()
        )));
    }
    let classes = data.manifest.gestures.len();
    let fold = plan.fold_id as u64;
    let (model, training, svm) = match config.model {
        ModelKind::CompactCnn | ModelKind::GenericCnn => {
            let spec = config.network_spec(data.window_samples, data.manifest.channels, classes)?;
            let mut net = Network::new(spec, derive_seed(config.seed, 2 * fold))?;
            let train_cfg = TrainConfig {
                seed: derive_seed(config.train.seed, 2 * fold + 1),
                ..config.train.clone()
            };
            let report = train_with_log(&mut net, &examples(&train), &examples(&val), &train_cfg, on_epoch)?;
            (TrainedModel::Network(net), Some(report), None)
        }
        ModelKind::SvmMdwt => {
            let wavelet = config.wavelet_spec();
            let features = train
                .iter()
                .map(|w| mdwt_features(&w.samples, &wavelet))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<usize> = train.iter().map(|w| w.gesture).collect();
            let fit = svm_fit(&features, &labels, &config.svm)?;
            let summary = SvmSummary {
                gamma: fit.model.gamma,
                support_vectors: fit.model.pool.len(),
                class_weights: fit.class_weights.clone(),
                machines: fit.stats.clone(),
            };
            (TrainedModel::Svm { model: fit.model, wavelet }, None, Some(summary))
        }
    };
    let confusion = evaluate(&data.manifest.gestures, test.iter().copied(), |w| model.predict(w))?;
    let macro_accuracy = crate::pipeline::macro_accuracy(&confusion)?;
    let report = FoldReport {
        fold_id: plan.fold_id,
        train_reps: plan.train_reps.clone(),
        val_reps: plan.val_reps.clone(),
        test_reps: plan.test_reps.clone(),
        train_windows: train.len(),
        val_windows: val.len(),
        test_windows: test.len(),
        macro_accuracy,
        confusion,
        training,
        svm,
    };
    Ok((model, report))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let data = prepare(config)?;
    run_experiment_on(config, &data)
}

/// [`run_experiment`] on already prepared windows.
pub fn run_experiment_on(config: &ExperimentConfig, data: &PreparedData) -> Result<ExperimentReport> {
    let plans = make_fold_plans(config.folds, config.seed)?;
    let mut folds = Vec::with_capacity(plans.len());
    let mut parameter_count = 0;
    for plan in &plans {
        let (model, report) = run_fold(config, data, plan, |r| {
            log::debug!("fold {} {}", plan.fold_id, serde_json::to_string(r).unwrap_or_default())
        })
        .map_err(|e| e.context(format!("fold {}", plan.fold_id)))?;
        log::info!(
            "fold {} (test reps {:?}): macro accuracy {:.4}",
            plan.fold_id,
            plan.test_reps,
            report.macro_accuracy
        );
        parameter_count = model.parameter_count();
        folds.push(report);
    }
    let cms: Vec<ConfusionMatrix> = folds.iter().map(|f| f.confusion.clone()).collect();
    let pooled = pooled_macro_accuracy(&cms)?;
    let mut pooled_confusion = ConfusionMatrix::new(data.manifest.gestures.clone());
    for cm in &cms {
        pooled_confusion.merge(cm)?;
    }
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        subject_id: data.manifest.subject_id.clone(),
        device: config.device,
        model: config.model,
        parameter_count,
        class_names: data.manifest.gestures.clone(),
        window_samples: data.window_samples,
        step_samples: data.step_samples,
        config: config.clone(),
        mean_fold_macro_accuracy: folds.iter().map(|f| f.macro_accuracy).sum::<f64>() / folds.len() as f64,
        folds,
        pooled_macro_accuracy: pooled,
        pooled_confusion,
    })
}

/// Scores a saved model on the test repetitions of fold `fold_index`.
pub fn evaluate_model(config: &ExperimentConfig, model: &TrainedModel, fold_index: usize) -> Result<FoldReport> {
    let data = prepare(config)?;
    let plans = make_fold_plans(config.folds, config.seed)?;
    let plan = plans
        .get(fold_index)
        .ok_or_else(|| Error::Usage(format!("fold {fold_index} out of range for {} folds", plans.len())))?;
    let (train, val, test) = split_windows(&data.windows, plan);
    let confusion = evaluate(&data.manifest.gestures, test.iter().copied(), |w| model.predict(w))?;
    Ok(FoldReport {
        fold_id: plan.fold_id,
        train_reps: plan.train_reps.clone(),
        val_reps: plan.val_reps.clone(),
        test_reps: plan.test_reps.clone(),
        train_windows: train.len(),
        val_windows: val.len(),
        test_windows: test.len(),
        macro_accuracy: crate::pipeline::macro_accuracy(&confusion)?,
        confusion,
        training: None,
        svm: None,
    })
}

/// mDWT rows for every window: header then `gesture, repetition,
/// source_offset, features..`.
pub fn feature_table(config: &ExperimentConfig) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let data = prepare(config)?;
    let wavelet = config.wavelet_spec();
    let mut header: Vec<String> = ["gesture", "repetition", "source_offset"].map(String::from).to_vec();
    header.extend(feature_names(data.manifest.channels, &wavelet));
    let rows = data
        .windows
        .iter()
        .map(|w| {
            let f = mdwt_features(&w.samples, &wavelet)?;
            let mut row = vec![w.gesture.to_string(), w.repetition.to_string(), w.source_offset.to_string()];
            row.extend(f.iter().map(f64::to_string));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

/// Latency of a freshly built (or supplied) network for `kind`.
pub fn bench_network(config: &ExperimentConfig, kind: ModelKind, net: Option<&Network>) -> Result<BenchReport> {
    let built;
    let net = match net {
        Some(n) => n,
        None => {
            let cfg = ExperimentConfig {
                model: kind,
                ..config.clone()
            };
            let rows = config.window.window_samples(config.device.default_sample_rate_hz());
            built = Network::new(cfg.network_spec(rows, config.device.channels(), 15)?, config.seed)?;
            &built
        }
    };
    benchmark(kind.name(), net.parameter_count(), net.input_shape(), |x| net.predict(x), &config.bench)
}
