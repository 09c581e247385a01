use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use emgnet::bench::{benchmark, format_table, BenchReport};
use emgnet::dwt::mdwt_features;
use emgnet::experiment::{
    bench_network, evaluate_model, feature_table, prepare, run_experiment, run_fold, ExperimentConfig, ModelKind,
    TrainedModel,
};
use emgnet::pipeline::{make_fold_plans, write_dataset};
use emgnet::svm::svm_predict;
use emgnet::synth::{generate_dataset, Difficulty, SynthConfig};
use emgnet::tensor::Shape;
use emgnet::{Device, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "emgnet", version, about = "Compact CNN and SVM+mDWT sEMG gesture experiments")]
struct Cli {
    /// JSON config: a synth config for `synth`, an experiment config otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        device: Option<Device>,
        #[arg(long, value_parser = parse_difficulty)]
        difficulty: Option<Difficulty>,
        #[arg(long)]
        hold_seconds: Option<f64>,
    },
    /// Train one fold and save the model.
    Train {
        #[arg(long, default_value_t = 0)]
        fold: usize,
    },
    /// Score a saved model on a fold's test repetitions.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        fold: usize,
    },
    /// Train and evaluate every fold; writes report.json.
    RunExperiment,
    /// Write mDWT features of every window as CSV.
    Features,
    /// Inference latency table.
    Bench {
        /// Comma-separated models to build fresh, e.g. compact_cnn,generic_cnn.
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelKind>,
        /// Benchmark a saved model instead.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Benchmark a stub that sleeps this many milliseconds per call.
        #[arg(long)]
        stub_ms: Option<f64>,
    },
}

fn parse_difficulty(s: &str) -> std::result::Result<Difficulty, String> {
    match s {
        "separable" => Ok(Difficulty::Separable),
        "realistic" => Ok(Difficulty::Realistic),
        other => Err(format!("unknown difficulty '{other}' (expected separable or realistic)")),
    }
}

fn output_dir(cli: &Cli, default: &str) -> Result<PathBuf> {
    let dir = cli.output.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .map_err(|e| Error::from(e).context(format!("writing {}", path.display())))
}

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    Ok(config)
}

fn cmd_synth(cli: &Cli, device: Option<Device>, difficulty: Option<Difficulty>, hold: Option<f64>) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
            serde_json::from_str::<SynthConfig>(&text)
                .map_err(|e| Error::Usage(format!("invalid synth config {}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(d) = device {
        config = SynthConfig {
            device: d,
            channels: d.channels(),
            sample_rate_hz: d.default_sample_rate_hz(),
            ..config
        };
    }
    if let Some(d) = difficulty {
        config.difficulty = d;
    }
    if let Some(h) = hold {
        config.hold_seconds = h;
    }
    if let Some(seed) = cli.seed {
        config.cross_subject_seed = seed;
    }
    let dataset = generate_dataset(&config)?;
    let dir = output_dir(cli, "data")?;
    write_dataset(&dir, &dataset)?;
    println!("wrote {} recordings to {}", dataset.recordings.len(), dir.display());
    Ok(())
}

fn cmd_train(cli: &Cli, fold: usize) -> Result<()> {
    let config = experiment_config(cli)?;
    let data = prepare(&config)?;
    let plans = make_fold_plans(config.folds, config.seed)?;
    let plan = plans
        .get(fold)
        .ok_or_else(|| Error::Usage(format!("fold {fold} out of range for {} folds", plans.len())))?;
    let dir = output_dir(cli, ".")?;
    let log_path = dir.join("train_log.jsonl");
    let mut log = fs::File::create(&log_path)?;
    let mut log_error = None;
    let (model, report) = run_fold(&config, &data, plan, |record| {
        if let Err(e) = serde_json::to_string(record).map(|line| writeln!(log, "{line}")) {
            log_error.get_or_insert(e.to_string());
        }
    })
    .map_err(|e| e.context(format!("fold {fold}")))?;
    if let Some(e) = log_error {
        log::warn!("training log incomplete: {e}");
    }
    model.save(dir.join("model.bin"))?;
    write_json(&dir.join("fold_report.json"), &report)?;
    println!(
        "fold {fold}: test macro accuracy {:.4}; model written to {}",
        report.macro_accuracy,
        dir.join("model.bin").display()
    );
    Ok(())
}

fn cmd_eval(cli: &Cli, model_path: &Path, fold: usize) -> Result<()> {
    let config = experiment_config(cli)?;
    let model = TrainedModel::load(model_path)?;
    let report = evaluate_model(&config, &model, fold)?;
    let dir = output_dir(cli, ".")?;
    write_json(&dir.join("eval_report.json"), &report)?;
    println!("fold {fold}: test macro accuracy {:.4}", report.macro_accuracy);
    Ok(())
}

fn cmd_run_experiment(cli: &Cli) -> Result<()> {
    let config = experiment_config(cli)?;
    let report = run_experiment(&config)?;
    let dir = output_dir(cli, ".")?;
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "{} on {}: pooled macro accuracy {:.4} over {} folds",
        config.model.name(),
        config.device,
        report.pooled_macro_accuracy,
        report.folds.len()
    );
    Ok(())
}

fn cmd_features(cli: &Cli) -> Result<()> {
    let config = experiment_config(cli)?;
    let (header, rows) = feature_table(&config)?;
    let dir = output_dir(cli, ".")?;
    let path = dir.join("features.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(&header)?;
    for row in &rows {
        w.write_record(row)?;
    }
    w.flush()?;
    println!("wrote {} feature rows to {}", rows.len(), path.display());
    Ok(())
}

fn cmd_bench(cli: &Cli, models: &[ModelKind], model_path: Option<&Path>, stub_ms: Option<f64>) -> Result<()> {
    let config = experiment_config(cli)?;
    let rows = config.window.window_samples(config.device.default_sample_rate_hz());
    let shape = Shape::new(rows, config.device.channels(), 1);
    let mut reports: Vec<BenchReport> = Vec::new();
    if let Some(ms) = stub_ms {
        if !(ms >= 0.0 && ms.is_finite()) {
            return Err(Error::Usage(format!("stub_ms must be non-negative, got {ms}")));
        }
        let pause = Duration::from_secs_f64(ms / 1e3);
        reports.push(benchmark("stub", 0, shape, |_| {
            std::thread::sleep(pause);
            Ok(())
        }, &config.bench)?);
    }
    if let Some(path) = model_path {
        match TrainedModel::load(path)? {
            TrainedModel::Network(net) => reports.push(bench_network(&config, config.model, Some(&net))?),
            model @ TrainedModel::Svm { .. } => {
                let params = model.parameter_count();
                let TrainedModel::Svm { model: svm, wavelet } = model else {
                    unreachable!()
                };
                reports.push(benchmark(
                    ModelKind::SvmMdwt.name(),
                    params,
                    shape,
                    |x| svm_predict(&svm, &mdwt_features(x, &wavelet)?),
                    &config.bench,
                )?);
            }
        }
    }
    for &kind in models {
        if kind == ModelKind::SvmMdwt {
            return Err(Error::Usage("svm_mdwt needs a trained model; pass --model".into()));
        }
        reports.push(bench_network(&config, kind, None)?);
    }
    if reports.is_empty() {
        reports.push(bench_network(&config, config.model, None)?);
    }
    let dir = output_dir(cli, ".")?;
    write_json(&dir.join("bench_report.json"), &reports)?;
    print!("{}", format_table(&reports));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth {
            device,
            difficulty,
            hold_seconds,
        } => cmd_synth(cli, *device, *difficulty, *hold_seconds),
        Command::Train { fold } => cmd_train(cli, *fold),
        Command::Eval { model, fold } => cmd_eval(cli, model, *fold),
        Command::RunExperiment => cmd_run_experiment(cli),
        Command::Features => cmd_features(cli),
        Command::Bench {
            models,
            model,
            stub_ms,
        } => cmd_bench(cli, models, model.as_deref(), *stub_ms),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
