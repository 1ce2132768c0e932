use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecoamlp::baselines::{ClassifierKind, PreprocessorKind};
use ecoamlp::class_outlier::{detect, Algorithm};
use ecoamlp::data::{split, NominalEncoder};
use ecoamlp::distance::MeasureKind;
use ecoamlp::harness::{self, ExperimentConfig, SweepAxis};
use ecoamlp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ecoamlp",
    version,
    about = "Class-outlier removal and AutoMLP experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json and report.txt.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the experiment once per variant along one axis.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated variant names, e.g. none,ztransform,ecodb.
        #[arg(long, value_delimiter = ',', required = true)]
        variants: Vec<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Rank class outliers and print them as JSON.
    DetectOutliers {
        /// Score the whole dataset instead of the training split.
        #[arg(long)]
        whole_dataset: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Settings that override the config file, which overrides the defaults.
#[derive(Args, Default)]
struct Overrides {
    /// JSON config file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (file for detect-outliers; stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Class-stratified split.
    #[arg(long)]
    stratified: bool,
    /// Comma-separated feature names to remove before anything else.
    #[arg(long, value_delimiter = ',')]
    drop_features: Option<Vec<String>>,

    #[arg(long)]
    preprocessor: Option<PreprocessorKind>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_outliers: Option<usize>,
    #[arg(long)]
    measure: Option<MeasureKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    bootstrap_fraction: Option<f64>,
    #[arg(long)]
    stratified_fraction: Option<f64>,

    #[arg(long)]
    classifier: Option<ClassifierKind>,
    #[arg(long)]
    ensemble_size: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Hidden-unit range as MIN,MAX.
    #[arg(long, value_parser = parse_pair::<usize>)]
    hidden_range: Option<(usize, usize)>,
    /// Learning-rate range as MIN,MAX.
    #[arg(long, value_parser = parse_pair::<f64>)]
    lr_range: Option<(f64, f64)>,
    /// Offspring inherit their parent's weights.
    #[arg(long)]
    warm_start: bool,
    /// Feed raw features to the networks instead of min-max scaled ones.
    #[arg(long)]
    no_input_scaling: bool,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long)]
    knn_measure: Option<MeasureKind>,
    /// Evaluate on the training set instead of the test set (diagnostic).
    #[arg(long)]
    test_on_train: bool,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> std::result::Result<(T, T), String> {
    let (a, b) = s
        .split_once(',')
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected MIN,MAX, got {s:?}"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<T>()
            .map_err(|_| format!("bad number {v:?}"))
    };
    Ok((parse(a)?, parse(b)?))
}

macro_rules! apply {
    ($cfg:ident, $o:ident, $($field:ident => $target:ident),* $(,)?) => {
        $(if let Some(v) = $o.$field.clone() { $cfg.$target = v; })*
    };
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path).map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(other.to_string()),
            })?,
            None => ExperimentConfig::default(),
        };
        let o = self;
        apply!(c, o,
            data => data_path, output => output_path, seed => seed, repeats => repeats,
            train_fraction => train_fraction, validation_fraction => validation_fraction,
            test_fraction => test_fraction, drop_features => drop_features,
            preprocessor => preprocessor, algorithm => algorithm, k => k, n_outliers => n_outliers,
            measure => measure, alpha => alpha, beta => beta,
            bootstrap_fraction => bootstrap_fraction, stratified_fraction => stratified_fraction,
            classifier => classifier, ensemble_size => ensemble_size, cycles => cycles,
            generations => generations, hidden_range => hidden_range, lr_range => lr_range,
            knn_k => knn_k, knn_measure => knn_measure,
        );
        c.stratified |= o.stratified;
        c.warm_start |= o.warm_start;
        c.test_on_train |= o.test_on_train;
        if o.no_input_scaling {
            c.scale_inputs = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { overrides } => {
            let config = overrides.resolve()?;
            let report = harness::run_experiment(&config)?;
            let text = report.to_text();
            harness::write_outputs(&config.output_path, &report, &text)?;
            print!("{text}");
        }
        Command::Sweep {
            axis,
            variants,
            overrides,
        } => {
            let config = overrides.resolve()?;
            let report = harness::run_sweep(&config, axis, &variants)?;
            let text = report.to_text();
            harness::write_outputs(&config.output_path, &report, &text)?;
            print!("{text}");
        }
        Command::DetectOutliers {
            whole_dataset,
            overrides,
        } => {
            let config = overrides.resolve()?;
            let data = harness::load_dataset(&config)?;
            let schema = data.schema().clone();
            let target = if whole_dataset {
                data
            } else {
                split(&data, &config.split_spec(config.seed))?.train
            };
            let encoded = NominalEncoder::fit(&target).apply(&target)?;
            let report = detect(&encoded, &config.outlier_params(&schema), config.algorithm)?;
            let json = serde_json::to_string_pretty(&report)?;
            match overrides.output {
                Some(path) => harness::write_atomic(&path, json.as_bytes())?,
                None => println!("{json}"),
            }
        }
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
