//! End-to-end experiment runner.
//!
//! Pipeline for one repeat: split, fit the nominal encoder on the training
//! set, preprocess the training set, train the classifier, evaluate on the
//! validation set and finally on the test set. The test set is only reachable
//! through an [`AccessLog`]-tracked handle that the pipeline opens once, at
//! [`Stage::FinalEvaluation`].

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automlp::{train_automlp_on, AutoMlpParams, AutoMlpRun, GenerationRecord};
use crate::baselines::{
    bootstrap_sample, stratified_sample, ClassifierKind, GaussianNb, KnnClassifier, Preprocessor,
    PreprocessorKind, ZTransform,
};
use crate::class_outlier::{detect, remove_outliers, Algorithm, OutlierParams, OutlierReport};
use crate::data::{load_csv, split, Dataset, NominalEncoder, Schema, SplitSpec};
use crate::distance::MeasureKind;
use crate::error::{Error, Result};
use crate::metrics::{self, EvalReport, METRICS};
use crate::rng::derive_seed;

const TAG_SAMPLE: u64 = 11;
const TAG_AUTOMLP: u64 = 12;

/// Test-set accuracy gain of ECODB over no preprocessing that the original
/// comparison reported. Checked and flagged, never enforced.
pub const REFERENCE_ECODB_GAIN: f64 = 0.05;

fn default_data_path() -> PathBuf {
    PathBuf::from("data/pima-indians-diabetes.csv")
}

/// Flat experiment configuration. Every field has a default, so a config file
/// only needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub output_path: PathBuf,
    /// Base seed; repeat `r` uses `seed + r` for every stochastic stage.
    pub seed: u64,
    pub repeats: usize,

    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub stratified: bool,
    pub drop_features: Vec<String>,

    pub preprocessor: PreprocessorKind,
    pub algorithm: Algorithm,
    pub k: usize,
    pub n_outliers: usize,
    pub measure: MeasureKind,
    pub alpha: f64,
    pub beta: f64,
    pub bootstrap_fraction: f64,
    pub stratified_fraction: f64,

    pub classifier: ClassifierKind,
    pub ensemble_size: usize,
    pub cycles: usize,
    pub generations: usize,
    pub hidden_range: (usize, usize),
    pub lr_range: (f64, f64),
    pub warm_start: bool,
    pub scale_inputs: bool,
    pub knn_k: usize,
    pub knn_measure: MeasureKind,

    /// Degenerate diagnostic: evaluate the "test" phase on the training set.
    pub test_on_train: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let split = SplitSpec::default();
        let outliers = OutlierParams::default();
        let automlp = AutoMlpParams::default();
        Self {
            data_path: default_data_path(),
            output_path: PathBuf::from("out"),
            seed: 0,
            repeats: 1,
            train_fraction: split.train_fraction,
            validation_fraction: split.validation_fraction,
            test_fraction: split.test_fraction,
            stratified: split.stratified,
            drop_features: Vec::new(),
            preprocessor: PreprocessorKind::Ecodb,
            algorithm: Algorithm::Ecodb,
            k: outliers.k,
            n_outliers: outliers.n,
            measure: MeasureKind::Correlation,
            alpha: outliers.alpha,
            beta: outliers.beta,
            bootstrap_fraction: 1.0,
            stratified_fraction: 0.9,
            classifier: ClassifierKind::Automlp,
            ensemble_size: automlp.ensemble_size,
            cycles: automlp.cycles_per_generation,
            generations: automlp.generations,
            hidden_range: automlp.hidden_range,
            lr_range: automlp.lr_range,
            warm_start: automlp.warm_start,
            scale_inputs: automlp.scale_inputs,
            knn_k: 5,
            knn_measure: MeasureKind::Euclidean,
            test_on_train: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            validation_fraction: self.validation_fraction,
            test_fraction: self.test_fraction,
            seed,
            stratified: self.stratified,
        }
    }

    pub fn outlier_params(&self, schema: &Schema) -> OutlierParams {
        OutlierParams {
            k: self.k,
            n: self.n_outliers,
            measure: self.measure.resolve(schema),
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn automlp_params(&self, seed: u64) -> AutoMlpParams {
        AutoMlpParams {
            ensemble_size: self.ensemble_size,
            cycles_per_generation: self.cycles,
            generations: self.generations,
            hidden_range: self.hidden_range,
            lr_range: self.lr_range,
            seed,
            warm_start: self.warm_start,
            scale_inputs: self.scale_inputs,
        }
    }

    /// The preprocessor for one repeat. `schema` supplies nominal flags for
    /// the mixed measure.
    pub fn preprocessor_for(&self, repeat_seed: u64, schema: &Schema) -> Preprocessor {
        let sample_seed = derive_seed(repeat_seed, &[TAG_SAMPLE]);
        match self.preprocessor {
            PreprocessorKind::None => Preprocessor::None,
            PreprocessorKind::Ztransform => Preprocessor::Ztransform,
            PreprocessorKind::Bootstrap => Preprocessor::BootstrapSample {
                fraction: self.bootstrap_fraction,
                seed: sample_seed,
            },
            PreprocessorKind::Stratified => Preprocessor::StratifiedSample {
                fraction: self.stratified_fraction,
                seed: sample_seed,
            },
            PreprocessorKind::Ecodb => {
                Preprocessor::EcodbOutlierRemoval(self.outlier_params(schema))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        self.split_spec(self.seed).validate()?;
        let placeholder = Schema::numeric(&["x", "y"], ["0", "1"])?;
        self.preprocessor_for(self.seed, &placeholder).validate()?;
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if self.knn_k == 0 {
            return Err(Error::Config("knn_k must be positive".into()));
        }
        if self.classifier == ClassifierKind::Automlp {
            self.automlp_params(self.seed).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Transform,
    Preprocess,
    Fit,
    ValidationEvaluation,
    FinalEvaluation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub subset: Subset,
    pub stage: Stage,
}

/// Ordered record of every read of a split subset.
#[derive(Debug, Default)]
pub struct AccessLog {
    events: Mutex<Vec<Access>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&self, subset: Subset, stage: Stage) {
        self.events
            .lock()
            .expect("access log poisoned")
            .push(Access { subset, stage });
    }

    pub fn events(&self) -> Vec<Access> {
        self.events.lock().expect("access log poisoned").clone()
    }

    /// Whether the test set was read only at final evaluation, after every
    /// other recorded access.
    pub fn test_isolated(&self) -> bool {
        let events = self.events();
        let last_non_final = events
            .iter()
            .rposition(|a| a.stage != Stage::FinalEvaluation);
        events.iter().enumerate().all(|(i, a)| {
            a.subset != Subset::Test
                || (a.stage == Stage::FinalEvaluation && last_non_final.is_none_or(|j| i > j))
        })
    }
}

/// A split subset that can only be read by naming the pipeline stage.
pub struct Tracked<'a> {
    data: Dataset,
    subset: Subset,
    log: &'a AccessLog,
}

impl<'a> Tracked<'a> {
    pub fn new(data: Dataset, subset: Subset, log: &'a AccessLog) -> Self {
        Self { data, subset, log }
    }

    pub fn read(&self, stage: Stage) -> &Dataset {
        self.log.record(self.subset, stage);
        &self.data
    }

    /// Schema metadata only; not a data access.
    pub fn schema(&self) -> &Schema {
        self.data.schema()
    }
}

/// A preprocessed training set. Only [`preprocess`] can construct one, and
/// only [`fit`] consumes it, so training cannot precede preprocessing.
#[derive(Debug)]
pub struct PreparedTrain {
    data: Dataset,
    outliers: Option<OutlierReport>,
}

impl PreparedTrain {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn outliers(&self) -> Option<&OutlierReport> {
        self.outliers.as_ref()
    }
}

/// Feature maps fitted on the training set and replayed on the other sets.
#[derive(Debug, Clone)]
pub struct FeatureMaps {
    encoder: NominalEncoder,
    ztransform: Option<ZTransform>,
}

impl FeatureMaps {
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        let encoded = self.encoder.apply(dataset)?;
        match &self.ztransform {
            Some(z) => z.apply(&encoded),
            None => Ok(encoded),
        }
    }
}

/// Fits the nominal encoder on `train` and applies the preprocessor to it.
pub fn preprocess(
    train: &Dataset,
    preprocessor: &Preprocessor,
    algorithm: Algorithm,
) -> Result<(PreparedTrain, FeatureMaps)> {
    preprocessor.validate()?;
    let encoder = NominalEncoder::fit(train);
    let encoded = encoder.apply(train)?;
    let mut maps = FeatureMaps {
        encoder,
        ztransform: None,
    };
    let prepared = match preprocessor {
        Preprocessor::None => PreparedTrain {
            data: encoded,
            outliers: None,
        },
        Preprocessor::Ztransform => {
            let z = ZTransform::fit(&encoded)?;
            let data = z.apply(&encoded)?;
            maps.ztransform = Some(z);
            PreparedTrain {
                data,
                outliers: None,
            }
        }
        Preprocessor::BootstrapSample { fraction, seed } => PreparedTrain {
            data: bootstrap_sample(&encoded, *fraction, *seed)?.dataset,
            outliers: None,
        },
        Preprocessor::StratifiedSample { fraction, seed } => PreparedTrain {
            data: stratified_sample(&encoded, *fraction, *seed)?,
            outliers: None,
        },
        Preprocessor::EcodbOutlierRemoval(params) => {
            let report = detect(&encoded, params, algorithm)?;
            PreparedTrain {
                data: remove_outliers(&encoded, &report)?,
                outliers: Some(report),
            }
        }
    };
    Ok((prepared, maps))
}

#[derive(Debug, Clone)]
pub enum ClassifierConfig {
    Automlp(AutoMlpParams),
    Knn {
        k: usize,
        measure: crate::distance::Measure,
    },
    Nb,
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Automlp(AutoMlpRun),
    Knn(KnnClassifier),
    Nb(GaussianNb),
}

impl TrainedModel {
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<usize>> {
        match self {
            TrainedModel::Automlp(run) => run.winner.predict_all(data),
            TrainedModel::Knn(knn) => data
                .instances()
                .iter()
                .map(|i| knn.classify(&i.features))
                .collect(),
            TrainedModel::Nb(nb) => data
                .instances()
                .iter()
                .map(|i| nb.classify(&i.features))
                .collect(),
        }
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<EvalReport> {
        metrics::evaluate(&self.predict_all(data)?, &data.labels())
    }
}

/// Trains a classifier on a preprocessed training set. The validation set is
/// used for model selection by AutoMLP and ignored by the baselines.
pub fn fit(
    train: &PreparedTrain,
    validation: &Dataset,
    classifier: &ClassifierConfig,
) -> Result<TrainedModel> {
    Ok(match classifier {
        ClassifierConfig::Automlp(params) => {
            TrainedModel::Automlp(train_automlp_on(&train.data, validation, params)?)
        }
        ClassifierConfig::Knn { k, measure } => {
            TrainedModel::Knn(KnnClassifier::new(train.data.clone(), *k, measure.clone())?)
        }
        ClassifierConfig::Nb => TrainedModel::Nb(GaussianNb::fit(&train.data)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoMlpSummary {
    pub winner_hidden_units: usize,
    pub winner_learning_rate: f64,
    pub winner_validation_error: f64,
    pub history: Vec<GenerationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub seed: u64,
    /// Train, validation and test sizes straight after splitting.
    pub split_sizes: [usize; 3],
    pub train_size_after_preprocessing: usize,
    pub validation: EvalReport,
    pub test: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outliers: Option<OutlierReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub automlp: Option<AutoMlpSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Self {
            median,
            min: v[0],
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub validation: BTreeMap<String, Summary>,
    pub test: BTreeMap<String, Summary>,
}

impl Aggregate {
    fn of(repeats: &[RepeatReport]) -> Self {
        let collect = |pick: fn(&RepeatReport) -> &EvalReport| {
            METRICS
                .iter()
                .map(|(name, get)| {
                    let values: Vec<f64> = repeats.iter().map(|r| get(pick(r))).collect();
                    (name.to_string(), Summary::of(&values))
                })
                .collect()
        };
        Self {
            validation: collect(|r| &r.validation),
            test: collect(|r| &r.test),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch; the only non-deterministic field.
    pub generated_at: u64,
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatReport>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn test_accuracies(&self) -> Vec<f64> {
        self.repeats.iter().map(|r| r.test.accuracy).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "preprocessor={} classifier={} repeats={} seed={}\n\n",
            self.config.preprocessor, self.config.classifier, self.config.repeats, self.config.seed
        );
        let rows: Vec<(String, &EvalReport)> = self
            .repeats
            .iter()
            .map(|r| (format!("test #{} (seed {})", r.repeat, r.seed), &r.test))
            .collect();
        out.push_str(&metrics::format_table(&rows));
        out.push('\n');
        let headers: Vec<String> = ["test metric", "median", "min", "max"]
            .map(String::from)
            .to_vec();
        let body: Vec<Vec<String>> = METRICS
            .iter()
            .filter_map(|(name, _)| self.aggregate.test.get(*name).map(|s| (name, s)))
            .map(|(name, s)| {
                vec![
                    name.to_string(),
                    format!("{:.2}", 100.0 * s.median),
                    format!("{:.2}", 100.0 * s.min),
                    format!("{:.2}", 100.0 * s.max),
                ]
            })
            .collect();
        out.push_str(&metrics::render_columns(&headers, &body));
        out
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Loads the configured dataset and drops any configured features.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let data = load_csv(&config.data_path, &Schema::pidd())?;
    if config.drop_features.is_empty() {
        Ok(data)
    } else {
        data.drop_features(&config.drop_features)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let data = load_dataset(config)?;
    run_on_dataset(config, &data)
}

/// Runs every repeat of `config` on an already loaded dataset.
pub fn run_on_dataset(config: &ExperimentConfig, data: &Dataset) -> Result<RunReport> {
    config.validate()?;
    let repeats = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let log = AccessLog::new();
            run_repeat(config, data, r, &log)
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = Aggregate::of(&repeats);
    Ok(RunReport {
        generated_at: unix_now(),
        config: config.clone(),
        repeats,
        aggregate,
    })
}

/// One repeat of the pipeline, recording every subset access in `log`.
pub fn run_repeat(
    config: &ExperimentConfig,
    data: &Dataset,
    repeat: usize,
    log: &AccessLog,
) -> Result<RepeatReport> {
    let seed = config.seed.wrapping_add(repeat as u64);
    let parts = split(data, &config.split_spec(seed))?;
    let split_sizes = parts.sizes();
    let test_data = if config.test_on_train {
        parts.train.clone()
    } else {
        parts.test
    };
    let train = Tracked::new(parts.train, Subset::Train, log);
    let validation = Tracked::new(parts.validation, Subset::Validation, log);
    let test = Tracked::new(test_data, Subset::Test, log);

    let schema = train.schema().clone();
    let preprocessor = config.preprocessor_for(seed, &schema);
    let (prepared, maps) = preprocess(
        train.read(Stage::Preprocess),
        &preprocessor,
        config.algorithm,
    )?;
    let validation_data = maps.apply(validation.read(Stage::Transform))?;

    let classifier = match config.classifier {
        ClassifierKind::Automlp => {
            ClassifierConfig::Automlp(config.automlp_params(derive_seed(seed, &[TAG_AUTOMLP])))
        }
        ClassifierKind::Knn => ClassifierConfig::Knn {
            k: config.knn_k,
            measure: config.knn_measure.resolve(&schema),
        },
        ClassifierKind::Nb => ClassifierConfig::Nb,
    };
    if matches!(classifier, ClassifierConfig::Automlp(_)) {
        log.record(Subset::Validation, Stage::Fit);
    }
    let model = fit(&prepared, &validation_data, &classifier)?;

    log.record(Subset::Validation, Stage::ValidationEvaluation);
    let validation_report = model.evaluate(&validation_data)?;

    let test_data = maps.apply(test.read(Stage::FinalEvaluation))?;
    let test_report = model.evaluate(&test_data)?;

    let automlp = match &model {
        TrainedModel::Automlp(run) => Some(AutoMlpSummary {
            winner_hidden_units: run.winner.hidden_units(),
            winner_learning_rate: run.winner.learning_rate(),
            winner_validation_error: run.winner_validation_error,
            history: run.history.clone(),
        }),
        _ => None,
    };
    Ok(RepeatReport {
        repeat,
        seed,
        split_sizes,
        train_size_after_preprocessing: prepared.data.len(),
        validation: validation_report,
        test: test_report,
        outliers: prepared.outliers,
        automlp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Preprocessor,
    Classifier,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "preprocessor" => Ok(SweepAxis::Preprocessor),
            "classifier" => Ok(SweepAxis::Classifier),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variant: String,
    /// Medians over repeats of the test metrics.
    pub accuracy: f64,
    pub weighted_mean_recall: f64,
    pub weighted_mean_precision: f64,
}

/// Paired per-seed comparison of ECODB against no preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub baseline: String,
    pub treatment: String,
    /// Treatment minus baseline test accuracy, one entry per repeat.
    pub accuracy_differences: Vec<f64>,
    pub median_difference: f64,
    pub reference_gain: f64,
    pub meets_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub generated_at: u64,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paired: Option<PairedComparison>,
    pub reports: Vec<RunReport>,
}

impl SweepReport {
    pub fn to_text(&self) -> String {
        let first = match self.axis {
            SweepAxis::Preprocessor => "Pre-processing",
            SweepAxis::Classifier => "Classifier",
        };
        let headers: Vec<String> = [first, "Accuracy", "WMR", "WMP"].map(String::from).to_vec();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.variant.clone(),
                    format!("{:.2}", 100.0 * r.accuracy),
                    format!("{:.2}", 100.0 * r.weighted_mean_recall),
                    format!("{:.2}", 100.0 * r.weighted_mean_precision),
                ]
            })
            .collect();
        let mut out = metrics::render_columns(&headers, &body);
        if let Some(p) = &self.paired {
            out.push_str(&format!(
                "\n{} vs {}: median paired accuracy difference {:+.2} points (reference gain {:.2}: {})\n",
                p.treatment,
                p.baseline,
                100.0 * p.median_difference,
                100.0 * p.reference_gain,
                if p.meets_reference { "met" } else { "NOT met" }
            ));
        }
        out
    }
}

/// Runs `base` once per variant along `axis`, sharing seeds across variants.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    variants: &[String],
) -> Result<SweepReport> {
    if variants.is_empty() {
        return Err(Error::Config("sweep needs at least one variant".into()));
    }
    let configs = variants
        .iter()
        .map(|v| {
            let mut c = base.clone();
            match axis {
                SweepAxis::Preprocessor => c.preprocessor = v.parse()?,
                SweepAxis::Classifier => c.classifier = v.parse()?,
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let data = load_dataset(base)?;
    let reports = configs
        .iter()
        .map(|c| run_on_dataset(c, &data))
        .collect::<Result<Vec<_>>>()?;

    let rows = variants
        .iter()
        .zip(&reports)
        .map(|(v, r)| SweepRow {
            variant: v.clone(),
            accuracy: r.aggregate.test["accuracy"].median,
            weighted_mean_recall: r.aggregate.test["weighted_mean_recall"].median,
            weighted_mean_precision: r.aggregate.test["weighted_mean_precision"].median,
        })
        .collect();

    let paired = (axis == SweepAxis::Preprocessor)
        .then(|| {
            let find =
                |kind: PreprocessorKind| reports.iter().position(|r| r.config.preprocessor == kind);
            let (b, t) = (
                find(PreprocessorKind::None)?,
                find(PreprocessorKind::Ecodb)?,
            );
            let diffs: Vec<f64> = reports[t]
                .test_accuracies()
                .iter()
                .zip(reports[b].test_accuracies())
                .map(|(t, b)| t - b)
                .collect();
            let median_difference = Summary::of(&diffs).median;
            Some(PairedComparison {
                baseline: PreprocessorKind::None.to_string(),
                treatment: PreprocessorKind::Ecodb.to_string(),
                accuracy_differences: diffs,
                median_difference,
                reference_gain: REFERENCE_ECODB_GAIN,
                meets_reference: median_difference > REFERENCE_ECODB_GAIN,
            })
        })
        .flatten();

    Ok(SweepReport {
        generated_at: unix_now(),
        axis,
        rows,
        paired,
        reports,
    })
}

/// Writes `report.json` and `report.txt` into `dir`, each via a temporary
/// file renamed into place.
pub fn write_outputs(dir: &Path, json: &impl Serialize, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::output(dir, e))?;
    let body = serde_json::to_vec_pretty(json)?;
    write_atomic(&dir.join("report.json"), &body)?;
    write_atomic(&dir.join("report.txt"), text.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::output(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::output(&tmp, e))?;
    file.sync_all().map_err(|e| Error::output(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::output(path, e))
}
