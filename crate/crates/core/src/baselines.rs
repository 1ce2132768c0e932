//! Comparison preprocessors and classifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::class_outlier::OutlierParams;
use crate::data::{Dataset, Instance};
use crate::distance::{distance, Measure};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256StarStar;

/// Variance floor for Gaussian Naive Bayes.
pub const NB_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreprocessorKind {
    None,
    Ztransform,
    Bootstrap,
    Stratified,
    Ecodb,
}

impl PreprocessorKind {
    pub const ALL: [PreprocessorKind; 5] = [
        PreprocessorKind::None,
        PreprocessorKind::Ztransform,
        PreprocessorKind::Bootstrap,
        PreprocessorKind::Stratified,
        PreprocessorKind::Ecodb,
    ];
}

impl fmt::Display for PreprocessorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreprocessorKind::None => "none",
            PreprocessorKind::Ztransform => "ztransform",
            PreprocessorKind::Bootstrap => "bootstrap",
            PreprocessorKind::Stratified => "stratified",
            PreprocessorKind::Ecodb => "ecodb",
        })
    }
}

impl FromStr for PreprocessorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown preprocessor {s:?}")))
    }
}

/// A training-set preprocessor with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Preprocessor {
    None,
    Ztransform,
    BootstrapSample { fraction: f64, seed: u64 },
    StratifiedSample { fraction: f64, seed: u64 },
    EcodbOutlierRemoval(OutlierParams),
}

impl Preprocessor {
    pub fn kind(&self) -> PreprocessorKind {
        match self {
            Preprocessor::None => PreprocessorKind::None,
            Preprocessor::Ztransform => PreprocessorKind::Ztransform,
            Preprocessor::BootstrapSample { .. } => PreprocessorKind::Bootstrap,
            Preprocessor::StratifiedSample { .. } => PreprocessorKind::Stratified,
            Preprocessor::EcodbOutlierRemoval(_) => PreprocessorKind::Ecodb,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Preprocessor::BootstrapSample { fraction, .. }
            | Preprocessor::StratifiedSample { fraction, .. } => check_fraction(*fraction),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Automlp,
    Knn,
    Nb,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Knn,
        ClassifierKind::Nb,
        ClassifierKind::Automlp,
    ];
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Automlp => "automlp",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Nb => "nb",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "automlp" => Ok(ClassifierKind::Automlp),
            "knn" => Ok(ClassifierKind::Knn),
            "nb" | "naive_bayes" => Ok(ClassifierKind::Nb),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::params(format!(
            "sample fraction must lie in (0, 1], got {fraction}"
        )))
    }
}

/// Per-feature standardisation fitted on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTransform {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

impl ZTransform {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = train.len() as f64;
        let d = train.dim();
        let mut mean = vec![0.0; d];
        for inst in train.instances() {
            for (m, v) in mean.iter_mut().zip(&inst.features) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for inst in train.instances() {
            for ((s, v), m) in var.iter_mut().zip(&inst.features).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: dataset.dim(),
            });
        }
        let instances = dataset
            .instances()
            .iter()
            .map(|inst| Instance {
                id: inst.id,
                label: inst.label,
                features: inst
                    .features
                    .iter()
                    .zip(self.mean.iter().zip(&self.std))
                    .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
                    .collect(),
            })
            .collect();
        dataset.with_instances(instances)
    }
}

/// Fits a z-transform on `train` and applies it to `train` and every other set.
pub fn ztransform_fit_apply(
    train: &Dataset,
    others: &[&Dataset],
) -> Result<(Dataset, Vec<Dataset>)> {
    let z = ZTransform::fit(train)?;
    let others = others
        .iter()
        .map(|d| z.apply(d))
        .collect::<Result<Vec<_>>>()?;
    Ok((z.apply(train)?, others))
}

/// A resampled dataset with fresh ids; `provenance[i]` is the source id of
/// the instance with new id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub dataset: Dataset,
    pub provenance: Vec<usize>,
}

/// `round(fraction * n)` draws with replacement.
pub fn bootstrap_sample(train: &Dataset, fraction: f64, seed: u64) -> Result<Sample> {
    check_fraction(fraction)?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = (fraction * train.len() as f64).round() as usize;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut provenance = Vec::with_capacity(m);
    let instances = (0..m)
        .map(|new_id| {
            let src = &train.instances()[rng.index(train.len())];
            provenance.push(src.id);
            Instance {
                id: new_id,
                features: src.features.clone(),
                label: src.label,
            }
        })
        .collect();
    Ok(Sample {
        dataset: train.with_instances(instances)?,
        provenance,
    })
}

/// Per-class sampling without replacement, `round(fraction * n_c)` per class.
/// Survivors keep their ids and original order.
pub fn stratified_sample(train: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    check_fraction(fraction)?;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut keep = std::collections::HashSet::new();
    for class in 0..2 {
        let mut ids: Vec<usize> = train
            .instances()
            .iter()
            .filter(|i| i.label == class)
            .map(|i| i.id)
            .collect();
        if ids.is_empty() {
            continue;
        }
        let take = (fraction * ids.len() as f64).round() as usize;
        if take == 0 {
            return Err(Error::params(format!(
                "fraction {fraction} leaves no instances of class {class}"
            )));
        }
        rng.shuffle(&mut ids);
        keep.extend(ids.into_iter().take(take));
    }
    Ok(train.subset(&keep))
}

/// Majority vote of the `k` nearest training instances; ties go to class 0.
pub fn knn_classify(train: &Dataset, query: &[f64], k: usize, measure: &Measure) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > train.len() {
        return Err(Error::params(format!(
            "k = {k} must satisfy 1 <= k <= training size {}",
            train.len()
        )));
    }
    let mut scored = train
        .instances()
        .iter()
        .map(|i| Ok((distance(query, &i.features, measure)?, i.id, i.label)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let positives = scored[..k].iter().filter(|s| s.2 == 1).count();
    Ok(usize::from(positives * 2 > k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnClassifier {
    pub train: Dataset,
    pub k: usize,
    pub measure: Measure,
}

impl KnnClassifier {
    pub fn new(train: Dataset, k: usize, measure: Measure) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if k == 0 || k > train.len() {
            return Err(Error::params(format!(
                "k = {k} out of range for {} instances",
                train.len()
            )));
        }
        Ok(Self { train, k, measure })
    }

    pub fn classify(&self, query: &[f64]) -> Result<usize> {
        knn_classify(&self.train, query, self.k, &self.measure)
    }
}

/// Gaussian Naive Bayes with per-class, per-feature mean and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    /// Maximum-likelihood variance floored at [`NB_VARIANCE_FLOOR`].
    pub variance: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let counts = train.class_counts();
        if let Some(class) = (0..2).find(|&c| counts[c] < 2) {
            return Err(Error::params(format!(
                "class {class} has {} training instances; Naive Bayes needs at least 2",
                counts[class]
            )));
        }
        let d = train.dim();
        let n = train.len() as f64;
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        for inst in train.instances() {
            for (m, v) in mean[inst.label].iter_mut().zip(&inst.features) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
        }
        let mut variance = [vec![0.0; d], vec![0.0; d]];
        for inst in train.instances() {
            let c = inst.label;
            for ((s, v), m) in variance[c].iter_mut().zip(&inst.features).zip(&mean[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for c in 0..2 {
            variance[c]
                .iter_mut()
                .for_each(|s| *s = (*s / counts[c] as f64).max(NB_VARIANCE_FLOOR));
        }
        Ok(Self {
            log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
            mean,
            variance,
        })
    }

    /// Unnormalised log posteriors: log prior plus summed log densities.
    pub fn log_scores(&self, query: &[f64]) -> Result<[f64; 2]> {
        if query.len() != self.mean[0].len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean[0].len(),
                actual: query.len(),
            });
        }
        let score = |c: usize| {
            self.log_prior[c]
                + query
                    .iter()
                    .zip(&self.mean[c])
                    .zip(&self.variance[c])
                    .map(|((x, m), v)| {
                        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v)
                    })
                    .sum::<f64>()
        };
        Ok([score(0), score(1)])
    }

    /// Argmax of the log posteriors; ties go to class 0.
    pub fn classify(&self, query: &[f64]) -> Result<usize> {
        let [s0, s1] = self.log_scores(query)?;
        Ok(usize::from(s1 > s0))
    }
}
