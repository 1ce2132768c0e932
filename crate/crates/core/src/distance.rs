//! Distance measures between feature vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Schema;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Measure {
    Euclidean,
    /// `1 - r` with `r` the Pearson correlation of the two vectors.
    #[serde(alias = "correlation")]
    CorrelationSimilarity,
    /// Euclidean over numeric features plus a mismatch count over nominal
    /// ones. `nominal[i]` marks feature `i` as nominal.
    Mixed {
        nominal: Vec<bool>,
    },
}

impl Measure {
    /// Mixed measure taking nominal flags from a schema.
    pub fn mixed_for(schema: &Schema) -> Self {
        Measure::Mixed {
            nominal: schema.nominal_mask(),
        }
    }

    pub fn kind(&self) -> MeasureKind {
        match self {
            Measure::Euclidean => MeasureKind::Euclidean,
            Measure::CorrelationSimilarity => MeasureKind::Correlation,
            Measure::Mixed { .. } => MeasureKind::Mixed,
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        distance(a, b, self)
    }
}

/// Measure selector without schema metadata, as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Euclidean,
    Correlation,
    Mixed,
}

impl MeasureKind {
    /// Resolves to a full measure; `mixed` reads nominal flags from `schema`.
    pub fn resolve(self, schema: &Schema) -> Measure {
        match self {
            MeasureKind::Euclidean => Measure::Euclidean,
            MeasureKind::Correlation => Measure::CorrelationSimilarity,
            MeasureKind::Mixed => Measure::mixed_for(schema),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Euclidean => "euclidean",
            MeasureKind::Correlation => "correlation",
            MeasureKind::Mixed => "mixed",
        })
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(MeasureKind::Euclidean),
            "correlation" | "correlation_similarity" => Ok(MeasureKind::Correlation),
            "mixed" => Ok(MeasureKind::Mixed),
            other => Err(Error::Config(format!("unknown measure {other:?}"))),
        }
    }
}

pub fn distance(a: &[f64], b: &[f64], measure: &Measure) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    match measure {
        Measure::Euclidean => Ok(euclidean(a, b)),
        Measure::CorrelationSimilarity => {
            if a.len() < 2 {
                return Err(Error::params(
                    "correlation distance needs vectors of length >= 2",
                ));
            }
            Ok(correlation_distance(a, b))
        }
        Measure::Mixed { nominal } => {
            if nominal.len() != a.len() {
                return Err(Error::DimensionMismatch {
                    expected: nominal.len(),
                    actual: a.len(),
                });
            }
            let mut sq = 0.0;
            let mut mismatches = 0usize;
            for ((x, y), &is_nominal) in a.iter().zip(b).zip(nominal) {
                if is_nominal {
                    mismatches += usize::from(x != y);
                } else {
                    sq += (x - y) * (x - y);
                }
            }
            Ok(sq.sqrt() + mismatches as f64)
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `1 - pearson(a, b)`, with `r = 0` when either vector is constant, unless
/// the vectors are equal.
fn correlation_distance(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 1.0;
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    1.0 - r
}
