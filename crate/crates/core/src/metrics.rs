//! Confusion-matrix metrics for the two-class problem. Class 1 is positive.

use serde::{Deserialize, Serialize};

use crate::data::POSITIVE;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub r#fn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.r#fn
    }

    /// Actual positives.
    pub fn positives(&self) -> usize {
        self.tp + self.r#fn
    }

    /// Actual negatives.
    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    /// The same counts with the roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.r#fn,
            r#fn: self.fp,
        }
    }
}

pub fn confusion(predictions: &[usize], truths: &[usize]) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p == POSITIVE, t == POSITIVE) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, false) => m.tn += 1,
            (false, true) => m.r#fn += 1,
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub precision_pos: f64,
    pub recall_pos: f64,
    pub precision_neg: f64,
    /// True-negative rate, i.e. specificity.
    pub recall_neg: f64,
    /// Mean of the two per-class precisions.
    pub weighted_mean_precision: f64,
    /// Mean of the two per-class recalls.
    pub weighted_mean_recall: f64,
    /// Names of metrics whose denominator was zero (reported as 0).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

pub fn report(matrix: &ConfusionMatrix) -> Result<EvalReport> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut undefined = Vec::new();
    let mut ratio = |name: &str, num: usize, den: usize| {
        if den == 0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let m = matrix;
    let accuracy = ratio("accuracy", m.tp + m.tn, total);
    let precision_pos = ratio("precision_pos", m.tp, m.tp + m.fp);
    let recall_pos = ratio("recall_pos", m.tp, m.tp + m.r#fn);
    let precision_neg = ratio("precision_neg", m.tn, m.tn + m.r#fn);
    let recall_neg = ratio("recall_neg", m.tn, m.tn + m.fp);
    Ok(EvalReport {
        matrix: *matrix,
        accuracy,
        precision_pos,
        recall_pos,
        precision_neg,
        recall_neg,
        weighted_mean_precision: (precision_pos + precision_neg) / 2.0,
        weighted_mean_recall: (recall_pos + recall_neg) / 2.0,
        undefined,
    })
}

pub fn evaluate(predictions: &[usize], truths: &[usize]) -> Result<EvalReport> {
    report(&confusion(predictions, truths)?)
}

pub type MetricAccessor = fn(&EvalReport) -> f64;

/// Metric names in table order, with accessors.
pub const METRICS: [(&str, MetricAccessor); 7] = [
    ("accuracy", |r| r.accuracy),
    ("precision_pos", |r| r.precision_pos),
    ("recall_pos", |r| r.recall_pos),
    ("precision_neg", |r| r.precision_neg),
    ("recall_neg", |r| r.recall_neg),
    ("weighted_mean_precision", |r| r.weighted_mean_precision),
    ("weighted_mean_recall", |r| r.weighted_mean_recall),
];

/// Aligned text table of percentages with two decimals.
pub fn format_table(rows: &[(String, &EvalReport)]) -> String {
    let headers = [
        "", "Accuracy", "WMR", "WMP", "Prec+", "Rec+", "Prec-", "Rec-",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            let mut cells = vec![name.clone()];
            for v in [
                r.accuracy,
                r.weighted_mean_recall,
                r.weighted_mean_precision,
                r.precision_pos,
                r.recall_pos,
                r.precision_neg,
                r.recall_neg,
            ] {
                cells.push(format!("{:.2}", v * 100.0));
            }
            cells
        })
        .collect();
    render_columns(&headers.map(String::from), &body)
}

/// Left-aligns the first column and right-aligns the rest.
pub(crate) fn render_columns(headers: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(String::len).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(headers);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in body {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}
