//! Class-aware distance-based outlier scoring (CODB and its normalised
//! variant ECODB).
//!
//! Every instance is described by three neighbourhood statistics:
//!
//! * `pcl`: the fraction of its `k` nearest neighbours sharing its label;
//! * `deviation`: the summed distance to every other instance of its class;
//! * `kdist`: the summed distance to its `k` nearest neighbours.
//!
//! CODB combines them as `k*pcl + alpha/deviation + beta*kdist`. ECODB drops
//! the hand-tuned weights and uses `k*pcl - norm(deviation) + norm(kdist)`,
//! min-max normalising over the top-`n` candidate set. For both scores the
//! smallest value marks the strongest class outlier.
//!
//! ECODB is evaluated in two passes: every instance is first ranked by
//! `k*pcl` (ties: larger deviation, then smaller kdist, then smaller id) and
//! the first `n` become candidates; the candidates are then normalised,
//! scored and re-ranked by ECOF (ties by id).

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distance::{distance, Measure};
use crate::error::{Error, Result};

/// Guard for `1 / deviation` when deviation is exactly zero.
pub const DEVIATION_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierParams {
    pub k: usize,
    pub n: usize,
    pub measure: Measure,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for OutlierParams {
    fn default() -> Self {
        Self {
            k: 12,
            n: 10,
            measure: Measure::CorrelationSimilarity,
            alpha: 100.0,
            beta: 0.1,
        }
    }
}

impl OutlierParams {
    pub fn validate_for(&self, size: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::params("k must be positive"));
        }
        if self.k >= size {
            return Err(Error::params(format!(
                "k = {} must be smaller than the dataset size {size}",
                self.k
            )));
        }
        if self.n > size {
            return Err(Error::params(format!(
                "n = {} exceeds the dataset size {size}",
                self.n
            )));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::params("alpha and beta must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Codb,
    Ecodb,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Codb => "codb",
            Algorithm::Ecodb => "ecodb",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "codb" => Ok(Algorithm::Codb),
            "ecodb" => Ok(Algorithm::Ecodb),
            other => Err(Error::Config(format!(
                "unknown outlier algorithm {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub id: usize,
    pub pcl: f64,
    pub deviation: f64,
    pub kdist: f64,
    pub score: f64,
    /// Set when CODB had to substitute the epsilon guard for a zero deviation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// Ascending by score; the first entry is the strongest outlier.
    pub ranked: Vec<ScoredInstance>,
    pub params: OutlierParams,
    pub algorithm: Algorithm,
}

impl OutlierReport {
    pub fn ids(&self) -> Vec<usize> {
        self.ranked.iter().map(|s| s.id).collect()
    }

    pub fn empty(params: OutlierParams, algorithm: Algorithm) -> Self {
        Self {
            ranked: Vec::new(),
            params,
            algorithm,
        }
    }
}

/// The `k` nearest neighbours of `query_id` (itself excluded), ascending by
/// distance with ties broken by ascending id.
pub fn knn(
    dataset: &Dataset,
    query_id: usize,
    k: usize,
    measure: &Measure,
) -> Result<Vec<(usize, f64)>> {
    let query = lookup(dataset, query_id)?;
    check_k(k, dataset.len())?;
    let mut others = dataset
        .instances()
        .iter()
        .filter(|i| i.id != query_id)
        .map(|i| Ok((i.id, distance(&query.features, &i.features, measure)?)))
        .collect::<Result<Vec<_>>>()?;
    others.sort_by(neighbour_order);
    others.truncate(k);
    Ok(others)
}

pub fn pcl(dataset: &Dataset, query_id: usize, k: usize, measure: &Measure) -> Result<f64> {
    let label = lookup(dataset, query_id)?.label;
    let neighbours = knn(dataset, query_id, k, measure)?;
    let same = neighbours
        .iter()
        .filter(|(id, _)| dataset.get(*id).is_some_and(|i| i.label == label))
        .count();
    Ok(same as f64 / k as f64)
}

pub fn deviation(dataset: &Dataset, query_id: usize, measure: &Measure) -> Result<f64> {
    let query = lookup(dataset, query_id)?;
    let distances = dataset
        .instances()
        .iter()
        .filter(|i| i.id != query_id && i.label == query.label)
        .map(|i| distance(&query.features, &i.features, measure))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ascending_sum(distances))
}

/// Sums in ascending order, so equal multisets of distances give bit-equal
/// totals and exact ties reach the id tie-break.
fn ascending_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

pub fn kdist(dataset: &Dataset, query_id: usize, k: usize, measure: &Measure) -> Result<f64> {
    Ok(knn(dataset, query_id, k, measure)?
        .iter()
        .map(|(_, d)| d)
        .sum())
}

/// Class outlier factor: `k*pcl + alpha/deviation + beta*kdist`.
///
/// A zero deviation is replaced by [`DEVIATION_EPSILON`]; the second return
/// value reports whether that happened.
pub fn cof(k: usize, pcl: f64, deviation: f64, kdist: f64, alpha: f64, beta: f64) -> (f64, bool) {
    let degenerate = deviation == 0.0;
    let dev = if degenerate {
        DEVIATION_EPSILON
    } else {
        deviation
    };
    (
        k as f64 * pcl + alpha * (1.0 / dev) + beta * kdist,
        degenerate,
    )
}

/// Enhanced class outlier factor: `k*pcl - norm_deviation + norm_kdist`.
pub fn ecof(k: usize, pcl: f64, norm_deviation: f64, norm_kdist: f64) -> f64 {
    k as f64 * pcl - norm_deviation + norm_kdist
}

/// Min-max normalisation; 0 when the range is empty.
pub fn min_max_normalize(value: f64, min: f64, max: f64) -> f64 {
    if max == min {
        0.0
    } else {
        (value - min) / (max - min)
    }
}

pub fn codb_score(
    dataset: &Dataset,
    query_id: usize,
    params: &OutlierParams,
) -> Result<ScoredInstance> {
    let p = pcl(dataset, query_id, params.k, &params.measure)?;
    let dev = deviation(dataset, query_id, &params.measure)?;
    let kd = kdist(dataset, query_id, params.k, &params.measure)?;
    let (score, degenerate) = cof(params.k, p, dev, kd, params.alpha, params.beta);
    Ok(ScoredInstance {
        id: query_id,
        pcl: p,
        deviation: dev,
        kdist: kd,
        score,
        degenerate,
    })
}

/// Ranks every instance by COF and reports the `n` lowest.
pub fn codb_detect(dataset: &Dataset, params: &OutlierParams) -> Result<OutlierReport> {
    params.validate_for(dataset.len())?;
    let stats = neighbourhood_stats(dataset, params.k, &params.measure)?;
    let mut scored: Vec<ScoredInstance> = stats
        .iter()
        .map(|s| {
            let (score, degenerate) = cof(
                params.k,
                s.pcl,
                s.deviation,
                s.kdist,
                params.alpha,
                params.beta,
            );
            ScoredInstance {
                id: s.id,
                pcl: s.pcl,
                deviation: s.deviation,
                kdist: s.kdist,
                score,
                degenerate,
            }
        })
        .collect();
    scored.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.id.cmp(&b.id)));
    scored.truncate(params.n);
    Ok(OutlierReport {
        ranked: scored,
        params: params.clone(),
        algorithm: Algorithm::Codb,
    })
}

/// Two-pass ECODB detection; see the module documentation.
pub fn ecodb_detect(dataset: &Dataset, params: &OutlierParams) -> Result<OutlierReport> {
    params.validate_for(dataset.len())?;
    let mut stats = neighbourhood_stats(dataset, params.k, &params.measure)?;

    let k = params.k as f64;
    stats.sort_by(|a, b| {
        (k * a.pcl)
            .total_cmp(&(k * b.pcl))
            .then(b.deviation.total_cmp(&a.deviation))
            .then(a.kdist.total_cmp(&b.kdist))
            .then(a.id.cmp(&b.id))
    });
    stats.truncate(params.n);

    let ranked = score_candidates(&stats, params.k);
    Ok(OutlierReport {
        ranked,
        params: params.clone(),
        algorithm: Algorithm::Ecodb,
    })
}

pub fn detect(
    dataset: &Dataset,
    params: &OutlierParams,
    algorithm: Algorithm,
) -> Result<OutlierReport> {
    match algorithm {
        Algorithm::Codb => codb_detect(dataset, params),
        Algorithm::Ecodb => ecodb_detect(dataset, params),
    }
}

/// Drops the reported instances, keeping the survivors' order.
pub fn remove_outliers(dataset: &Dataset, report: &OutlierReport) -> Result<Dataset> {
    let mut remove = HashSet::with_capacity(report.ranked.len());
    for s in &report.ranked {
        if !dataset.contains(s.id) {
            return Err(Error::UnknownId(s.id));
        }
        remove.insert(s.id);
    }
    if remove.is_empty() {
        return Ok(dataset.clone());
    }
    let kept = dataset
        .instances()
        .iter()
        .filter(|i| !remove.contains(&i.id))
        .cloned()
        .collect();
    dataset.with_instances(kept)
}

#[derive(Debug, Clone, Copy)]
struct Stats {
    id: usize,
    pcl: f64,
    deviation: f64,
    kdist: f64,
}

fn score_candidates(candidates: &[Stats], k: usize) -> Vec<ScoredInstance> {
    let (min_dev, max_dev) = bounds(candidates.iter().map(|s| s.deviation));
    let (min_kd, max_kd) = bounds(candidates.iter().map(|s| s.kdist));
    let mut ranked: Vec<ScoredInstance> = candidates
        .iter()
        .map(|s| {
            let nd = min_max_normalize(s.deviation, min_dev, max_dev);
            let nk = min_max_normalize(s.kdist, min_kd, max_kd);
            ScoredInstance {
                id: s.id,
                pcl: s.pcl,
                deviation: s.deviation,
                kdist: s.kdist,
                score: ecof(k, s.pcl, nd, nk),
                degenerate: false,
            }
        })
        .collect();
    ranked.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.id.cmp(&b.id)));
    ranked
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// pcl, deviation and kdist for every instance from one pairwise pass.
fn neighbourhood_stats(dataset: &Dataset, k: usize, measure: &Measure) -> Result<Vec<Stats>> {
    let instances = dataset.instances();
    let n = instances.len();
    let matrix: Vec<Vec<f64>> = instances
        .par_iter()
        .map(|a| {
            instances
                .iter()
                .map(|b| distance(&a.features, &b.features, measure))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    Ok((0..n)
        .into_par_iter()
        .map(|q| {
            let query = &instances[q];
            let row = &matrix[q];
            let mut others: Vec<(usize, f64, usize)> = (0..n)
                .filter(|&j| j != q)
                .map(|j| (instances[j].id, row[j], j))
                .collect();
            others.sort_by(|a, b| neighbour_order(&(a.0, a.1), &(b.0, b.1)));
            let neighbours = &others[..k];
            let same = neighbours
                .iter()
                .filter(|&&(_, _, j)| instances[j].label == query.label)
                .count();
            let kdist = neighbours.iter().map(|&(_, d, _)| d).sum();
            let deviation = ascending_sum(
                (0..n)
                    .filter(|&j| j != q && instances[j].label == query.label)
                    .map(|j| row[j])
                    .collect(),
            );
            Stats {
                id: query.id,
                pcl: same as f64 / k as f64,
                deviation,
                kdist,
            }
        })
        .collect())
}

fn neighbour_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

fn lookup(dataset: &Dataset, id: usize) -> Result<&crate::data::Instance> {
    dataset.get(id).ok_or(Error::UnknownId(id))
}

fn check_k(k: usize, size: usize) -> Result<()> {
    if k == 0 || k >= size {
        return Err(Error::params(format!(
            "k = {k} must satisfy 1 <= k < dataset size {size}"
        )));
    }
    Ok(())
}
