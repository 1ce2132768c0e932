//! Evolutionary ensemble of perceptrons with heterogeneous hidden widths and
//! learning rates.
//!
//! Each generation trains every member for a fixed number of epochs, measures
//! its validation error, keeps the better half and replaces the worse half
//! with freshly initialised offspring whose hyperparameters are log-normal
//! perturbations of a randomly chosen survivor's.
//!
//! All randomness is drawn from sub-seeds derived from the root seed by
//! (purpose, generation, slot, ...) so members may train on separate threads
//! without affecting the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataSplit, Dataset};
use crate::error::{Error, Result};
use crate::mlp::{InputScaling, MlpConfig, MlpNetwork};
use crate::rng::{derive_seed, Xoshiro256StarStar};

/// Log-space spread of offspring hidden widths around the parent's.
pub const HIDDEN_LOG_SIGMA: f64 = 0.3;
/// Log-space spread of offspring learning rates around the parent's.
pub const LR_LOG_SIGMA: f64 = 0.5;

const TAG_INIT_HYPER: u64 = 1;
const TAG_INIT_WEIGHTS: u64 = 2;
const TAG_SHUFFLE: u64 = 3;
const TAG_OFFSPRING_HYPER: u64 = 4;
const TAG_OFFSPRING_WEIGHTS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoMlpParams {
    pub ensemble_size: usize,
    pub cycles_per_generation: usize,
    pub generations: usize,
    pub hidden_range: (usize, usize),
    pub lr_range: (f64, f64),
    pub seed: u64,
    /// Offspring inherit the chosen survivor's width and weights and only
    /// resample the learning rate.
    #[serde(default)]
    pub warm_start: bool,
    /// Fit a `[-1, 1]` min-max input map on the training set and attach it
    /// to every member.
    #[serde(default = "default_true")]
    pub scale_inputs: bool,
}

fn default_true() -> bool {
    true
}

impl Default for AutoMlpParams {
    fn default() -> Self {
        Self {
            ensemble_size: 4,
            cycles_per_generation: 10,
            generations: 10,
            hidden_range: (2, 256),
            lr_range: (1e-3, 1.0),
            seed: 0,
            warm_start: false,
            scale_inputs: true,
        }
    }
}

impl AutoMlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size < 2 {
            return Err(Error::params("ensemble_size must be at least 2"));
        }
        if self.cycles_per_generation == 0 || self.generations == 0 {
            return Err(Error::params("cycles and generations must be positive"));
        }
        let (hmin, hmax) = self.hidden_range;
        if hmin == 0 || hmin >= hmax {
            return Err(Error::params(format!(
                "hidden_range must satisfy 0 < min < max, got {hmin}..{hmax}"
            )));
        }
        let (lmin, lmax) = self.lr_range;
        if !(lmin > 0.0 && lmin < lmax && lmax.is_finite()) {
            return Err(Error::params(format!(
                "lr_range must satisfy 0 < min < max, got {lmin}..{lmax}"
            )));
        }
        Ok(())
    }

    fn clamp_hidden(&self, h: f64) -> usize {
        (h.round() as usize).clamp(self.hidden_range.0, self.hidden_range.1)
    }

    fn clamp_lr(&self, lr: f64) -> f64 {
        lr.clamp(self.lr_range.0, self.lr_range.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub network: MlpNetwork,
    /// Validation error from the most recent evaluation; `None` for offspring
    /// that have not been trained yet.
    pub validation_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub slot: usize,
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub validation_error: f64,
    pub replaced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub members: Vec<MemberRecord>,
    pub best_slot: usize,
    pub best_error: f64,
    /// Minimum of `best_error` over this and all earlier generations.
    pub running_min_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoMlpPopulation {
    pub members: Vec<Member>,
    pub generation: usize,
    pub history: Vec<GenerationRecord>,
}

impl AutoMlpPopulation {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Evaluated member with the lowest validation error (ties by slot).
    pub fn best(&self) -> Option<(usize, &Member)> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.validation_error.map(|e| (i, m, e)))
            .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
            .map(|(i, m, _)| (i, m))
    }
}

pub fn init_population(params: &AutoMlpParams, input_dim: usize) -> Result<AutoMlpPopulation> {
    params.validate()?;
    let (hmin, hmax) = params.hidden_range;
    let members = (0..params.ensemble_size)
        .map(|slot| {
            let mut rng = Xoshiro256StarStar::seed_from_u64(derive_seed(
                params.seed,
                &[TAG_INIT_HYPER, slot as u64],
            ));
            let hidden = params.clamp_hidden(rng.log_uniform(hmin as f64, hmax as f64));
            let lr = params.clamp_lr(rng.log_uniform(params.lr_range.0, params.lr_range.1));
            let network = MlpNetwork::init(MlpConfig {
                input_dim,
                hidden_units: hidden,
                learning_rate: lr,
                weight_init_seed: derive_seed(params.seed, &[TAG_INIT_WEIGHTS, slot as u64]),
            })?;
            Ok(Member {
                network,
                validation_error: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AutoMlpPopulation {
        members,
        generation: 0,
        history: Vec::new(),
    })
}

/// Train, evaluate, rank and replace the worse half.
pub fn run_generation(
    mut pop: AutoMlpPopulation,
    train: &Dataset,
    validation: &Dataset,
    params: &AutoMlpParams,
) -> Result<AutoMlpPopulation> {
    params.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let generation = pop.generation;

    pop.members
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(slot, member)| -> Result<()> {
            for cycle in 0..params.cycles_per_generation {
                let seed = derive_seed(
                    params.seed,
                    &[TAG_SHUFFLE, generation as u64, slot as u64, cycle as u64],
                );
                member.network.train_epoch(train, seed)?;
            }
            member.validation_error = Some(member.network.evaluate_error(validation)?);
            Ok(())
        })?;

    let errors: Vec<f64> = pop
        .members
        .iter()
        .map(|m| m.validation_error.expect("evaluated above"))
        .collect();
    let mut ranking: Vec<usize> = (0..pop.size()).collect();
    ranking.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));

    let replace_count = pop.size() / 2;
    let survivors = &ranking[..pop.size() - replace_count];
    let replaced = &ranking[pop.size() - replace_count..];

    let best_slot = ranking[0];
    let best_error = errors[best_slot];
    let running_min_error = pop
        .history
        .last()
        .map_or(best_error, |h| h.running_min_error.min(best_error));
    let members = pop
        .members
        .iter()
        .enumerate()
        .map(|(slot, m)| MemberRecord {
            slot,
            hidden_units: m.network.hidden_units(),
            learning_rate: m.network.learning_rate(),
            validation_error: errors[slot],
            replaced: replaced.contains(&slot),
        })
        .collect();
    pop.history.push(GenerationRecord {
        generation,
        members,
        best_slot,
        best_error,
        running_min_error,
    });

    let parents: Vec<MlpNetwork> = survivors
        .iter()
        .map(|&s| pop.members[s].network.clone())
        .collect();
    for &slot in replaced {
        let mut rng = Xoshiro256StarStar::seed_from_u64(derive_seed(
            params.seed,
            &[TAG_OFFSPRING_HYPER, generation as u64, slot as u64],
        ));
        let parent = &parents[rng.index(parents.len())];
        let lr = params.clamp_lr((parent.learning_rate().ln() + LR_LOG_SIGMA * rng.normal()).exp());
        let network = if params.warm_start {
            let mut child = parent.clone();
            child.config.learning_rate = lr;
            child
        } else {
            let hidden = params.clamp_hidden(
                ((parent.hidden_units() as f64).ln() + HIDDEN_LOG_SIGMA * rng.normal()).exp(),
            );
            MlpNetwork::init(MlpConfig {
                input_dim: parent.input_dim(),
                hidden_units: hidden,
                learning_rate: lr,
                weight_init_seed: derive_seed(
                    params.seed,
                    &[TAG_OFFSPRING_WEIGHTS, generation as u64, slot as u64],
                ),
            })?
            .with_input_scaling(parent.input_scaling.clone())
        };
        pop.members[slot] = Member {
            network,
            validation_error: None,
        };
    }

    pop.generation += 1;
    Ok(pop)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoMlpRun {
    pub winner: MlpNetwork,
    pub winner_validation_error: f64,
    pub history: Vec<GenerationRecord>,
}

/// Runs `params.generations` generations and returns the member with the
/// lowest final validation error.
pub fn train_automlp(split: &DataSplit, params: &AutoMlpParams) -> Result<AutoMlpRun> {
    train_automlp_on(&split.train, &split.validation, params)
}

/// Initial population for `train`, with input scaling fitted on it when
/// `params.scale_inputs` is set.
pub fn population_for(train: &Dataset, params: &AutoMlpParams) -> Result<AutoMlpPopulation> {
    let mut pop = init_population(params, train.dim())?;
    if params.scale_inputs {
        let scaling = InputScaling::min_max(train)?;
        for m in pop.members.iter_mut() {
            m.network.input_scaling = Some(scaling.clone());
        }
    }
    Ok(pop)
}

pub fn train_automlp_on(
    train: &Dataset,
    validation: &Dataset,
    params: &AutoMlpParams,
) -> Result<AutoMlpRun> {
    if train.dim() != validation.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            actual: validation.dim(),
        });
    }
    let mut pop = population_for(train, params)?;
    for _ in 0..params.generations {
        pop = run_generation(pop, train, validation, params)?;
    }
    let (_, best) = pop.best().expect("at least one survivor is evaluated");
    Ok(AutoMlpRun {
        winner: best.network.clone(),
        winner_validation_error: best.validation_error.expect("evaluated"),
        history: pop.history,
    })
}
