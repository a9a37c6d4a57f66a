use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{beam_search, Example, Model, ModelError};
use crate::evalbench::{success, SuccessMode};
use crate::nnet::Adam;
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub adam: Adam,
    /// Global gradient-norm threshold.
    pub clip: f64,
    /// Non-improving dev evaluations tolerated before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Seed of the per-epoch shuffles.
    pub seed: u64,
    /// Beam width used for dev evaluation.
    pub dev_beam: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { adam: Adam::default(), clip: 5.0, patience: 10, max_epochs: 100, seed: 0, dev_beam: 1 }
    }
}

/// Result of one per-instance update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
    pub total: usize,
    pub grad_norm: f64,
    pub clipped_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean loss per instance.
    pub train_loss: f64,
    /// Teacher-forced per-action argmax accuracy.
    pub train_accuracy: f64,
    /// Single-sentence success rate on the dev set, if one was given.
    pub dev_success: Option<f64>,
    pub max_clipped_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
    pub best_dev: Option<f64>,
    pub stopped_early: bool,
}

/// Dev success rate of one model under single-sentence evaluation.
pub fn dev_success(model: &Model, dev: &[Example<'_>], beam: usize) -> Result<f64, ModelError> {
    if dev.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for ex in dev {
        let r = beam_search(core::slice::from_ref(model), ex.world, ex.start, std::slice::from_ref(&ex.tokens), beam, model.config.max_actions)?;
        if success(ex.world, ex.start, ex.actions, &r.actions(), SuccessMode::SingleSentence) {
            hits += 1;
        }
    }
    Ok(hits as f64 / dev.len() as f64)
}

/// Train with one update per instance, evaluating on `dev` after every
/// epoch and keeping the best-scoring parameters. Without a dev set all
/// `max_epochs` epochs run and the final parameters are kept.
pub fn train(
    model: &mut Model,
    train_set: &[Example<'_>],
    dev: &[Example<'_>],
    config: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainHistory, ModelError> {
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Model)> = None;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..config.max_epochs {
        order.shuffle(&mut seeded(derive_seed(config.seed, epoch as u64)));
        let (mut loss, mut correct, mut total, mut max_norm) = (0.0, 0, 0, 0.0f64);
        for &i in &order {
            let s = model.train_step(&train_set[i], &config.adam, config.clip)?;
            loss += s.loss;
            correct += s.correct;
            total += s.total;
            max_norm = max_norm.max(s.clipped_norm);
        }
        let dev_score = if dev.is_empty() { None } else { Some(dev_success(model, dev, config.dev_beam)?) };
        let log = EpochLog {
            epoch,
            train_loss: loss / train_set.len().max(1) as f64,
            train_accuracy: correct as f64 / total.max(1) as f64,
            dev_success: dev_score,
            max_clipped_norm: max_norm,
        };
        on_epoch(&log);
        history.epochs.push(log);
        match dev_score {
            Some(score) => {
                if best.as_ref().is_none_or(|(b, _)| score > *b) {
                    best = Some((score, model.clone()));
                    history.best_epoch = Some(epoch);
                    history.best_dev = Some(score);
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= config.patience {
                        history.stopped_early = true;
                        break;
                    }
                }
            }
            None => history.best_epoch = Some(epoch),
        }
    }
    if let Some((_, m)) = best {
        *model = m;
    }
    Ok(history)
}
