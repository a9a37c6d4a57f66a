use alloc::vec;
use alloc::vec::Vec;

use super::{DecodeState, Model, ModelError, ACTIONS};
use crate::math;
use crate::nnet::LOG_FLOOR;
use crate::worldsim::{step, Action, Outcome, Pose, StepResult, WorldMap};

impl AsRef<Model> for Model {
    fn as_ref(&self) -> &Model {
        self
    }
}

/// Decoded action sequence for a list of sentences.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamResult {
    /// Actions per sentence; every finished sentence ends with STOP.
    pub sentences: Vec<Vec<Action>>,
    pub pose: Pose,
    /// Sum of log-probabilities of all chosen actions.
    pub score: f64,
    pub outcome: Outcome,
}

impl BeamResult {
    pub fn actions(&self) -> Vec<Action> {
        self.sentences.concat()
    }
}

#[derive(Clone, Debug)]
struct Hyp {
    states: Vec<DecodeState>,
    pose: Pose,
    sentences: Vec<Vec<Action>>,
    score: f64,
    outcome: Option<Outcome>,
    steps: usize,
}

fn check_models<M: AsRef<Model>>(models: &[M], sentences: &[Vec<usize>]) -> Result<(), ModelError> {
    let first = models.first().ok_or(ModelError::NoModels)?.as_ref();
    if models.iter().any(|m| m.as_ref().config.vocab_size != first.config.vocab_size) {
        return Err(ModelError::Incompatible("vocabulary size"));
    }
    if sentences.is_empty() {
        return Err(ModelError::NoSentences);
    }
    Ok(())
}

/// Ensemble average of the members' next-action distributions, with each
/// member's advanced decoder state.
fn averaged<M: AsRef<Model>>(
    models: &[M],
    states: &[DecodeState],
    world: &WorldMap,
    pose: Pose,
) -> Result<(Vec<DecodeState>, [f64; ACTIONS]), ModelError> {
    let mut mean = [0.0; ACTIONS];
    let mut next = Vec::with_capacity(models.len());
    for (k, (m, s)) in models.iter().zip(states).enumerate() {
        let (st, p) = m.as_ref().action_distribution(s, world, pose)?;
        // Running mean: exact when all members agree.
        for (a, v) in mean.iter_mut().zip(&p) {
            *a += (v - *a) / (k + 1) as f64;
        }
        next.push(st);
    }
    Ok((next, mean))
}

fn log_prob(p: f64) -> f64 {
    math::ln(p.max(LOG_FLOOR))
}

/// Pose and terminal outcome after `action`.
fn advance(world: &WorldMap, pose: Pose, action: Action) -> (Pose, Option<Outcome>) {
    match step(world, pose, action) {
        StepResult::Moved(p) | StepResult::Turned(p) => (p, None),
        StepResult::Stopped => (pose, Some(Outcome::Stopped)),
        StepResult::WallHit => (pose, Some(Outcome::WallHit)),
    }
}

fn start_sentence<M: AsRef<Model>>(models: &[M], tokens: &[usize]) -> Result<Vec<DecodeState>, ModelError> {
    models.iter().map(|m| m.as_ref().encode(tokens).map(|e| m.as_ref().init_state(&e))).collect()
}

/// Best hypothesis by outcome class (stopped, exhausted, wall hit), then score.
fn best(hyps: &[Hyp]) -> Option<&Hyp> {
    let rank = |h: &Hyp| match h.outcome {
        Some(Outcome::Stopped) => 0,
        Some(Outcome::Exhausted) => 1,
        _ => 2,
    };
    let mut out: Option<&Hyp> = None;
    for h in hyps {
        out = match out {
            Some(b) if (rank(b), -b.score) <= (rank(h), -h.score) => Some(b),
            _ => Some(h),
        };
    }
    out
}

fn finish(h: &Hyp) -> BeamResult {
    BeamResult { sentences: h.sentences.clone(), pose: h.pose, score: h.score, outcome: h.outcome.unwrap_or(Outcome::Exhausted) }
}

/// Beam search over ensemble-averaged action distributions.
///
/// Each step expands every live hypothesis by all actions and keeps the
/// `width` best children by summed log-probability; children that stop or
/// hit a wall leave the beam as finished. After each sentence the
/// hypotheses that stopped carry their pose and score into the next one,
/// with the decoder re-initialized from that sentence's encoding. A
/// sentence gets at most `max_actions` actions.
pub fn beam_search<M: AsRef<Model>>(
    models: &[M],
    world: &WorldMap,
    start: Pose,
    sentences: &[Vec<usize>],
    width: usize,
    max_actions: usize,
) -> Result<BeamResult, ModelError> {
    check_models(models, sentences)?;
    let width = width.max(1);
    let mut beam = vec![Hyp { states: Vec::new(), pose: start, sentences: Vec::new(), score: 0.0, outcome: None, steps: 0 }];
    for (si, tokens) in sentences.iter().enumerate() {
        let init = start_sentence(models, tokens)?;
        for h in &mut beam {
            h.states = init.clone();
            h.sentences.push(Vec::new());
            h.outcome = None;
            h.steps = 0;
        }
        let mut finished: Vec<Hyp> = Vec::new();
        while !beam.is_empty() {
            let mut expanded = Vec::with_capacity(beam.len());
            let mut children: Vec<(f64, usize, usize)> = Vec::with_capacity(beam.len() * ACTIONS);
            for (i, h) in beam.iter().enumerate() {
                let (states, p) = averaged(models, &h.states, world, h.pose)?;
                for (a, &pa) in p.iter().enumerate() {
                    children.push((h.score + log_prob(pa), i, a));
                }
                expanded.push(states);
            }
            children.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(core::cmp::Ordering::Equal).then((x.1, x.2).cmp(&(y.1, y.2))));
            let mut next = Vec::with_capacity(width);
            for &(score, i, a) in children.iter().take(width) {
                let action = Action::from_index(a).expect("action index");
                let parent = &beam[i];
                let (pose, mut outcome) = advance(world, parent.pose, action);
                let steps = parent.steps + 1;
                if outcome.is_none() && steps >= max_actions {
                    outcome = Some(Outcome::Exhausted);
                }
                let mut acts = parent.sentences.clone();
                acts.last_mut().unwrap().push(action);
                let states = expanded[i].iter().cloned().map(|s| s.after(action)).collect();
                let child = Hyp { states, pose, sentences: acts, score, outcome, steps };
                if child.outcome.is_some() {
                    finished.push(child);
                } else {
                    next.push(child);
                }
            }
            beam = next;
        }
        let last = si + 1 == sentences.len();
        let mut stopped: Vec<Hyp> = finished.iter().filter(|h| h.outcome == Some(Outcome::Stopped)).cloned().collect();
        if last || stopped.is_empty() {
            return Ok(finish(best(&finished).expect("every step finishes or extends a hypothesis")));
        }
        stopped.sort_by(|x, y| y.score.partial_cmp(&x.score).unwrap_or(core::cmp::Ordering::Equal));
        stopped.truncate(width);
        beam = stopped;
    }
    unreachable!("the last sentence returns")
}

/// Follow the most likely action at every step.
pub fn greedy_decode<M: AsRef<Model>>(
    models: &[M],
    world: &WorldMap,
    start: Pose,
    sentences: &[Vec<usize>],
    max_actions: usize,
) -> Result<BeamResult, ModelError> {
    check_models(models, sentences)?;
    let mut pose = start;
    let mut score = 0.0;
    let mut out = Vec::new();
    for tokens in sentences {
        let mut states = start_sentence(models, tokens)?;
        let mut acts = Vec::new();
        let outcome = loop {
            let (next, p) = averaged(models, &states, world, pose)?;
            let (mut a, mut best) = (0, f64::NEG_INFINITY);
            for (k, &pk) in p.iter().enumerate() {
                if score + log_prob(pk) > best {
                    best = score + log_prob(pk);
                    a = k;
                }
            }
            score = best;
            let action = Action::from_index(a).expect("action index");
            acts.push(action);
            states = next.into_iter().map(|s| s.after(action)).collect();
            let (p2, outcome) = advance(world, pose, action);
            pose = p2;
            match outcome {
                Some(o) => break o,
                None if acts.len() >= max_actions => break Outcome::Exhausted,
                None => {}
            }
        };
        out.push(acts);
        if outcome != Outcome::Stopped {
            return Ok(BeamResult { sentences: out, pose, score, outcome });
        }
    }
    Ok(BeamResult { sentences: out, pose, score, outcome: Outcome::Stopped })
}
