//! Success criteria, the prequential learning-efficiency protocol, golden
//! section search and a model-backed learner.

use alloc::string::String;
use alloc::vec::Vec;

use crate::datastore::Vocabulary;
use crate::langgen::{generate_indexed, GenError, GeneratorConfig, Instance, Mix, TemplateSet};
use crate::math;
use crate::navmodel::{beam_search, Example, Model, ModelError};
use crate::nnet::Adam;
use crate::worldsim::{step, Action, Outcome, Pose, StepResult, WorldMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuccessMode {
    /// Final position and orientation must match.
    SingleSentence,
    /// Final position must match.
    Paragraph,
}

impl SuccessMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single" | "singleSentence" => Some(SuccessMode::SingleSentence),
            "paragraph" => Some(SuccessMode::Paragraph),
            _ => None,
        }
    }
}

/// Execute a possibly multi-sentence action list in which every STOP ends a
/// sentence. The run succeeds only if it ends with STOP and never hits a
/// wall.
pub fn run_sentences(world: &WorldMap, start: Pose, actions: &[Action]) -> (Pose, Outcome) {
    let mut pose = start;
    for (i, &a) in actions.iter().enumerate() {
        match step(world, pose, a) {
            StepResult::Moved(p) | StepResult::Turned(p) => pose = p,
            StepResult::Stopped if i + 1 == actions.len() => return (pose, Outcome::Stopped),
            StepResult::Stopped => {}
            StepResult::WallHit => return (pose, Outcome::WallHit),
        }
    }
    (pose, Outcome::Exhausted)
}

/// Whether `predicted` ends where `gold` does. Wall hits and sequences
/// without a final STOP fail.
pub fn success(world: &WorldMap, start: Pose, gold: &[Action], predicted: &[Action], mode: SuccessMode) -> bool {
    let (want, gold_outcome) = run_sentences(world, start, gold);
    debug_assert_eq!(gold_outcome, Outcome::Stopped, "gold must end with STOP");
    let (got, outcome) = match mode {
        SuccessMode::SingleSentence => {
            let run = crate::worldsim::execute(world, start, predicted, predicted.len().max(1));
            (run.pose, run.outcome)
        }
        SuccessMode::Paragraph => run_sentences(world, start, predicted),
    };
    outcome == Outcome::Stopped
        && match mode {
            SuccessMode::SingleSentence => got == want,
            SuccessMode::Paragraph => got.node() == want.node(),
        }
}

pub fn instance_success(inst: &Instance, predicted: &[Action], mode: SuccessMode) -> bool {
    success(&inst.world, inst.start, &inst.actions, predicted, mode)
}

/// Something that can be evaluated and then trained on a stream.
pub trait Learner {
    fn predict(&mut self, inst: &Instance) -> Result<Vec<Action>, ModelError>;
    fn learn(&mut self, batch: &[Instance]) -> Result<(), ModelError>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyConfig {
    pub threshold: f64,
    pub cap: u64,
    pub eval_batch: usize,
    /// Master seed of the instance stream.
    pub seed: u64,
}

impl Default for EfficiencyConfig {
    fn default() -> Self {
        EfficiencyConfig { threshold: 0.90, cap: 250_000, eval_batch: 100, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyReport {
    pub mix: String,
    /// Instances consumed when the moving average first reached the
    /// threshold.
    pub instances_to_threshold: Option<u64>,
    pub cap_exceeded: bool,
    pub instances_seen: u64,
    /// Moving average after each batch.
    pub trace: Vec<f64>,
    /// Raw batch accuracies.
    pub accuracies: Vec<f64>,
    pub threshold: f64,
    pub cap: u64,
    pub eval_batch: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("eval batch must be positive")]
    EmptyBatch,
}

/// `0.95·ma + 0.05·acc`.
pub fn update_moving_average(ma: f64, acc: f64) -> f64 {
    0.95 * ma + 0.05 * acc
}

/// Prequential loop over instances from `source` (called with consecutive
/// indices): each batch is scored before the learner trains on it.
pub fn learning_efficiency_with<L: Learner + ?Sized>(
    learner: &mut L,
    source: &mut dyn FnMut(u64) -> Result<Instance, GenError>,
    mix_name: &str,
    config: &EfficiencyConfig,
) -> Result<EfficiencyReport, BenchError> {
    if config.eval_batch == 0 {
        return Err(BenchError::EmptyBatch);
    }
    let mut report = EfficiencyReport {
        mix: String::from(mix_name),
        instances_to_threshold: None,
        cap_exceeded: false,
        instances_seen: 0,
        trace: Vec::new(),
        accuracies: Vec::new(),
        threshold: config.threshold,
        cap: config.cap,
        eval_batch: config.eval_batch,
    };
    let mut ma = 0.0;
    while report.instances_seen < config.cap {
        let n = (config.eval_batch as u64).min(config.cap - report.instances_seen);
        let batch: Vec<Instance> =
            (report.instances_seen..report.instances_seen + n).map(&mut *source).collect::<Result<_, _>>()?;
        let mut hits = 0;
        for inst in &batch {
            let pred = learner.predict(inst)?;
            if instance_success(inst, &pred, SuccessMode::SingleSentence) {
                hits += 1;
            }
        }
        let acc = hits as f64 / n as f64;
        ma = update_moving_average(ma, acc);
        report.accuracies.push(acc);
        report.trace.push(ma);
        learner.learn(&batch)?;
        report.instances_seen += n;
        if ma >= config.threshold {
            report.instances_to_threshold = Some(report.instances_seen);
            return Ok(report);
        }
    }
    report.cap_exceeded = true;
    Ok(report)
}

/// [`learning_efficiency_with`] over a generated stream of `mix`.
pub fn learning_efficiency<L: Learner + ?Sized>(
    learner: &mut L,
    mix: &Mix,
    mix_name: &str,
    generator: &GeneratorConfig,
    templates: &TemplateSet,
    config: &EfficiencyConfig,
) -> Result<EfficiencyReport, BenchError> {
    let mut source = |i: u64| generate_indexed(mix, generator, templates, config.seed, i);
    learning_efficiency_with(learner, &mut source, mix_name, config)
}

/// A single navigator trained online with Adam.
#[derive(Clone, Debug)]
pub struct NavLearner {
    pub model: Model,
    pub vocab: Vocabulary,
    pub adam: Adam,
    pub clip: f64,
    pub beam_width: usize,
    /// Largest post-clip gradient norm seen.
    pub max_clipped_norm: f64,
}

impl NavLearner {
    pub fn new(model: Model, vocab: Vocabulary) -> Self {
        let beam_width = model.config.beam_width;
        NavLearner { model, vocab, adam: Adam::default(), clip: 5.0, beam_width, max_clipped_norm: 0.0 }
    }
}

impl Learner for NavLearner {
    fn predict(&mut self, inst: &Instance) -> Result<Vec<Action>, ModelError> {
        let tokens = self.vocab.encode(&inst.instruction);
        let r = beam_search(
            core::slice::from_ref(&self.model),
            &inst.world,
            inst.start,
            &[tokens],
            self.beam_width,
            self.model.config.max_actions,
        )?;
        Ok(r.actions())
    }

    fn learn(&mut self, batch: &[Instance]) -> Result<(), ModelError> {
        for inst in batch {
            let ex = Example::from_instance(inst, &self.vocab);
            let s = self.model.train_step(&ex, &self.adam, self.clip)?;
            self.max_clipped_norm = self.max_clipped_norm.max(s.clipped_norm);
        }
        Ok(())
    }
}

/// `(√5 − 1) / 2`.
pub fn golden_ratio() -> f64 {
    (math::sqrt(5.0) - 1.0) / 2.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenResult {
    /// Midpoint of the final bracket, or the best probe when the budget ran out.
    pub x: f64,
    pub best_x: f64,
    pub best_f: f64,
    pub evals: usize,
    pub converged: bool,
    /// Bracket width after each iteration.
    pub widths: Vec<f64>,
}

/// Golden-section minimization of `f` over `[lo, hi]`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64, max_evals: usize) -> GoldenResult {
    assert!(lo < hi, "empty interval");
    let r = golden_ratio();
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    let (mut best_x, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut widths = Vec::new();
    while b - a > tol {
        if evals >= max_evals {
            return GoldenResult { x: best_x, best_x, best_f, evals, converged: false, widths };
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
            if fc < best_f {
                (best_x, best_f) = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
            if fd < best_f {
                (best_x, best_f) = (d, fd);
            }
        }
        evals += 1;
        widths.push(b - a);
    }
    GoldenResult { x: (a + b) / 2.0, best_x, best_f, evals, converged: true, widths }
}

/// Golden-section search over `ln x` for scale parameters such as sizes and
/// learning rates; `lo` must be positive.
pub fn golden_section_log(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64, max_evals: usize) -> GoldenResult {
    assert!(lo > 0.0, "log-scale search needs a positive lower bound");
    let mut r = golden_section(|u| f(math::exp(u)), math::ln(lo), math::ln(hi), tol, max_evals);
    r.x = math::exp(r.x);
    r.best_x = math::exp(r.best_x);
    r
}
