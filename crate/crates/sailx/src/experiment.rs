//! Training, evaluation and the fixed-dataset experiment, with CSV and JSON
//! reports.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use sailx_core::datastore::{build_vocab, DatasetSplit, Vocabulary};
use sailx_core::evalbench::{instance_success, EfficiencyReport, SuccessMode};
use sailx_core::langgen::Instance;
use sailx_core::navmodel::{beam_search, train, EpochLog, Example, Model, ModelConfig, ModelError, TrainConfig, TrainHistory, Variant};
use sailx_core::rng::{derive_seed, seeded};
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::formats::FormatError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Invalid(String),
}

/// Instruction tokens split into sentences at `.` tokens; the periods are
/// dropped and empty sentences skipped.
pub fn split_sentences(tokens: &[String]) -> Vec<Vec<String>> {
    let out: Vec<Vec<String>> =
        tokens.split(|t| t == ".").filter(|s| !s.is_empty()).map(|s| s.to_vec()).collect();
    if out.is_empty() {
        vec![tokens.to_vec()]
    } else {
        out
    }
}

/// Predicted actions of an ensemble for one instance. In paragraph mode the
/// instruction is decoded sentence by sentence.
pub fn predict(
    models: &[Model],
    vocab: &Vocabulary,
    inst: &Instance,
    mode: SuccessMode,
    beam: usize,
) -> Result<Vec<sailx_core::worldsim::Action>, ModelError> {
    let sentences: Vec<Vec<usize>> = match mode {
        SuccessMode::SingleSentence => vec![vocab.encode(&inst.instruction)],
        SuccessMode::Paragraph => split_sentences(&inst.instruction).iter().map(|s| vocab.encode(s)).collect(),
    };
    let max = models.first().map(|m| m.config.max_actions).unwrap_or(1);
    Ok(beam_search(models, &inst.world, inst.start, &sentences, beam, max)?.actions())
}

/// Per-instance success flags.
pub fn evaluate(
    models: &[Model],
    vocab: &Vocabulary,
    instances: &[Instance],
    mode: SuccessMode,
    beam: usize,
) -> Result<Vec<bool>, ModelError> {
    instances.iter().map(|inst| Ok(instance_success(inst, &predict(models, vocab, inst, mode, beam)?, mode))).collect()
}

pub fn success_rate(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        0.0
    } else {
        flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64
    }
}

/// Train one fresh model on `train_set`, early-stopping on `dev`.
pub fn train_model(
    config: ModelConfig,
    vocab: &Vocabulary,
    train_set: &[Instance],
    dev: &[Instance],
    train_config: &TrainConfig,
    init_seed: u64,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<(Model, TrainHistory), ModelError> {
    let mut model = Model::new(config, &mut seeded(init_seed))?;
    let tr: Vec<Example<'_>> = train_set.iter().map(|i| Example::from_instance(i, vocab)).collect();
    let dv: Vec<Example<'_>> = dev.iter().map(|i| Example::from_instance(i, vocab)).collect();
    let history = train(&mut model, &tr, &dv, train_config, on_epoch)?;
    Ok((model, history))
}

/// Training log as CSV with columns `epoch,trainLoss,trainAccuracy,devSuccess,maxClippedNorm`.
pub fn write_training_log(path: &Path, history: &TrainHistory) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| FormatError::Invalid(format!("{}: {e}", path.display()));
    w.write_record(["epoch", "trainLoss", "trainAccuracy", "devSuccess", "maxClippedNorm"]).map_err(io)?;
    for e in &history.epochs {
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            e.train_accuracy.to_string(),
            e.dev_success.map(|d| d.to_string()).unwrap_or_default(),
            e.max_clipped_norm.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedExperimentConfig {
    pub variants: Vec<Variant>,
    /// Models trained per variant.
    pub ensembles: usize,
    pub seed: u64,
    pub settings: Settings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantScores {
    pub variant: String,
    pub member_dev: Vec<f64>,
    pub member_test: Vec<f64>,
    pub ensemble_dev: f64,
    pub ensemble_test: f64,
}

impl VariantScores {
    pub fn mean_dev(&self) -> f64 {
        mean(&self.member_dev)
    }

    pub fn mean_test(&self) -> f64 {
        mean(&self.member_test)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn pick<'a>(instances: &'a [Instance], ids: &[u64]) -> Result<Vec<Instance>, ExperimentError> {
    let by_id: std::collections::HashMap<u64, &'a Instance> = instances.iter().map(|i| (i.id, i)).collect();
    ids.iter()
        .map(|id| by_id.get(id).map(|&i| i.clone()).ok_or_else(|| ExperimentError::Invalid(format!("split names unknown id {id}"))))
        .collect()
}

/// Train `ensembles` models per variant on the split's train part (members
/// run in parallel), then score each member and the averaged ensemble on dev
/// and test with single-sentence success.
pub fn run_fixed_experiment(
    instances: &[Instance],
    split: &DatasetSplit,
    config: &FixedExperimentConfig,
) -> Result<Vec<VariantScores>, ExperimentError> {
    if config.ensembles == 0 {
        return Err(ExperimentError::Invalid("need at least one model per variant".into()));
    }
    let train_set = pick(instances, &split.train)?;
    let dev = pick(instances, &split.dev)?;
    let test = pick(instances, &split.test)?;
    let vocab = build_vocab(&train_set);
    let mode = SuccessMode::SingleSentence;
    let mut table = Vec::new();
    for (vi, &variant) in config.variants.iter().enumerate() {
        let model_config = config.settings.model_config(vocab.len(), variant)?;
        let beam = model_config.beam_width;
        let members: Vec<Model> = (0..config.ensembles)
            .into_par_iter()
            .map(|k| {
                let seed = derive_seed(config.seed, (vi * 1_000 + k) as u64);
                let tc = config.settings.train_config(seed);
                train_model(model_config.clone(), &vocab, &train_set, &dev, &tc, seed, &mut |_| {}).map(|(m, _)| m)
            })
            .collect::<Result<_, _>>()?;
        let score = |models: &[Model], set: &[Instance]| -> Result<f64, ModelError> {
            Ok(success_rate(&evaluate(models, &vocab, set, mode, beam)?))
        };
        let member_dev = members.par_iter().map(|m| score(std::slice::from_ref(m), &dev)).collect::<Result<_, _>>()?;
        let member_test = members.par_iter().map(|m| score(std::slice::from_ref(m), &test)).collect::<Result<_, _>>()?;
        table.push(VariantScores {
            variant: variant.name().into(),
            member_dev,
            member_test,
            ensemble_dev: score(&members, &dev)?,
            ensemble_test: score(&members, &test)?,
        });
    }
    Ok(table)
}

/// Score table with one row per variant:
/// `variant,models,devMean,devEnsemble,testMean,testEnsemble`.
pub fn write_score_table<W: Write>(out: W, table: &[VariantScores]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variant", "models", "devMean", "devEnsemble", "testMean", "testEnsemble"])?;
    for row in table {
        w.write_record([
            row.variant.clone(),
            row.member_dev.len().to_string(),
            format!("{:.4}", row.mean_dev()),
            format!("{:.4}", row.ensemble_dev),
            format!("{:.4}", row.mean_test()),
            format!("{:.4}", row.ensemble_test),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct EfficiencyReportJson {
    pub mix: String,
    pub instances_to_threshold: Option<u64>,
    pub cap_exceeded: bool,
    pub instances_seen: u64,
    pub threshold: f64,
    pub cap: u64,
    pub eval_batch: usize,
    pub moving_average: Vec<f64>,
    pub batch_accuracy: Vec<f64>,
}

impl From<&EfficiencyReport> for EfficiencyReportJson {
    fn from(r: &EfficiencyReport) -> Self {
        EfficiencyReportJson {
            mix: r.mix.clone(),
            instances_to_threshold: r.instances_to_threshold,
            cap_exceeded: r.cap_exceeded,
            instances_seen: r.instances_seen,
            threshold: r.threshold,
            cap: r.cap,
            eval_batch: r.eval_batch,
            moving_average: r.trace.clone(),
            batch_accuracy: r.accuracies.clone(),
        }
    }
}

pub fn write_efficiency_report(path: &Path, report: &EfficiencyReport) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(&EfficiencyReportJson::from(report)).expect("report JSON is always serializable");
    std::fs::write(path, text + "\n").map_err(|e| FormatError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sailx_core::datastore::split_dataset;
    use sailx_core::langgen::{generate_dataset, GeneratorConfig, Mix, TaskCategory, TemplateSet};

    fn data(n: u64) -> Vec<Instance> {
        let cfg = GeneratorConfig::default();
        let set = TemplateSet::bundled();
        generate_dataset(&Mix::single(TaskCategory::LanguageOnly), &cfg, &set, n, 21).unwrap().map(|r| r.unwrap()).collect()
    }

    fn tiny_settings() -> Settings {
        Settings {
            embed_dim: Some(8),
            enc_hidden: Some(8),
            attn_hidden: Some(8),
            filter_width: Some(3),
            channels: Some(4),
            extra_convs: Some(vec![crate::config::ConvJson { kh: 3, kw: 3, channels: 2 }]),
            beam_width: Some(2),
            max_epochs: Some(2),
            ..Settings::default()
        }
    }

    #[test]
    fn sentences_split_on_periods() {
        let t: Vec<String> = "go left . move twice .".split(' ').map(String::from).collect();
        assert_eq!(split_sentences(&t), [vec!["go", "left"], vec!["move", "twice"]]);
        let t: Vec<String> = vec!["go".into()];
        assert_eq!(split_sentences(&t), [vec!["go"]]);
    }

    #[test]
    fn fixed_experiment_runs_and_tabulates() {
        let insts = data(40);
        let split = split_dataset(insts.iter().map(|i| (i.id, i.category)), (0.7, 0.15, 0.15), 1).unwrap();
        let cfg = FixedExperimentConfig {
            variants: vec![Variant::LanguageOnly, Variant::Full],
            ensembles: 2,
            seed: 5,
            settings: tiny_settings(),
        };
        let table = run_fixed_experiment(&insts, &split, &cfg).unwrap();
        assert_eq!(table.len(), 2);
        for row in &table {
            assert_eq!(row.member_dev.len(), 2);
            assert!((0.0..=1.0).contains(&row.ensemble_test));
        }
        let mut buf = Vec::new();
        write_score_table(&mut buf, &table).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("variant,models,devMean,devEnsemble,testMean,testEnsemble\nlo,2,"));
        // Same seed, same table.
        assert_eq!(run_fixed_experiment(&insts, &split, &cfg).unwrap(), table);
    }

    #[test]
    fn identical_members_score_like_one() {
        let insts = data(12);
        let vocab = build_vocab(&insts);
        let cfg = tiny_settings().model_config(vocab.len(), Variant::Full).unwrap();
        let (m, _) = train_model(cfg, &vocab, &insts, &[], &tiny_settings().train_config(3), 3, &mut |_| {}).unwrap();
        let one = evaluate(std::slice::from_ref(&m), &vocab, &insts, SuccessMode::SingleSentence, 3).unwrap();
        let three = evaluate(&[m.clone(), m.clone(), m], &vocab, &insts, SuccessMode::SingleSentence, 3).unwrap();
        assert_eq!(one, three);
    }
}
