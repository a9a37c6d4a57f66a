//! The `sailx` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use sailx_core::datastore::{build_vocab, split_dataset, DatasetSplit, Vocabulary};
use sailx_core::evalbench::{golden_section, golden_section_log, learning_efficiency, EfficiencyConfig, NavLearner, SuccessMode};
use sailx_core::langgen::{GenError, Instance, TemplateSet};
use sailx_core::navmodel::{Model, ModelError, Variant};
use sailx_core::rng::{derive_seed, seeded};
use sailx_core::worldsim::{Direction, Pose, WorldMap};
use serde_json::json;

use crate::checkpoint;
use crate::config::Settings;
use crate::datagen::{generate_to_writer, resolve_mix, DatagenError, FIXED_COUNT};
use crate::experiment::{
    evaluate, run_fixed_experiment, success_rate, train_model, write_efficiency_report, write_score_table,
    write_training_log, ExperimentError, FixedExperimentConfig,
};
use crate::formats::{self, read_instances, write_instances, FormatError, SplitJson};
use crate::manifest::RunManifest;
use crate::render;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "sailx", version, about = "Maze navigation instruction generator, trainer and benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate instances as JSONL.
    Gen(GenArgs),
    /// Stratified train/dev/test split of a JSONL file.
    Split(SplitArgs),
    /// Train one model.
    Train(TrainArgs),
    /// Evaluate one checkpoint or an ensemble of several.
    Eval(EvalArgs),
    /// Learning-efficiency benchmark on a generated stream.
    Bench(BenchArgs),
    /// Golden-section search over one hyperparameter.
    Hpo(HpoArgs),
    /// Train ensembles of every variant on a fixed dataset and tabulate.
    Experiment(ExperimentArgs),
    /// Draw a map as text or SVG.
    Render(RenderArgs),
}

#[derive(clap::Args, Debug)]
pub struct GenArgs {
    /// Number of instances; defaults to 105000 with `--mix fixed105k`.
    #[arg(long)]
    pub count: Option<u64>,
    /// Preset (sail, uniform, norestriction, fixed105k, a category) or a JSON weights file.
    #[arg(long, default_value = "sail")]
    pub mix: String,
    #[arg(long, env = "SAILX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output JSONL; `-` writes to stdout.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON settings file (generator keys are used).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory receiving split.json, train.jsonl, dev.jsonl and test.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.70, 0.15, 0.15])]
    pub fractions: Vec<f64>,
    #[arg(long, env = "SAILX_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Full,
    Lo,
    Bof,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::Lo => Variant::LanguageOnly,
            VariantArg::Bof => Variant::BagOfFeatures,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Single,
    Paragraph,
}

impl From<ModeArg> for SuccessMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => SuccessMode::SingleSentence,
            ModeArg::Paragraph => SuccessMode::Paragraph,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Dev set for early stopping.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    pub variant: VariantArg,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "SAILX_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_checkpoint: PathBuf,
    /// Training log CSV; defaults to `<checkpoint>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// One or more checkpoints; several are ensembled.
    #[arg(long, num_args = 1.., required = true)]
    pub checkpoint: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: ModeArg,
    /// Beam width; defaults to the first checkpoint's setting.
    #[arg(long)]
    pub beam: Option<usize>,
    /// Write per-instance results as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "sail")]
    pub mix: String,
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    #[arg(long, default_value_t = 250_000)]
    pub cap: u64,
    #[arg(long, default_value_t = 100)]
    pub eval_batch: usize,
    #[arg(long, value_enum, default_value = "full")]
    pub variant: VariantArg,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "SAILX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// EfficiencyReport JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HpoParam {
    Lr,
    Clip,
    EmbedDim,
    EncHidden,
    AttnHidden,
    Channels,
}

impl HpoParam {
    fn is_integer(self) -> bool {
        !matches!(self, HpoParam::Lr | HpoParam::Clip)
    }

    fn log_scale(self) -> bool {
        self != HpoParam::Clip
    }

    fn apply(self, s: &mut Settings, x: f64) {
        let n = Some(x.round().max(1.0) as usize);
        match self {
            HpoParam::Lr => s.lr = Some(x),
            HpoParam::Clip => s.clip = Some(x),
            HpoParam::EmbedDim => s.embed_dim = n,
            HpoParam::EncHidden => s.enc_hidden = n,
            HpoParam::AttnHidden => s.attn_hidden = n,
            HpoParam::Channels => s.channels = n,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct HpoArgs {
    #[arg(long, value_enum)]
    pub param: HpoParam,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    pub variant: VariantArg,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "SAILX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Objective evaluations allowed.
    #[arg(long, default_value_t = 10)]
    pub evals: usize,
    /// Interval width at which to stop (in log units for log-scale parameters).
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Split file from `sailx split`; computed from `--seed` when absent.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [VariantArg::Lo, VariantArg::Bof, VariantArg::Full])]
    pub variants: Vec<VariantArg>,
    /// Models per variant; defaults to the settings' ensemble size.
    #[arg(long)]
    pub ensembles: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "SAILX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Score table CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Ascii,
    Svg,
}

#[derive(clap::Args, Debug)]
pub struct RenderArgs {
    /// Map JSON, or a JSONL instance file (see `--index`).
    #[arg(long)]
    pub map: PathBuf,
    /// Line of the instance to draw when `--map` is JSONL.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, value_enum, default_value = "ascii")]
    pub format: FormatArg,
    /// Actions to overlay, comma or space separated; `gold` uses the instance's.
    #[arg(long)]
    pub path: Option<String>,
    /// Agent start as `x,y,dir`; an instance supplies its own.
    #[arg(long)]
    pub start: Option<String>,
    /// Append the symbol key to text output.
    #[arg(long)]
    pub legend: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed command with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl ToString) -> Self {
        CliError { code: EXIT_USAGE, message: message.to_string() }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::usage(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = if matches!(e, ModelError::NonFinite) { EXIT_NUMERIC } else { EXIT_USAGE };
        CliError { code, message: e.to_string() }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::usage(e)
    }
}

impl From<DatagenError> for CliError {
    fn from(e: DatagenError) -> Self {
        CliError::usage(e)
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Model(m) => m.into(),
            other => CliError::usage(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::usage(e)
    }
}

/// Parse `args` (program name first) and run; returns the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    let recorded: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, recorded) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_settings(path: &Option<PathBuf>) -> Result<Settings, CliError> {
    Ok(match path {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| FormatError::io(path, e).into())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    std::fs::write(path, text + "\n").map_err(|e| FormatError::io(path, e))?;
    Ok(())
}

pub fn execute(command: Command, args: Vec<String>) -> Result<(), CliError> {
    match command {
        Command::Gen(a) => cmd_gen(a, args),
        Command::Split(a) => cmd_split(a, args),
        Command::Train(a) => cmd_train(a, args),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a, args),
        Command::Hpo(a) => cmd_hpo(a, args),
        Command::Experiment(a) => cmd_experiment(a, args),
        Command::Render(a) => cmd_render(a),
    }
}

fn cmd_gen(a: GenArgs, args: Vec<String>) -> Result<(), CliError> {
    let mix = resolve_mix(&a.mix)?;
    let count = match (a.count, a.mix.as_str()) {
        (Some(n), _) => n,
        (None, "fixed105k") => FIXED_COUNT,
        (None, _) => return Err(CliError::usage("--count is required unless --mix fixed105k")),
    };
    let settings = load_settings(&a.config)?;
    let gen_config = settings.generator_config();
    let templates = TemplateSet::bundled();
    if a.out.as_os_str() == "-" {
        let stdout = io::stdout();
        generate_to_writer(BufWriter::new(stdout.lock()), &mix, &gen_config, &templates, count, a.seed)?;
        return Ok(());
    }
    let mut manifest = RunManifest::start("gen", args, a.seed);
    generate_to_writer(create(&a.out)?, &mix, &gen_config, &templates, count, a.seed)?;
    manifest.config = json!({"count": count, "mix": a.mix, "settings": settings});
    manifest.artifacts.push(a.out.clone());
    manifest.finish_and_write(&RunManifest::path_for(&a.out))?;
    eprintln!("wrote {count} instances to {}", a.out.display());
    Ok(())
}

fn cmd_split(a: SplitArgs, args: Vec<String>) -> Result<(), CliError> {
    let [ft, fd, fe]: [f64; 3] =
        a.fractions.clone().try_into().map_err(|_| CliError::usage("--fractions takes three values"))?;
    let instances = read_instances(&a.data)?;
    let split = split_dataset(instances.iter().map(|i| (i.id, i.category)), (ft, fd, fe), a.seed)
        .map_err(CliError::usage)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| FormatError::io(&a.out_dir, e))?;
    let mut manifest = RunManifest::start("split", args, a.seed);
    let split_path = a.out_dir.join("split.json");
    formats::write_split(&split_path, &SplitJson::new(&split, [ft, fd, fe], a.seed))?;
    manifest.artifacts.push(split_path.clone());
    for (name, ids) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        write_instances(&path, select(&instances, ids)?)?;
        manifest.artifacts.push(path);
    }
    manifest.config = json!({"fractions": [ft, fd, fe]});
    manifest.finish_and_write(&RunManifest::path_for(&split_path))?;
    eprintln!("train {} / dev {} / test {}", split.train.len(), split.dev.len(), split.test.len());
    Ok(())
}

fn select<'a>(instances: &'a [Instance], ids: &[u64]) -> Result<Vec<&'a Instance>, CliError> {
    let by_id: std::collections::HashMap<u64, &Instance> = instances.iter().map(|i| (i.id, i)).collect();
    ids.iter().map(|id| by_id.get(id).copied().ok_or_else(|| CliError::usage(format!("unknown instance id {id}")))).collect()
}

fn cmd_train(a: TrainArgs, args: Vec<String>) -> Result<(), CliError> {
    let settings = load_settings(&a.config)?;
    let train_set = read_instances(&a.data)?;
    if train_set.is_empty() {
        return Err(CliError::usage(format!("{} holds no instances", a.data.display())));
    }
    let dev = match &a.dev {
        Some(p) => read_instances(p)?,
        None => Vec::new(),
    };
    let vocab = build_vocab(&train_set);
    let model_config = settings.model_config(vocab.len(), a.variant.into())?;
    let train_config = settings.train_config(a.seed);
    let mut manifest = RunManifest::start("train", args, a.seed);
    let (model, history) = train_model(
        model_config.clone(),
        &vocab,
        &train_set,
        &dev,
        &train_config,
        a.seed,
        &mut |e| match e.dev_success {
            Some(d) => eprintln!("epoch {:3}  loss {:.4}  acc {:.4}  dev {:.4}", e.epoch, e.train_loss, e.train_accuracy, d),
            None => eprintln!("epoch {:3}  loss {:.4}  acc {:.4}", e.epoch, e.train_loss, e.train_accuracy),
        },
    )?;
    checkpoint::save(&a.out_checkpoint, &model, &vocab)?;
    let log = a.log.clone().unwrap_or_else(|| a.out_checkpoint.with_extension("log.csv"));
    write_training_log(&log, &history)?;
    manifest.config = json!({
        "variant": model_config.variant.name(),
        "settings": settings,
        "data": a.data,
        "dev": a.dev,
        "bestEpoch": history.best_epoch,
        "bestDev": history.best_dev,
    });
    manifest.artifacts.extend([a.out_checkpoint.clone(), checkpoint::sidecar_path(&a.out_checkpoint), log]);
    manifest.finish_and_write(&RunManifest::path_for(&a.out_checkpoint))?;
    Ok(())
}

fn load_ensemble(paths: &[PathBuf]) -> Result<(Vec<Model>, Vocabulary), CliError> {
    let mut models = Vec::new();
    let mut vocab: Option<Vocabulary> = None;
    for p in paths {
        let (m, v) = checkpoint::load(p)?;
        match &vocab {
            Some(v0) if *v0 != v => {
                return Err(CliError::usage(format!("{} uses a different vocabulary", p.display())));
            }
            Some(_) => {}
            None => vocab = Some(v),
        }
        models.push(m);
    }
    Ok((models, vocab.expect("at least one checkpoint")))
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let (models, vocab) = load_ensemble(&a.checkpoint)?;
    let instances = read_instances(&a.data)?;
    let beam = a.beam.unwrap_or(models[0].config.beam_width);
    let mode: SuccessMode = a.mode.into();
    let flags = evaluate(&models, &vocab, &instances, mode, beam)?;
    let rate = success_rate(&flags);
    let hits = flags.iter().filter(|&&b| b).count();
    println!("success {rate:.4} ({hits}/{})", flags.len());
    let mut per_cat: std::collections::BTreeMap<&str, (usize, usize)> = Default::default();
    for (inst, &ok) in instances.iter().zip(&flags) {
        let e = per_cat.entry(inst.category.name()).or_default();
        e.0 += ok as usize;
        e.1 += 1;
    }
    for (c, (h, n)) in &per_cat {
        println!("  {c:<15} {:.4} ({h}/{n})", *h as f64 / *n as f64);
    }
    if let Some(out) = &a.out {
        let results: Vec<_> = instances.iter().zip(&flags).map(|(i, &ok)| json!({"id": i.id, "success": ok})).collect();
        write_json(out, &json!({"success": rate, "mode": format!("{:?}", a.mode).to_lowercase(), "beam": beam, "results": results}))?;
    }
    Ok(())
}

fn bench_vocab(templates: &TemplateSet) -> Result<Vocabulary, CliError> {
    Vocabulary::from_tokens(templates.vocabulary()).map_err(CliError::usage)
}

fn cmd_bench(a: BenchArgs, args: Vec<String>) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(CliError::usage("--threshold must lie in [0, 1]"));
    }
    let mix = resolve_mix(&a.mix)?;
    let settings = load_settings(&a.config)?;
    let templates = TemplateSet::bundled();
    let vocab = bench_vocab(&templates)?;
    let model_config = settings.model_config(vocab.len(), a.variant.into())?;
    let mut manifest = RunManifest::start("bench", args, a.seed);
    let model = Model::new(model_config, &mut seeded(derive_seed(a.seed, u64::MAX)))?;
    let mut learner = NavLearner::new(model, vocab);
    let tc = settings.train_config(a.seed);
    learner.adam = tc.adam;
    learner.clip = tc.clip;
    let config = EfficiencyConfig { threshold: a.threshold, cap: a.cap, eval_batch: a.eval_batch, seed: a.seed };
    let report = learning_efficiency(&mut learner, &mix, &a.mix, &settings.generator_config(), &templates, &config)
        .map_err(|e| match e {
            sailx_core::evalbench::BenchError::Model(m) => CliError::from(m),
            other => CliError::usage(other),
        })?;
    match report.instances_to_threshold {
        Some(n) => println!("reached {:.2} after {n} instances", a.threshold),
        None => println!("cap exceeded: moving average below {:.2} after {} instances", a.threshold, report.instances_seen),
    }
    if let Some(out) = &a.out {
        write_efficiency_report(out, &report)?;
        manifest.config = json!({"mix": a.mix, "threshold": a.threshold, "cap": a.cap, "evalBatch": a.eval_batch, "settings": settings});
        manifest.artifacts.push(out.clone());
        manifest.finish_and_write(&RunManifest::path_for(out))?;
    }
    Ok(())
}

fn cmd_hpo(a: HpoArgs, args: Vec<String>) -> Result<(), CliError> {
    if !(a.lo < a.hi) || (a.param.log_scale() && a.lo <= 0.0) {
        return Err(CliError::usage("need 0 < lo < hi for log-scale parameters and lo < hi otherwise"));
    }
    let base = load_settings(&a.config)?;
    let train_set = read_instances(&a.data)?;
    let dev = read_instances(&a.dev)?;
    let vocab = build_vocab(&train_set);
    let variant: Variant = a.variant.into();
    let mut failure: Option<CliError> = None;
    let mut probes = Vec::new();
    let objective = |x: f64| -> f64 {
        if failure.is_some() {
            return f64::INFINITY;
        }
        let mut s = base.clone();
        a.param.apply(&mut s, x);
        let run = || -> Result<f64, CliError> {
            let cfg = s.model_config(vocab.len(), variant)?;
            let beam = cfg.beam_width;
            let (m, _) = train_model(cfg, &vocab, &train_set, &dev, &s.train_config(a.seed), a.seed, &mut |_| {})?;
            Ok(success_rate(&evaluate(std::slice::from_ref(&m), &vocab, &dev, SuccessMode::SingleSentence, beam)?))
        };
        match run() {
            Ok(score) => {
                eprintln!("{:?} = {x:.6}: dev {score:.4}", a.param);
                probes.push(json!({"x": x, "dev": score}));
                -score
            }
            Err(e) => {
                failure = Some(e);
                f64::INFINITY
            }
        }
    };
    let mut manifest = RunManifest::start("hpo", args, a.seed);
    let result = if a.param.log_scale() {
        golden_section_log(objective, a.lo, a.hi, a.tol, a.evals)
    } else {
        golden_section(objective, a.lo, a.hi, a.tol, a.evals)
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let x = if a.param.is_integer() { result.x.round() } else { result.x };
    println!("best {:?} = {x} (dev {:.4}, {} evaluations, converged {})", a.param, -result.best_f, result.evals, result.converged);
    if let Some(out) = &a.out {
        write_json(
            out,
            &json!({
                "param": format!("{:?}", a.param),
                "x": x,
                "bestSeen": result.best_x,
                "bestDev": -result.best_f,
                "evaluations": result.evals,
                "converged": result.converged,
                "probes": probes,
            }),
        )?;
        manifest.config = json!({"lo": a.lo, "hi": a.hi, "tol": a.tol, "evals": a.evals, "settings": base});
        manifest.artifacts.push(out.clone());
        manifest.finish_and_write(&RunManifest::path_for(out))?;
    }
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs, args: Vec<String>) -> Result<(), CliError> {
    let settings = load_settings(&a.config)?;
    let instances = read_instances(&a.data)?;
    let split = match &a.split {
        Some(p) => {
            let s = formats::read_split(p)?;
            DatasetSplit { train: s.train, dev: s.dev, test: s.test, per_category: Default::default() }
        }
        None => split_dataset(instances.iter().map(|i| (i.id, i.category)), (0.70, 0.15, 0.15), a.seed)
            .map_err(CliError::usage)?,
    };
    let ensembles = a.ensembles.unwrap_or(settings.model_config(1, Variant::Full)?.ensemble_size);
    let config = FixedExperimentConfig {
        variants: a.variants.iter().map(|&v| v.into()).collect(),
        ensembles,
        seed: a.seed,
        settings: settings.clone(),
    };
    let mut manifest = RunManifest::start("experiment", args, a.seed);
    let table = run_fixed_experiment(&instances, &split, &config)?;
    write_score_table(create(&a.out)?, &table).map_err(CliError::usage)?;
    write_score_table(io::stdout().lock(), &table).map_err(CliError::usage)?;
    manifest.config = json!({"ensembles": ensembles, "settings": settings, "table": table});
    manifest.artifacts.push(a.out.clone());
    manifest.finish_and_write(&RunManifest::path_for(&a.out))?;
    Ok(())
}

fn parse_pose(s: &str) -> Result<Pose, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::usage(format!("--start {s:?} is not x,y,dir"));
    let [x, y, d] = parts[..] else { return Err(bad()) };
    let dir = Direction::parse(&d.to_ascii_lowercase()).ok_or_else(bad)?;
    Ok(Pose::new(x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?, dir))
}

fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    let is_jsonl = a.map.extension().is_some_and(|e| e == "jsonl");
    let (world, start, gold): (WorldMap, Option<Pose>, Vec<_>) = if is_jsonl {
        let inst = formats::open_instances(&a.map)?
            .nth(a.index)
            .ok_or_else(|| CliError::usage(format!("{} has no instance {}", a.map.display(), a.index)))??;
        (inst.world, Some(inst.start), inst.actions)
    } else {
        (formats::read_map(&a.map)?, None, Vec::new())
    };
    let start = match &a.start {
        Some(s) => Some(parse_pose(s)?),
        None => start,
    };
    if let Some(p) = start {
        if !world.contains(p.node()) {
            return Err(CliError::usage("start pose lies outside the map"));
        }
    }
    let actions = match a.path.as_deref() {
        None => Vec::new(),
        Some("gold") => gold,
        Some(p) => formats::parse_actions(p.split([',', ' ']).filter(|t| !t.is_empty()))?,
    };
    if !actions.is_empty() && start.is_none() {
        return Err(CliError::usage("--path needs a start pose"));
    }
    let path = start.map(|s| render::trace_path(&world, s, &actions)).unwrap_or_default();
    let agent = path.last().copied().or(start);
    let text = match a.format {
        FormatArg::Ascii => {
            let mut t = render::render_ascii(&world, agent, &path);
            if a.legend {
                t.push_str(&render::legend(&world));
            }
            t
        }
        FormatArg::Svg => render::render_svg(&world, agent, &path),
    };
    match &a.out {
        Some(p) => std::fs::write(p, text).map_err(|e| FormatError::io(p, e))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
