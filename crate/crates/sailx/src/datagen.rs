//! Dataset generation to JSONL, with mix files and parallel shards.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use sailx_core::langgen::{generate_indexed, GenError, GeneratorConfig, Instance, Mix, TaskCategory, TemplateSet};

use crate::formats::{FormatError, InstanceWriter};

/// Instances generated per parallel shard.
pub const SHARD: u64 = 512;

/// Default size of the `fixed105k` preset.
pub const FIXED_COUNT: u64 = 105_000;

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Resolve `--mix`: a preset name (`sail`, `corpus`, `uniform`,
/// `norestriction`, `fixed105k`, or a single category) or a JSON file mapping
/// category names to weights.
pub fn resolve_mix(spec: &str) -> Result<Mix, FormatError> {
    if spec == "fixed105k" {
        return Ok(Mix::corpus());
    }
    if let Some(m) = Mix::preset(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_mix(&text).map_err(|e| FormatError::Invalid(format!("{spec}: {e}")))
}

pub fn parse_mix(text: &str) -> Result<Mix, String> {
    let raw: BTreeMap<String, f64> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut weights = Vec::new();
    for (name, w) in raw {
        let c = TaskCategory::parse(&name).ok_or_else(|| format!("unknown category {name:?}"))?;
        weights.push((c, w));
    }
    Mix::from_weights(&weights).map_err(|e| e.to_string())
}

/// Generate instances `0..count` of the stream rooted at `master`. Shards run
/// in parallel; output order and content depend only on the arguments.
pub fn generate_parallel(
    mix: &Mix,
    config: &GeneratorConfig,
    templates: &TemplateSet,
    count: u64,
    master: u64,
    sink: &mut dyn FnMut(Instance) -> Result<(), DatagenError>,
) -> Result<u64, DatagenError> {
    let mut start = 0;
    while start < count {
        let end = (start + SHARD * rayon::current_num_threads() as u64).min(count);
        let batch: Vec<Instance> = (start..end)
            .into_par_iter()
            .map(|i| generate_indexed(mix, config, templates, master, i))
            .collect::<Result<_, _>>()?;
        for inst in batch {
            sink(inst)?;
        }
        start = end;
    }
    Ok(count)
}

pub fn generate_to_writer<W: Write>(
    out: W,
    mix: &Mix,
    config: &GeneratorConfig,
    templates: &TemplateSet,
    count: u64,
    master: u64,
) -> Result<W, DatagenError> {
    let mut w = InstanceWriter::new(out);
    generate_parallel(mix, config, templates, count, master, &mut |inst| Ok(w.write(&inst)?))?;
    Ok(w.finish()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sailx_core::langgen::generate_dataset;

    #[test]
    fn parallel_matches_sequential() {
        let cfg = GeneratorConfig::default();
        let set = TemplateSet::bundled();
        let mix = Mix::corpus();
        let seq: Vec<Instance> = generate_dataset(&mix, &cfg, &set, 30, 4).unwrap().map(|r| r.unwrap()).collect();
        let mut par = Vec::new();
        generate_parallel(&mix, &cfg, &set, 30, 4, &mut |i| {
            par.push(i);
            Ok(())
        })
        .unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn mix_files() {
        let m = parse_mix(r#"{"LanguageOnly": 1, "Orient": 3}"#).unwrap();
        let p = m.probabilities().unwrap();
        assert_eq!(p[TaskCategory::Orient.index()], 0.75);
        assert!(parse_mix(r#"{"Dance": 1}"#).is_err());
        assert!(parse_mix(r#"{"Orient": -1}"#).is_err());
        assert!(parse_mix(r#"{"Orient": 0}"#).is_err());
        assert!(parse_mix("[1,2]").is_err());
    }

    #[test]
    fn presets_resolve() {
        for p in ["sail", "uniform", "norestriction", "fixed105k", "MoveUntil"] {
            assert!(resolve_mix(p).is_ok(), "{p}");
        }
        assert!(resolve_mix("/no/such/mix.json").is_err());
    }
}
