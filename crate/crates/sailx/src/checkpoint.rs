//! Model checkpoints: a JSON file of named tensors plus a sidecar holding the
//! model configuration and vocabulary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sailx_core::datastore::Vocabulary;
use sailx_core::navmodel::Model;
use sailx_core::nnet::Parameterized;
use sailx_core::rng::seeded;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfigJson;
use crate::formats::FormatError;

pub const CHECKPOINT_FORMAT: &str = "sailx-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TensorJson {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckpointJson {
    pub format: String,
    pub version: u32,
    pub tensors: Vec<TensorJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SidecarJson {
    pub version: u32,
    pub model: ModelConfigJson,
    /// Tokens from index 1 on; index 0 is the unknown-word token.
    pub vocabulary: Vec<String>,
}

/// `model.json` → `model.config.json`.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("config.json")
}

pub fn checkpoint_json(model: &Model) -> Result<CheckpointJson, FormatError> {
    let mut tensors = Vec::new();
    let mut bad = None;
    model.visit(&mut |name, p| {
        if !p.value.is_finite() {
            bad.get_or_insert_with(|| name.to_string());
        }
        tensors.push(TensorJson { name: name.to_string(), shape: p.shape().to_vec(), data: p.value.data.clone() });
    });
    if let Some(name) = bad {
        return Err(FormatError::Invalid(format!("parameter {name} is not finite")));
    }
    Ok(CheckpointJson { format: CHECKPOINT_FORMAT.into(), version: CHECKPOINT_VERSION, tensors })
}

/// Copy tensors into `model`, requiring exactly its parameter names and
/// shapes.
pub fn load_tensors(model: &mut Model, ckpt: &CheckpointJson) -> Result<(), FormatError> {
    if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
        return Err(FormatError::Invalid(format!("unsupported checkpoint {} v{}", ckpt.format, ckpt.version)));
    }
    let mut by_name: BTreeMap<&str, &TensorJson> = BTreeMap::new();
    for t in &ckpt.tensors {
        if by_name.insert(&t.name, t).is_some() {
            return Err(FormatError::Invalid(format!("duplicate tensor {}", t.name)));
        }
    }
    let mut err = None;
    let mut used = 0;
    model.visit_mut(&mut |name, p| {
        if err.is_some() {
            return;
        }
        match by_name.get(name) {
            None => err = Some(format!("missing tensor {name}")),
            Some(t) if t.shape != p.shape() => {
                err = Some(format!("tensor {name} has shape {:?}, the model expects {:?}", t.shape, p.shape()))
            }
            Some(t) if t.data.len() != p.value.len() => {
                err = Some(format!("tensor {name} holds {} values for shape {:?}", t.data.len(), t.shape))
            }
            Some(t) => {
                p.value.data.copy_from_slice(&t.data);
                used += 1;
            }
        }
    });
    if let Some(e) = err {
        return Err(FormatError::Invalid(e));
    }
    if used != by_name.len() {
        return Err(FormatError::Invalid("checkpoint has tensors the model does not".into()));
    }
    Ok(())
}

/// Write `model` to `path` and its sidecar next to it.
pub fn save(path: &Path, model: &Model, vocab: &Vocabulary) -> Result<(), FormatError> {
    let ckpt = checkpoint_json(model)?;
    let side = SidecarJson {
        version: CHECKPOINT_VERSION,
        model: ModelConfigJson::from(&model.config),
        vocabulary: vocab.tokens()[1..].to_vec(),
    };
    let text = serde_json::to_string(&ckpt).expect("checkpoint JSON is always serializable");
    std::fs::write(path, text + "\n").map_err(|e| FormatError::io(path, e))?;
    let side_path = sidecar_path(path);
    let text = serde_json::to_string_pretty(&side).expect("sidecar JSON is always serializable");
    std::fs::write(&side_path, text + "\n").map_err(|e| FormatError::io(&side_path, e))
}

pub fn load(path: &Path) -> Result<(Model, Vocabulary), FormatError> {
    let side_path = sidecar_path(path);
    let text = std::fs::read_to_string(&side_path).map_err(|e| FormatError::io(&side_path, e))?;
    let side: SidecarJson =
        serde_json::from_str(&text).map_err(|e| FormatError::Invalid(format!("{}: {e}", side_path.display())))?;
    let config = side.model.to_config()?;
    let vocab = Vocabulary::from_tokens(side.vocabulary.iter()).map_err(|e| FormatError::Invalid(e.to_string()))?;
    if vocab.len() != config.vocab_size {
        return Err(FormatError::Invalid(format!(
            "sidecar vocabulary has {} entries, the model expects {}",
            vocab.len(),
            config.vocab_size
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let ckpt: CheckpointJson =
        serde_json::from_str(&text).map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))?;
    let mut model = Model::new(config, &mut seeded(0)).map_err(|e| FormatError::Invalid(e.to_string()))?;
    load_tensors(&mut model, &ckpt)?;
    Ok((model, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sailx_core::navmodel::{ModelConfig, Variant};

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["go", "left", "to", "the", "chair"]).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let v = vocab();
        for variant in Variant::ALL {
            let model = Model::new(ModelConfig::tiny(v.len(), variant), &mut seeded(8)).unwrap();
            let path = dir.path().join(format!("{}.json", variant.name()));
            save(&path, &model, &v).unwrap();
            assert!(sidecar_path(&path).exists());
            let (back, v2) = load(&path).unwrap();
            assert_eq!(v2, v);
            assert_eq!(back.config, model.config);
            let (mut a, mut b) = (Vec::new(), Vec::new());
            model.visit(&mut |_, p| a.extend(p.value.data.iter().map(|x| x.to_bits())));
            back.visit(&mut |_, p| b.extend(p.value.data.iter().map(|x| x.to_bits())));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let v = vocab();
        let model = Model::new(ModelConfig::tiny(v.len(), Variant::Full), &mut seeded(1)).unwrap();
        let ckpt = checkpoint_json(&model).unwrap();
        let mut other = ModelConfig::tiny(v.len(), Variant::Full);
        other.enc_hidden = 6;
        let mut target = Model::new(other, &mut seeded(1)).unwrap();
        let err = load_tensors(&mut target, &ckpt).unwrap_err().to_string();
        assert!(err.contains("shape"), "{err}");

        let mut lo = Model::new(ModelConfig::tiny(v.len(), Variant::LanguageOnly), &mut seeded(1)).unwrap();
        assert!(load_tensors(&mut lo, &ckpt).is_err());

        let mut short = ckpt.clone();
        short.tensors.pop();
        let mut same = Model::new(ModelConfig::tiny(v.len(), Variant::Full), &mut seeded(2)).unwrap();
        assert!(load_tensors(&mut same, &short).unwrap_err().to_string().contains("missing"));
    }
}
