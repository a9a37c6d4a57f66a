//! Run settings: a JSON file of optional overrides for the model, training
//! and generator defaults.

use std::path::Path;

use sailx_core::langgen::GeneratorConfig;
use sailx_core::navmodel::{ConvSpec, ModelConfig, TrainConfig, Variant};
use sailx_core::nnet::Adam;
use sailx_core::worldsim::WorldConfig;
use serde::{Deserialize, Serialize};

use crate::formats::FormatError;

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ConvJson {
    pub kh: usize,
    pub kw: usize,
    pub channels: usize,
}

/// Every field of [`ModelConfig`], with the variant by name.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfigJson {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub enc_hidden: usize,
    pub attn_hidden: usize,
    pub filter_width: usize,
    pub channels: usize,
    pub extra_convs: Vec<ConvJson>,
    pub variant: String,
    pub beam_width: usize,
    pub max_actions: usize,
    pub ensemble_size: usize,
}

impl From<&ModelConfig> for ModelConfigJson {
    fn from(c: &ModelConfig) -> Self {
        ModelConfigJson {
            vocab_size: c.vocab_size,
            embed_dim: c.embed_dim,
            enc_hidden: c.enc_hidden,
            attn_hidden: c.attn_hidden,
            filter_width: c.filter_width,
            channels: c.channels,
            extra_convs: c.extra_convs.iter().map(|s| ConvJson { kh: s.kh, kw: s.kw, channels: s.channels }).collect(),
            variant: c.variant.name().into(),
            beam_width: c.beam_width,
            max_actions: c.max_actions,
            ensemble_size: c.ensemble_size,
        }
    }
}

impl ModelConfigJson {
    pub fn to_config(&self) -> Result<ModelConfig, FormatError> {
        let variant = Variant::parse(&self.variant)
            .ok_or_else(|| FormatError::Invalid(format!("unknown variant {:?}", self.variant)))?;
        let c = ModelConfig {
            vocab_size: self.vocab_size,
            embed_dim: self.embed_dim,
            enc_hidden: self.enc_hidden,
            attn_hidden: self.attn_hidden,
            filter_width: self.filter_width,
            channels: self.channels,
            extra_convs: self.extra_convs.iter().map(|s| ConvSpec { kh: s.kh, kw: s.kw, channels: s.channels }).collect(),
            variant,
            beam_width: self.beam_width,
            max_actions: self.max_actions,
            ensemble_size: self.ensemble_size,
        };
        c.validate().map_err(|e| FormatError::Invalid(e.to_string()))?;
        Ok(c)
    }
}

/// Optional overrides; anything left out keeps its default.
#[derive(Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub embed_dim: Option<usize>,
    pub enc_hidden: Option<usize>,
    pub attn_hidden: Option<usize>,
    pub filter_width: Option<usize>,
    pub channels: Option<usize>,
    pub extra_convs: Option<Vec<ConvJson>>,
    pub beam_width: Option<usize>,
    pub max_actions: Option<usize>,
    pub ensemble_size: Option<usize>,
    pub lr: Option<f64>,
    pub clip: Option<f64>,
    pub patience: Option<usize>,
    pub max_epochs: Option<usize>,
    pub dev_beam: Option<usize>,
    pub map_width: Option<usize>,
    pub map_height: Option<usize>,
    pub item_prob: Option<f64>,
    pub min_dist: Option<usize>,
    pub two_segment_prob: Option<f64>,
    pub paths_per_map: Option<usize>,
    pub max_attempts: Option<usize>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn model_config(&self, vocab_size: usize, variant: Variant) -> Result<ModelConfig, FormatError> {
        let d = ModelConfig::new(vocab_size, variant);
        let c = ModelConfig {
            embed_dim: self.embed_dim.unwrap_or(d.embed_dim),
            enc_hidden: self.enc_hidden.unwrap_or(d.enc_hidden),
            attn_hidden: self.attn_hidden.unwrap_or(d.attn_hidden),
            filter_width: self.filter_width.unwrap_or(d.filter_width),
            channels: self.channels.unwrap_or(d.channels),
            extra_convs: match &self.extra_convs {
                Some(v) => v.iter().map(|s| ConvSpec { kh: s.kh, kw: s.kw, channels: s.channels }).collect(),
                None => d.extra_convs.clone(),
            },
            beam_width: self.beam_width.unwrap_or(d.beam_width),
            max_actions: self.max_actions.unwrap_or(d.max_actions),
            ensemble_size: self.ensemble_size.unwrap_or(d.ensemble_size),
            ..d
        };
        c.validate().map_err(|e| FormatError::Invalid(e.to_string()))?;
        Ok(c)
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            adam: Adam { lr: self.lr.unwrap_or(d.adam.lr), ..d.adam },
            clip: self.clip.unwrap_or(d.clip),
            patience: self.patience.unwrap_or(d.patience),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            seed,
            dev_beam: self.dev_beam.unwrap_or(d.dev_beam),
        }
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        let d = GeneratorConfig::default();
        GeneratorConfig {
            world: WorldConfig {
                width: self.map_width.unwrap_or(d.world.width),
                height: self.map_height.unwrap_or(d.world.height),
                item_prob: self.item_prob.unwrap_or(d.world.item_prob),
            },
            min_dist: self.min_dist.unwrap_or(d.min_dist),
            max_attempts: self.max_attempts.unwrap_or(d.max_attempts),
            two_segment_prob: self.two_segment_prob.unwrap_or(d.two_segment_prob),
            paths_per_map: self.paths_per_map.unwrap_or(d.paths_per_map),
        }
    }
}
