//! Experiment configuration files (TOML).
//!
//! Every key is optional; unknown keys are rejected. Relative paths are
//! resolved against the directory of the configuration file.
//!
//! ```toml
//! seed = 1
//! variant = "multilingual"      # base | context | multilingual | both-contexts
//! mode = "single-inventory"     # single-inventory | disjoint | unified
//!
//! [training]
//! epochs = 5
//! learning_rate = 0.1
//!
//! [pretraining]
//! epochs = 5
//! learning_rate = 0.1
//! heldout_every = 20            # every 20th example is held out; 0 disables
//! languages = []                # empty: all languages in the example files
//!
//! [dims]
//! word = 128
//! lstm_hidden = 100
//! foreign_hidden = 32
//! sense_hidden = 500
//! prep = 200
//! lemma = 50
//! pos = 4
//! deprel = 4
//!
//! [data]
//! sentences = "train.conllu"
//! inventory = "senses.txt"      # default: the 12 coarse supersenses
//!
//! [embeddings]
//! path = "vectors.txt"
//! placement = "encoder"         # encoder | features | both
//! ```
//!
//! The environment variable `PREPSENSE_SEED` overrides `seed`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::encoder::EncoderDims;
use crate::features::FeatureDims;
use crate::models::{Mode, ModelDims, Variant};
use crate::training::{EmbeddingPlacement, TrainConfig};

pub const SEED_ENV: &str = "PREPSENSE_SEED";

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub variant: Variant,
    pub mode: Mode,
    pub training: TrainingSection,
    pub pretraining: PretrainingSection,
    pub dims: DimsSection,
    pub data: DataSection,
    pub embeddings: Option<EmbeddingsSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            variant: Variant::Multilingual,
            mode: Mode::SingleInventory,
            training: TrainingSection::default(),
            pretraining: PretrainingSection::default(),
            dims: DimsSection::default(),
            data: DataSection::default(),
            embeddings: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            epochs: 5,
            learning_rate: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainingSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub heldout_every: usize,
    pub languages: Vec<String>,
}

impl Default for PretrainingSection {
    fn default() -> Self {
        Self {
            epochs: 5,
            learning_rate: 0.1,
            heldout_every: 20,
            languages: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimsSection {
    pub word: usize,
    pub lstm_hidden: usize,
    pub foreign_hidden: usize,
    pub sense_hidden: usize,
    pub prep: usize,
    pub lemma: usize,
    pub pos: usize,
    pub deprel: usize,
}

impl Default for DimsSection {
    fn default() -> Self {
        let d = ModelDims::default();
        Self {
            word: d.encoder.word,
            lstm_hidden: d.encoder.hidden,
            foreign_hidden: d.foreign_hidden,
            sense_hidden: d.sense_hidden,
            prep: d.features.prep,
            lemma: d.features.lemma,
            pos: d.features.pos,
            deprel: d.features.deprel,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub sentences: Option<PathBuf>,
    pub inventory: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingsSection {
    pub path: PathBuf,
    pub placement: EmbeddingPlacement,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let config: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        config.check()?;
        Ok(config)
    }

    /// Reads `path` (defaults when `None`) and applies the seed override.
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut config = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                let mut c = Self::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?;
                c.resolve_paths(p.parent().unwrap_or(Path::new("")));
                c
            }
        };
        if let Ok(seed) = std::env::var(SEED_ENV) {
            config.seed = seed
                .trim()
                .parse()
                .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got `{seed}`"))?;
        }
        Ok(config)
    }

    fn check(&self) -> Result<(), String> {
        let d = &self.dims;
        let dims = [
            ("word", d.word),
            ("lstm_hidden", d.lstm_hidden),
            ("foreign_hidden", d.foreign_hidden),
            ("sense_hidden", d.sense_hidden),
            ("prep", d.prep),
            ("lemma", d.lemma),
            ("pos", d.pos),
            ("deprel", d.deprel),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(format!("dims.{name} must be at least 1"));
        }
        self.sense_config().validate().map_err(|e| e.to_string())?;
        self.pretrain_config().validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.data.sentences.as_mut().map(fix);
        self.data.inventory.as_mut().map(fix);
        if let Some(e) = self.embeddings.as_mut() {
            fix(&mut e.path);
        }
    }

    pub fn model_dims(&self) -> ModelDims {
        let d = &self.dims;
        ModelDims {
            features: FeatureDims {
                prep: d.prep,
                lemma: d.lemma,
                pos: d.pos,
                deprel: d.deprel,
            },
            encoder: EncoderDims {
                word: d.word,
                hidden: d.lstm_hidden,
            },
            sense_hidden: d.sense_hidden,
            foreign_hidden: d.foreign_hidden,
        }
    }

    pub fn sense_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            learning_rate: self.training.learning_rate,
            seed: self.seed,
            verbose: true,
        }
    }

    pub fn pretrain_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.pretraining.epochs,
            learning_rate: self.pretraining.learning_rate,
            seed: self.seed,
            verbose: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.model_dims(), ModelDims::default());
        assert_eq!(c.training.epochs, 5);
        assert_eq!(c.training.learning_rate, 0.1);
    }

    #[test]
    fn sections_parse() {
        let c = ExperimentConfig::parse(
            "seed = 7\nvariant = \"both-contexts\"\nmode = \"unified\"\n\
             [dims]\nword = 16\n[embeddings]\npath = \"v.txt\"\nplacement = \"both\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.variant, Variant::BothContexts);
        assert_eq!(c.mode, Mode::Unified);
        assert_eq!(c.model_dims().encoder.word, 16);
        assert_eq!(c.model_dims().encoder.hidden, 100);
        assert_eq!(c.embeddings.unwrap().placement, EmbeddingPlacement::Both);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse("sead = 3").is_err());
        assert!(ExperimentConfig::parse("[dims]\nwidth = 3").is_err());
        assert!(ExperimentConfig::parse("variant = \"huge\"").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::parse("[training]\nepochs = 0").is_err());
        assert!(ExperimentConfig::parse("[training]\nlearning_rate = -1.0").is_err());
        assert!(ExperimentConfig::parse("[dims]\nsense_hidden = 0").is_err());
    }
}
