use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corruption::{ParamTable, DEFAULT_PARAMS_TOML};
use crate::error::Result;
use crate::judgment::MissingProbePolicy;
use crate::metrics::{MetricsConfig, TOKENIZER_VERSION};
use crate::patterns::ClusterParams;
use crate::sg::{SynonymLexicon, TaskVocab};

/// Every pipeline parameter that changes computed results. Its [`hash`]
/// versions the results cache.
///
/// [`hash`]: PipelineConfig::hash
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub corruption_params: String,
    pub synonyms: String,
    pub colors: String,
    pub sizes: String,
    pub numbers: String,
    pub alpha: f64,
    pub threshold: f64,
    pub clustering: ClusterParams,
    pub metrics: MetricsConfig,
    pub missing_probe: MissingProbePolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        use crate::sg::defaults;
        Self {
            corruption_params: DEFAULT_PARAMS_TOML.to_owned(),
            synonyms: defaults::SYNONYMS.to_owned(),
            colors: defaults::COLORS.to_owned(),
            sizes: defaults::SIZES.to_owned(),
            numbers: defaults::NUMBERS.to_owned(),
            alpha: 0.1,
            threshold: 0.25,
            clustering: ClusterParams::default(),
            metrics: MetricsConfig::default(),
            missing_probe: MissingProbePolicy::Strict,
        }
    }
}

impl PipelineConfig {
    /// Hex SHA-256 over the canonical JSON form plus the tokenizer version.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"corrobe/pipeline-config/v1\n");
        h.update(TOKENIZER_VERSION.as_bytes());
        h.update(b"\n");
        h.update(serde_json::to_vec(self).expect("config serialises"));
        hex::encode(h.finalize())
    }

    pub fn param_table(&self) -> Result<ParamTable> {
        ParamTable::parse(&self.corruption_params)
    }

    pub fn lexicon(&self) -> Result<SynonymLexicon> {
        SynonymLexicon::parse(&self.synonyms)
    }

    pub fn vocab(&self) -> TaskVocab {
        TaskVocab::from_texts(&self.colors, &self.sizes, &self.numbers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_every_parameter() {
        let base = PipelineConfig::default();
        let h = base.hash();
        assert_eq!(h, PipelineConfig::default().hash());
        assert_eq!(h.len(), 64);

        let variants = [
            PipelineConfig { alpha: 0.2, ..base.clone() },
            PipelineConfig { threshold: 0.3, ..base.clone() },
            PipelineConfig { synonyms: String::new(), ..base.clone() },
            PipelineConfig { corruption_params: base.corruption_params.replace("0.38", "0.39"), ..base.clone() },
            PipelineConfig {
                clustering: ClusterParams { min_cluster_size: 7, ..base.clustering },
                ..base.clone()
            },
        ];
        for v in variants {
            assert_ne!(v.hash(), h);
        }
    }

    #[test]
    fn builtin_resources_parse() {
        let c = PipelineConfig::default();
        c.param_table().unwrap();
        assert!(!c.lexicon().unwrap().is_empty());
        assert!(c.vocab().is_color("gray"));
    }
}
