//! The on-disk session: which dataset files to read and with which pipeline
//! parameters. Lives at `{data_dir}/session.json`; relative paths resolve
//! against the data directory.

use std::path::{Path, PathBuf};

use corrobe_core::graphs::GraphProvider;
use corrobe_core::judgment::MissingProbePolicy;
use corrobe_core::metrics::MetricsConfig;
use corrobe_core::patterns::ClusterParams;
use corrobe_core::sg::{SynonymLexicon, TaskVocab, TemplateParser};
use corrobe_core::store::{DatasetManifest, EmbeddingTable, PipelineConfig, ResultsCache, SceneGraphStore};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const SESSION_FILE: &str = "session.json";
pub const CACHE_DIR: &str = "cache";
pub const EXPORT_DIR: &str = "exports";

/// Serialized session settings. Text resources left unset use the built-in
/// defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionFile {
    pub manifest: PathBuf,
    pub image_embeddings: PathBuf,
    pub text_embeddings: PathBuf,
    pub probe_embeddings: PathBuf,
    /// Ingested scene graphs; the template parser is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_graphs: Option<PathBuf>,
    /// Output directory of `corrupt`, used to serve corrupted images.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupted_images: Option<PathBuf>,
    /// Externally computed 2-D layout (`{id, x, y}` lines) replacing MDS.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_layout: Option<PathBuf>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub clustering: ClusterParams,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default = "default_policy")]
    pub missing_probe: MissingProbePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption_params: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numbers: Option<PathBuf>,
}

fn default_alpha() -> f64 {
    PipelineConfig::default().alpha
}

fn default_threshold() -> f64 {
    PipelineConfig::default().threshold
}

fn default_policy() -> MissingProbePolicy {
    MissingProbePolicy::Strict
}

impl SessionFile {
    pub fn new(manifest: PathBuf, image_embeddings: PathBuf, text_embeddings: PathBuf, probe_embeddings: PathBuf) -> Self {
        Self {
            manifest,
            image_embeddings,
            text_embeddings,
            probe_embeddings,
            scene_graphs: None,
            corrupted_images: None,
            external_layout: None,
            alpha: default_alpha(),
            threshold: default_threshold(),
            clustering: ClusterParams::default(),
            metrics: MetricsConfig::default(),
            missing_probe: default_policy(),
            corruption_params: None,
            synonyms: None,
            colors: None,
            sizes: None,
            numbers: None,
        }
    }

    pub fn path_in(data_dir: &Path) -> PathBuf {
        data_dir.join(SESSION_FILE)
    }

    pub fn read(data_dir: &Path) -> Result<Self> {
        let path = Self::path_in(data_dir);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                ServiceError::NoSession(data_dir.to_owned())
            } else {
                ServiceError::io(&path, e)
            }
        })?;
        serde_json::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, data_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(data_dir).map_err(|e| ServiceError::io(data_dir, e))?;
        let path = Self::path_in(data_dir);
        let mut text = serde_json::to_string_pretty(self).expect("session serialises");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| ServiceError::io(&path, e))
    }

    /// Assemble the full pipeline configuration, reading any override files.
    pub fn pipeline_config(&self, data_dir: &Path) -> Result<PipelineConfig> {
        let d = PipelineConfig::default();
        let text = |p: &Option<PathBuf>, fallback: String| -> Result<String> {
            match p {
                Some(p) => {
                    let p = resolve(data_dir, p);
                    std::fs::read_to_string(&p).map_err(|e| ServiceError::io(&p, e))
                }
                None => Ok(fallback),
            }
        };
        Ok(PipelineConfig {
            corruption_params: text(&self.corruption_params, d.corruption_params)?,
            synonyms: text(&self.synonyms, d.synonyms)?,
            colors: text(&self.colors, d.colors)?,
            sizes: text(&self.sizes, d.sizes)?,
            numbers: text(&self.numbers, d.numbers)?,
            alpha: self.alpha,
            threshold: self.threshold,
            clustering: self.clustering,
            metrics: self.metrics,
            missing_probe: self.missing_probe,
        })
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

/// A loaded session: validated manifest, lexical resources, graph source and
/// the results cache. Embedding tables are loaded on demand by the stages.
pub struct Session {
    pub data_dir: PathBuf,
    pub file: SessionFile,
    pub config: PipelineConfig,
    pub config_hash: String,
    pub manifest: DatasetManifest,
    pub lexicon: SynonymLexicon,
    pub vocab: TaskVocab,
    pub graphs: GraphProvider,
    pub cache: ResultsCache,
}

impl Session {
    pub fn open(data_dir: &Path) -> Result<Self> {
        let file = SessionFile::read(data_dir)?;
        Self::from_file(data_dir, file)
    }

    pub fn from_file(data_dir: &Path, file: SessionFile) -> Result<Self> {
        let config = file.pipeline_config(data_dir)?;
        let manifest = DatasetManifest::load(&resolve(data_dir, &file.manifest))?;
        for w in manifest.warnings() {
            log::warn!("{w}");
        }
        let lexicon = config.lexicon()?;
        let vocab = config.vocab();
        let graphs = match &file.scene_graphs {
            Some(p) => GraphProvider::Files(SceneGraphStore::load(&resolve(data_dir, p))?),
            None => GraphProvider::Template(TemplateParser::builtin()),
        };
        Ok(Self {
            data_dir: data_dir.to_owned(),
            config_hash: config.hash(),
            cache: ResultsCache::open(data_dir.join(CACHE_DIR))?,
            file,
            config,
            manifest,
            lexicon,
            vocab,
            graphs,
        })
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        resolve(&self.data_dir, p)
    }

    pub fn image_embeddings(&self) -> Result<EmbeddingTable> {
        Ok(EmbeddingTable::load(&self.path(&self.file.image_embeddings))?.pooled()?)
    }

    pub fn text_embeddings(&self) -> Result<EmbeddingTable> {
        Ok(EmbeddingTable::load(&self.path(&self.file.text_embeddings))?.pooled()?)
    }

    pub fn probe_embeddings(&self) -> Result<EmbeddingTable> {
        Ok(EmbeddingTable::load(&self.path(&self.file.probe_embeddings))?.pooled()?)
    }
}
