//! Caption quality metrics at corpus and instance scope.

mod bleu;
mod cider;
mod meteor;
mod ngrams;
mod rouge;
mod spice;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bleu::{corpus_bleu, ngram_precision_counts, sentence_bleu};
pub use cider::{cider_scores, corpus_cider};
pub use meteor::{align, chunk_count, meteor_lite, meteor_single, stem, MeteorParams};
pub use rouge::{lcs_len, rouge_l, rouge_l_single};
pub use spice::spice;

use crate::corruption::{CorruptionKind, CorruptionSpec, MAX_SEVERITY};
use crate::error::{Error, Result};
use crate::graphs::GraphProvider;
use crate::sg::SynonymLexicon;
use crate::store::DatasetManifest;

/// Bumped whenever [`tokenize`] changes behaviour.
pub const TOKENIZER_VERSION: &str = "ws-alnum-lower/1";

/// Lowercase, treat every non-alphanumeric character as a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub rouge_beta: f64,
    pub meteor_alpha: f64,
    pub meteor_beta: f64,
    pub meteor_gamma: f64,
    pub cider_max_n: usize,
    pub cider_scale: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            rouge_beta: 1.2,
            meteor_alpha: 0.9,
            meteor_beta: 3.0,
            meteor_gamma: 0.5,
            cider_max_n: 4,
            cider_scale: 10.0,
        }
    }
}

impl MetricsConfig {
    pub fn meteor(&self) -> MeteorParams {
        MeteorParams {
            alpha: self.meteor_alpha,
            beta: self.meteor_beta,
            gamma: self.meteor_gamma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Bleu1,
    Bleu4,
    Meteor,
    RougeL,
    Cider,
    Spice,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Bleu1,
        Metric::Bleu4,
        Metric::Meteor,
        Metric::RougeL,
        Metric::Cider,
        Metric::Spice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bleu1 => "bleu1",
            Metric::Bleu4 => "bleu4",
            Metric::Meteor => "meteor",
            Metric::RougeL => "rouge_l",
            Metric::Cider => "cider",
            Metric::Spice => "spice",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Corpus,
    Instance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scope: Scope,
    pub corruption_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    pub bleu1: f64,
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub spice: f64,
    /// METEOR runs without a synonym stage.
    pub meteor_variant: String,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Bleu1 => self.bleu1,
            Metric::Bleu4 => self.bleu4,
            Metric::Meteor => self.meteor,
            Metric::RougeL => self.rouge_l,
            Metric::Cider => self.cider,
            Metric::Spice => self.spice,
        }
    }
}

/// Corpus report plus one report per instance, in manifest order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub corpus: MetricReport,
    pub instances: Vec<MetricReport>,
}

/// Score the captions stored under `key` against the ground truths.
///
/// Corpus BLEU pools n-gram counts; the other corpus values are means of the
/// instance values. Instance CIDEr uses the corpus-wide IDF.
pub fn evaluate(
    manifest: &DatasetManifest,
    key: &str,
    graphs: &GraphProvider,
    lex: &SynonymLexicon,
    cfg: &MetricsConfig,
) -> Result<Evaluation> {
    let missing: Vec<&str> = manifest
        .instances()
        .iter()
        .filter(|i| i.caption(key).is_none())
        .map(|i| i.image_id.as_str())
        .collect();
    if manifest.is_empty() || !missing.is_empty() {
        return Err(Error::input(format!(
            "no captions for corruption key {key} ({} of {} instances missing)",
            missing.len().max(usize::from(manifest.is_empty())),
            manifest.len()
        )));
    }
    let cands: Vec<Vec<String>> = manifest
        .instances()
        .iter()
        .map(|i| tokenize(i.caption(key).unwrap_or_default()))
        .collect();
    let refs: Vec<Vec<Vec<String>>> = manifest
        .instances()
        .iter()
        .map(|i| i.ground_truths.iter().map(|g| tokenize(g)).collect())
        .collect();
    let cider = cider_scores(&cands, &refs, cfg.cider_max_n, cfg.cider_scale)?;
    let meteor_p = cfg.meteor();

    let instances: Vec<MetricReport> = manifest
        .instances()
        .par_iter()
        .enumerate()
        .map(|(n, inst)| -> Result<MetricReport> {
            let (c, r) = (&cands[n], &refs[n]);
            let cand_sg = graphs.candidate(key, inst)?;
            let ref_sgs = graphs.references(inst)?;
            Ok(MetricReport {
                scope: Scope::Instance,
                corruption_key: key.to_owned(),
                image_id: Some(inst.image_id.clone()),
                bleu1: sentence_bleu(c, r, 1)?,
                bleu4: sentence_bleu(c, r, 4)?,
                meteor: meteor_lite(c, r, meteor_p),
                rouge_l: rouge_l(c, r, cfg.rouge_beta),
                cider: cider[n],
                spice: spice(&cand_sg, &ref_sgs, lex),
                meteor_variant: "lite".into(),
            })
        })
        .collect::<Result<_>>()?;

    let mean = |f: fn(&MetricReport) -> f64| instances.iter().map(f).sum::<f64>() / instances.len() as f64;
    let corpus = MetricReport {
        scope: Scope::Corpus,
        corruption_key: key.to_owned(),
        image_id: None,
        bleu1: corpus_bleu(&cands, &refs, 1)?,
        bleu4: corpus_bleu(&cands, &refs, 4)?,
        meteor: mean(|r| r.meteor),
        rouge_l: mean(|r| r.rouge_l),
        cider: mean(|r| r.cider),
        spice: mean(|r| r.spice),
        meteor_variant: "lite".into(),
    };
    Ok(Evaluation { corpus, instances })
}

/// One metric's values over severities 0–5; `None` where not computed.
pub type Series = [Option<f64>; MAX_SEVERITY as usize + 1];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub kind: CorruptionKind,
    pub series: BTreeMap<Metric, Series>,
}

impl PerformanceCurve {
    /// Arrange corpus reports (keyed by corruption key) into per-metric
    /// series; index 0 takes the clean report.
    pub fn assemble(kind: CorruptionKind, corpus: &BTreeMap<String, MetricReport>) -> Self {
        let reports: Vec<Option<&MetricReport>> = (0..=MAX_SEVERITY)
            .map(|s| {
                let key = CorruptionSpec::new(kind, s).expect("severity in range").key();
                corpus.get(&key)
            })
            .collect();
        let series = Metric::ALL
            .into_iter()
            .map(|m| {
                let mut s: Series = Default::default();
                for (slot, r) in s.iter_mut().zip(&reports) {
                    *slot = r.map(|r| r.get(m));
                }
                (m, s)
            })
            .collect();
        Self { kind, series }
    }
}
