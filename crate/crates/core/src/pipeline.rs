//! Glue between the corpus, graph, and encoder layers: turns documents into
//! encoder inputs for whichever mode a model runs in, wraps parameters and
//! preprocessing state into a single on-disk bundle, and exposes the
//! prediction closures the attack suite and attribution consume.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::corpus::{Document, Oracle, Vocabulary};
use crate::encoder::{
    forward, read_checkpoint, write_checkpoint, EncoderConfig, EncoderParams, Mode,
};
use crate::oie::{
    build_graph, derive_causal_mask, extract_triplets, linearize, resolve_coref_lite, CausalMask,
    DocFreq, KnowledgeGraph,
};
use crate::training::{targets_from_labels, TrainItem};
use crate::{Error, Result};

/// Where causal masks come from: the OIE graph chain or a gold oracle file
/// (synthetic data ships one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    Oie,
    Oracle,
}

impl fmt::Display for MaskSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskSource::Oie => "oie",
            MaskSource::Oracle => "oracle",
        })
    }
}

impl FromStr for MaskSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oie" => Ok(MaskSource::Oie),
            "oracle" => Ok(MaskSource::Oracle),
            other => Err(Error::invalid(format!("unknown mask source {other:?}"))),
        }
    }
}

/// Preprocessing state a trained model depends on; stored in the checkpoint
/// header so evaluation cannot drift from training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleMeta {
    pub label_space: Vec<String>,
    pub vocab: Vocabulary,
    pub doc_freq: DocFreq,
    pub merge_threshold: f64,
    pub dedup_threshold: f64,
    pub mask_source: MaskSource,
    /// Decision threshold: a label is predicted iff its probability strictly
    /// exceeds this.
    pub threshold: f64,
}

/// A complete, runnable model: preprocessing meta + encoder config + weights.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub meta: BundleMeta,
    pub cfg: EncoderConfig,
    pub params: EncoderParams,
}

impl ModelBundle {
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_checkpoint(w, &self.meta, &self.cfg, &self.params)
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let (mut meta, cfg, params): (BundleMeta, _, _) = read_checkpoint(r)?;
        meta.vocab.rebuild_index();
        Ok(ModelBundle { meta, cfg, params })
    }

    pub fn pipeline<'a>(&'a self, oracle: Option<&'a Oracle>) -> DocPipeline<'a> {
        DocPipeline {
            cfg: &self.cfg,
            vocab: &self.meta.vocab,
            doc_freq: &self.meta.doc_freq,
            merge_threshold: self.meta.merge_threshold,
            dedup_threshold: self.meta.dedup_threshold,
            mask_source: self.meta.mask_source,
            oracle,
        }
    }
}

/// Turns documents into encoder inputs for one configuration. Borrowed state
/// only — cheap to construct per stage.
#[derive(Clone, Copy)]
pub struct DocPipeline<'a> {
    pub cfg: &'a EncoderConfig,
    pub vocab: &'a Vocabulary,
    pub doc_freq: &'a DocFreq,
    pub merge_threshold: f64,
    pub dedup_threshold: f64,
    pub mask_source: MaskSource,
    pub oracle: Option<&'a Oracle>,
}

impl<'a> DocPipeline<'a> {
    /// The document's knowledge graph via the OIE chain.
    pub fn graph_for(&self, doc: &Document) -> Result<KnowledgeGraph> {
        let triplets = extract_triplets(doc);
        let clusters = resolve_coref_lite(doc);
        build_graph(
            doc,
            &triplets,
            &clusters,
            self.merge_threshold,
            self.dedup_threshold,
            self.doc_freq,
        )
    }

    /// The document-aligned causal mask from the configured source.
    pub fn mask_for(&self, doc: &Document) -> Result<CausalMask> {
        match self.mask_source {
            MaskSource::Oie => derive_causal_mask(&self.graph_for(doc)?, doc),
            MaskSource::Oracle => {
                let oracle = self.oracle.ok_or_else(|| {
                    Error::config("mask_source=oracle but no oracle file was provided")
                })?;
                let positions = oracle.positions(&doc.doc_id).ok_or_else(|| {
                    Error::invalid(format!("doc {:?} missing from the oracle", doc.doc_id))
                })?;
                CausalMask::from_positions(doc.tokens.len(), positions)
            }
        }
    }

    /// Vocabulary ids of the linearized graph text.
    pub fn graph_ids_for(&self, doc: &Document) -> Result<Vec<usize>> {
        let tokens = linearize(&self.graph_for(doc)?);
        Ok(self.vocab.ids_for_surfaces(&tokens))
    }

    /// `(ids, mask, graph_ids)` with exactly the pieces the mode consumes.
    pub fn inputs_for(
        &self,
        doc: &Document,
    ) -> Result<(Vec<usize>, Option<CausalMask>, Option<Vec<usize>>)> {
        let ids = self.vocab.ids_for(doc);
        let mask = if self.cfg.mode == Mode::Casam { Some(self.mask_for(doc)?) } else { None };
        let graph_ids =
            if self.cfg.mode == Mode::Ciesam { Some(self.graph_ids_for(doc)?) } else { None };
        Ok((ids, mask, graph_ids))
    }

    pub fn train_item(&self, doc: &Document, num_labels: usize) -> Result<TrainItem> {
        let (ids, mask, graph_ids) = self.inputs_for(doc)?;
        Ok(TrainItem {
            doc_id: doc.doc_id.clone(),
            ids,
            mask,
            graph_ids,
            targets: targets_from_labels(&doc.labels, num_labels),
        })
    }

    /// Per-label probabilities for one document.
    pub fn predict_probs(&self, params: &EncoderParams, doc: &Document) -> Result<Vec<f64>> {
        let (ids, mask, graph_ids) = self.inputs_for(doc)?;
        let trace = forward(self.cfg, params, &ids, mask.as_ref(), graph_ids.as_deref())?;
        Ok(trace.probs)
    }

    /// Thresholded label set: labels with probability strictly above
    /// `threshold`.
    pub fn predict_set(
        &self,
        params: &EncoderParams,
        doc: &Document,
        threshold: f64,
    ) -> Result<BTreeSet<usize>> {
        let probs = self.predict_probs(params, doc)?;
        Ok(probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(l, _)| l)
            .collect())
    }

    /// Closure form of [`predict_set`][Self::predict_set] for the attack
    /// suite.
    pub fn set_predictor(
        &'a self,
        params: &'a EncoderParams,
        threshold: f64,
    ) -> impl Fn(&Document) -> Result<BTreeSet<usize>> + Sync + 'a {
        move |doc| self.predict_set(params, doc, threshold)
    }

    /// Closure form of [`predict_probs`][Self::predict_probs] for
    /// attribution.
    pub fn prob_predictor(
        &'a self,
        params: &'a EncoderParams,
    ) -> impl Fn(&Document) -> Result<Vec<f64>> + Sync + 'a {
        move |doc| self.predict_probs(params, doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Dataset;

    fn fixture() -> (Dataset, Vocabulary, DocFreq) {
        let docs = vec![
            Document::new("d0", "Bob robbed Alice of her car.", BTreeSet::from([0])),
            Document::new("d1", "Alice sued Bob.", BTreeSet::from([1])),
        ];
        let data = Dataset::new(docs, vec!["theft".into(), "suit".into()], "train").unwrap();
        let vocab = Vocabulary::build(&data, 1).unwrap();
        let doc_freq = DocFreq::build(&data);
        (data, vocab, doc_freq)
    }

    fn pipeline_for<'a>(
        cfg: &'a EncoderConfig,
        vocab: &'a Vocabulary,
        doc_freq: &'a DocFreq,
        oracle: Option<&'a Oracle>,
    ) -> DocPipeline<'a> {
        DocPipeline {
            cfg,
            vocab,
            doc_freq,
            merge_threshold: 0.9,
            dedup_threshold: 0.9,
            mask_source: if oracle.is_some() { MaskSource::Oracle } else { MaskSource::Oie },
            oracle,
        }
    }

    #[test]
    fn every_mode_produces_exactly_its_inputs() {
        let (data, vocab, doc_freq) = fixture();
        let doc = &data.documents[0];
        for mode in [Mode::Baseline, Mode::Casam, Mode::Ciesam] {
            let cfg = EncoderConfig::tiny(mode, vocab.size(), 2);
            let p = pipeline_for(&cfg, &vocab, &doc_freq, None);
            let (ids, mask, graph_ids) = p.inputs_for(doc).unwrap();
            assert_eq!(ids.len(), doc.tokens.len());
            assert_eq!(mask.is_some(), mode == Mode::Casam);
            assert_eq!(graph_ids.is_some(), mode == Mode::Ciesam);
            if let Some(m) = &mask {
                assert_eq!(m.len(), doc.tokens.len());
            }
            if let Some(g) = &graph_ids {
                assert!(!g.is_empty(), "the triplet should linearize to something");
            }
            let probs = p.predict_probs(&EncoderParams::init(&cfg, 5), doc).unwrap();
            assert_eq!(probs.len(), 2);
        }
    }

    #[test]
    fn oracle_masks_require_and_use_the_oracle() {
        let (data, vocab, doc_freq) = fixture();
        let cfg = EncoderConfig::tiny(Mode::Casam, vocab.size(), 2);
        let mut oracle = Oracle::default();
        oracle.insert("d0", vec![0, 1, 2]);
        let p = pipeline_for(&cfg, &vocab, &doc_freq, Some(&oracle));
        let mask = p.mask_for(&data.documents[0]).unwrap();
        assert!(mask.get(0, 2) && !mask.get(0, 3));
        // d1 is not in the oracle
        assert!(p.mask_for(&data.documents[1]).is_err());
        // oracle source without an oracle is a config error
        let q = DocPipeline { oracle: None, mask_source: MaskSource::Oracle, ..p };
        assert!(q.mask_for(&data.documents[0]).is_err());
    }

    #[test]
    fn zero_params_predict_nothing_at_the_strict_threshold() {
        let (data, vocab, doc_freq) = fixture();
        let cfg = EncoderConfig::tiny(Mode::Baseline, vocab.size(), 2);
        let p = pipeline_for(&cfg, &vocab, &doc_freq, None);
        let params = EncoderParams::zeros(&cfg);
        // zero classifier → probability exactly 0.5 → strictly-above excludes
        let set = p.predict_set(&params, &data.documents[0], 0.5).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn bundles_round_trip_and_predict_identically() {
        let (data, vocab, doc_freq) = fixture();
        let cfg = EncoderConfig::tiny(Mode::Ciesam, vocab.size(), 2);
        let bundle = ModelBundle {
            meta: BundleMeta {
                label_space: data.label_space.clone(),
                vocab,
                doc_freq,
                merge_threshold: 0.9,
                dedup_threshold: 0.9,
                mask_source: MaskSource::Oie,
                threshold: 0.5,
            },
            cfg: cfg.clone(),
            params: EncoderParams::init(&cfg, 11),
        };
        let mut buf = Vec::new();
        bundle.save(&mut buf).unwrap();
        let loaded = ModelBundle::load(buf.as_slice()).unwrap();
        let doc = &data.documents[0];
        let a = bundle.pipeline(None).predict_probs(&bundle.params, doc).unwrap();
        let b = loaded.pipeline(None).predict_probs(&loaded.params, doc).unwrap();
        assert_eq!(a, b, "loaded bundle must predict bit-identically");
        assert_eq!(loaded.meta.label_space, bundle.meta.label_space);
        // vocabulary index survived the skip-field round trip
        assert_eq!(loaded.meta.vocab.id("car"), bundle.meta.vocab.id("car"));
    }

    #[test]
    fn train_items_carry_multi_hot_targets() {
        let (data, vocab, doc_freq) = fixture();
        let cfg = EncoderConfig::tiny(Mode::Baseline, vocab.size(), 2);
        let p = pipeline_for(&cfg, &vocab, &doc_freq, None);
        let item = p.train_item(&data.documents[1], 2).unwrap();
        assert_eq!(item.targets, vec![0.0, 1.0]);
        assert_eq!(item.doc_id, "d1");
    }
}
