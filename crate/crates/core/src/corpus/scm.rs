//! Synthetic benchmark generator with a known causal structure.
//!
//! Every document's label is a pure function of which class-specific *causal*
//! tokens it contains. *Style* tokens are merely correlated with the label:
//! in the train/dev/iid splits a document of class k draws its style tokens
//! from class k's paired pool with probability rho (otherwise from one of the
//! other pools, uniformly); in the ood split the pool is uniform over all
//! classes, which breaks the correlation. The remaining positions are filled
//! from a neutral pool shared by all classes.
//!
//! Setting rho = 1/K makes the train distribution coincide with ood
//! (P(pool = k's) = rho = 1/K = uniform), and rho = 1 pins style to the label.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::{Dataset, Document, Oracle};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScmConfig {
    /// Number of classes K (one label per document).
    pub classes: usize,
    pub train_docs: usize,
    pub dev_docs: usize,
    pub iid_docs: usize,
    pub ood_docs: usize,
    /// Inclusive token-count range per document.
    pub doc_len: (usize, usize),
    /// Size of each class's causal token pool.
    pub causal_pool: usize,
    /// Size of each class's paired style token pool.
    pub style_pool: usize,
    /// Causal tokens placed in each document.
    pub causal_per_doc: usize,
    /// Style tokens placed in each document.
    pub style_per_doc: usize,
    /// Label/style co-occurrence probability in train/dev/iid.
    pub rho: f64,
    pub seed: u64,
}

impl Default for ScmConfig {
    fn default() -> Self {
        ScmConfig {
            classes: 4,
            train_docs: 2000,
            dev_docs: 500,
            iid_docs: 500,
            ood_docs: 500,
            doc_len: (12, 18),
            causal_pool: 12,
            style_pool: 4,
            causal_per_doc: 2,
            style_per_doc: 4,
            rho: 0.95,
            seed: 7,
        }
    }
}

impl ScmConfig {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {}", self.classes)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if self.doc_len.0 > self.doc_len.1 {
            return Err(Error::invalid(format!("doc_len range {:?} is inverted", self.doc_len)));
        }
        if self.causal_per_doc == 0 {
            return Err(Error::invalid("causal_per_doc must be >= 1 (labels depend on causal tokens)"));
        }
        if self.doc_len.0 < self.causal_per_doc + self.style_per_doc {
            return Err(Error::invalid(format!(
                "doc_len minimum {} cannot hold {} causal + {} style tokens",
                self.doc_len.0, self.causal_per_doc, self.style_per_doc
            )));
        }
        if self.causal_pool == 0 || self.style_pool == 0 {
            return Err(Error::invalid("causal_pool and style_pool must be >= 1"));
        }
        Ok(())
    }
}

/// The generator's ground truth: disjoint per-class token pools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScmPools {
    pub causal: Vec<Vec<String>>,
    pub style: Vec<Vec<String>>,
    pub filler: Vec<String>,
}

impl ScmPools {
    fn build(cfg: &ScmConfig) -> Self {
        let causal = (0..cfg.classes)
            .map(|k| (0..cfg.causal_pool).map(|i| format!("caus{}{}", letters(k), letters(i))).collect())
            .collect();
        let style = (0..cfg.classes)
            .map(|k| (0..cfg.style_pool).map(|i| format!("styl{}{}", letters(k), letters(i))).collect())
            .collect();
        let filler = (0..64).map(|i| format!("fill{}", letters(i))).collect();
        ScmPools { causal, style, filler }
    }

    /// The labeling function: class k is present iff any of its causal tokens
    /// is. Style and filler tokens never influence the result.
    pub fn labels_for<S: AsRef<str>>(&self, tokens: &[S]) -> BTreeSet<usize> {
        let mut labels = BTreeSet::new();
        for (k, pool) in self.causal.iter().enumerate() {
            if tokens.iter().any(|t| pool.iter().any(|p| p == t.as_ref())) {
                labels.insert(k);
            }
        }
        labels
    }

    /// Which style pool a document drew from, if exactly one is represented.
    pub fn style_pool_of<S: AsRef<str>>(&self, tokens: &[S]) -> Option<usize> {
        let mut found = None;
        for (k, pool) in self.style.iter().enumerate() {
            if tokens.iter().any(|t| pool.iter().any(|p| p == t.as_ref())) {
                if found.is_some() {
                    return None;
                }
                found = Some(k);
            }
        }
        found
    }
}

/// All-letter suffix for synthetic token names ("aa", "ab", ...).
fn letters(mut i: usize) -> String {
    let mut out = [b'a'; 2];
    out[1] = b'a' + (i % 26) as u8;
    i /= 26;
    out[0] = b'a' + (i % 26) as u8;
    debug_assert!(i < 26, "pool index out of the two-letter range");
    String::from_utf8_lossy(&out).into_owned()
}

pub struct ScmData {
    pub train: Dataset,
    pub dev: Dataset,
    pub iid_test: Dataset,
    pub ood_test: Dataset,
    pub oracle: Oracle,
    pub pools: ScmPools,
}

pub fn generate_scm_dataset(cfg: &ScmConfig) -> Result<ScmData> {
    cfg.validate()?;
    let pools = ScmPools::build(cfg);
    let label_space: Vec<String> = (0..cfg.classes).map(|k| format!("label{}", letters(k))).collect();

    let mut oracle = Oracle::default();
    let mut split = |name: &str, n: usize, correlated: bool, salt: u64| -> Result<Dataset> {
        // per-split stream so adding docs to one split never shifts another
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut documents = Vec::with_capacity(n);
        for i in 0..n {
            let (doc, positions) = generate_doc(cfg, &pools, &mut rng, correlated, &format!("{name}-{i:05}"));
            oracle.insert(doc.doc_id.clone(), positions);
            documents.push(doc);
        }
        Dataset::new(documents, label_space.clone(), name)
    };

    let train = split("train", cfg.train_docs, true, 1)?;
    let dev = split("dev", cfg.dev_docs, true, 2)?;
    let iid_test = split("iid_test", cfg.iid_docs, true, 3)?;
    let ood_test = split("ood_test", cfg.ood_docs, false, 4)?;
    Ok(ScmData { train, dev, iid_test, ood_test, oracle, pools })
}

fn generate_doc(
    cfg: &ScmConfig,
    pools: &ScmPools,
    rng: &mut ChaCha8Rng,
    correlated: bool,
    doc_id: &str,
) -> (Document, Vec<usize>) {
    let len = rng.gen_range(cfg.doc_len.0..=cfg.doc_len.1);
    let class = rng.gen_range(0..cfg.classes);
    let style_class = if correlated {
        if rng.gen::<f64>() < cfg.rho {
            class
        } else {
            // uniform over the other K-1 pools, so rho = 1/K is exactly uniform
            let other = rng.gen_range(0..cfg.classes - 1);
            if other >= class {
                other + 1
            } else {
                other
            }
        }
    } else {
        rng.gen_range(0..cfg.classes)
    };

    let mut slots: Vec<(String, bool)> = Vec::with_capacity(len);
    for _ in 0..cfg.causal_per_doc {
        let tok = pools.causal[class][rng.gen_range(0..cfg.causal_pool)].clone();
        slots.push((tok, true));
    }
    for _ in 0..cfg.style_per_doc {
        let tok = pools.style[style_class][rng.gen_range(0..cfg.style_pool)].clone();
        slots.push((tok, false));
    }
    while slots.len() < len {
        slots.push((pools.filler[rng.gen_range(0..pools.filler.len())].clone(), false));
    }
    slots.shuffle(rng);

    let positions: Vec<usize> =
        slots.iter().enumerate().filter_map(|(i, (_, causal))| causal.then_some(i)).collect();
    let text = slots.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>().join(" ");
    let labels: BTreeSet<usize> = [class].into_iter().collect();
    (Document::new(doc_id, text, labels), positions)
}
