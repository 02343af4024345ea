//! Flat key=value run configuration.
//!
//! One file drives every subcommand; `#` starts a comment, blank lines are
//! skipped, unknown keys are rejected (typos should fail loudly, not
//! silently fall back to a default). The effective configuration — defaults,
//! file, then the `CAUSAL_ATTN_SEED` environment override — is echoed as
//! `resolved.cfg` next to every command's outputs.

use anyhow::{anyhow, bail, Context, Result};
use causal_attn::attacks::AttackKind;
use causal_attn::corpus::ScmConfig;
use causal_attn::encoder::{EncoderConfig, Mode};
use causal_attn::pipeline::MaskSource;
use causal_attn::training::TrainConfig;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Which enumerated sites the attack command visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteMode {
    All,
    Sampled,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    // model
    pub mode: Mode,
    pub blocks: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub ff_dim: usize,
    pub n_max: usize,
    pub alpha: f64,
    pub beta: f64,
    pub truncate: bool,
    // training
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub w_perf: f64,
    pub w_robust: f64,
    // vocabulary and graph construction
    pub min_freq: u64,
    pub merge_threshold: f64,
    pub dedup_threshold: f64,
    // prediction
    pub threshold: f64,
    pub mask_source: MaskSource,
    // attacks
    pub attack_kinds: Vec<AttackKind>,
    pub attack_sites: SiteMode,
    pub attack_per_doc: usize,
    // analysis
    pub top_k_percent: f64,
    // gradient check
    pub gc_epsilon: f64,
    pub gc_tolerance: f64,
    pub gc_samples: usize,
    // synthetic benchmark
    pub scm_classes: usize,
    pub scm_train_docs: usize,
    pub scm_dev_docs: usize,
    pub scm_iid_docs: usize,
    pub scm_ood_docs: usize,
    pub scm_doc_len_min: usize,
    pub scm_doc_len_max: usize,
    pub scm_causal_pool: usize,
    pub scm_style_pool: usize,
    pub scm_causal_per_doc: usize,
    pub scm_style_per_doc: usize,
    pub scm_rho: f64,
    // runtime
    pub seed: u64,
    /// Worker threads for parallel stages; 0 keeps the library default
    /// (available cores). Training itself is sequential by construction.
    pub threads: usize,
    // paths (flags override these)
    pub train_data: Option<PathBuf>,
    pub dev_data: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            mode: Mode::Baseline,
            blocks: 2,
            embed_dim: 64,
            heads: 4,
            head_dim: 16,
            ff_dim: 256,
            n_max: 256,
            alpha: 0.3,
            beta: 0.5,
            truncate: true,
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_eps: t.adam_eps,
            weight_decay: t.weight_decay,
            epochs: t.epochs,
            batch_size: t.batch_size,
            clip_norm: t.clip_norm,
            w_perf: t.w_perf,
            w_robust: t.w_robust,
            min_freq: 1,
            merge_threshold: 0.5,
            dedup_threshold: 0.7,
            threshold: 0.5,
            mask_source: MaskSource::Oie,
            attack_kinds: AttackKind::ALL.to_vec(),
            attack_sites: SiteMode::All,
            attack_per_doc: 1,
            top_k_percent: 5.0,
            gc_epsilon: 1e-4,
            gc_tolerance: 1e-4,
            gc_samples: 3,
            scm_classes: 4,
            scm_train_docs: 2000,
            scm_dev_docs: 500,
            scm_iid_docs: 500,
            scm_ood_docs: 500,
            scm_doc_len_min: 12,
            scm_doc_len_max: 18,
            scm_causal_pool: 12,
            scm_style_pool: 4,
            scm_causal_per_doc: 2,
            scm_style_per_doc: 4,
            scm_rho: 0.95,
            seed: 7,
            threads: 0,
            train_data: None,
            dev_data: None,
            data: None,
            oracle: None,
            model: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

pub(crate) fn parse_kinds(value: &str) -> Result<Vec<AttackKind>> {
    if value.trim() == "all" {
        return Ok(AttackKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let kind: AttackKind = part.parse().map_err(|e| anyhow!("{e}"))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        bail!("attack_kinds must name at least one kind or be \"all\"");
    }
    Ok(kinds)
}

impl RunConfig {
    /// Defaults overlaid with the config file, then the `CAUSAL_ATTN_SEED`
    /// environment override.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), lineno + 1))?;
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        cfg.apply_env()?;
        Ok(cfg)
    }

    /// Plain defaults plus the environment override, for runs without a
    /// config file.
    pub fn from_env() -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_env()?;
        Ok(cfg)
    }

    fn apply_env(&mut self) -> Result<()> {
        if let Ok(seed) = std::env::var("CAUSAL_ATTN_SEED") {
            self.seed = seed
                .trim()
                .parse()
                .with_context(|| format!("CAUSAL_ATTN_SEED={seed:?} is not a u64"))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| anyhow!("{key} = {value:?}: {e}"))
        }
        match key {
            "mode" => self.mode = value.parse().map_err(|e| anyhow!("{e}"))?,
            "blocks" => self.blocks = num(key, value)?,
            "embed_dim" => self.embed_dim = num(key, value)?,
            "heads" => self.heads = num(key, value)?,
            "head_dim" => self.head_dim = num(key, value)?,
            "ff_dim" => self.ff_dim = num(key, value)?,
            "n_max" => self.n_max = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "truncate" => self.truncate = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "beta1" => self.beta1 = num(key, value)?,
            "beta2" => self.beta2 = num(key, value)?,
            "adam_eps" => self.adam_eps = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "clip_norm" => self.clip_norm = num(key, value)?,
            "w_perf" => self.w_perf = num(key, value)?,
            "w_robust" => self.w_robust = num(key, value)?,
            "min_freq" => self.min_freq = num(key, value)?,
            "merge_threshold" => self.merge_threshold = num(key, value)?,
            "dedup_threshold" => self.dedup_threshold = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "mask_source" => self.mask_source = value.parse().map_err(|e| anyhow!("{e}"))?,
            "attack_kinds" => self.attack_kinds = parse_kinds(value)?,
            "attack_sites" => {
                self.attack_sites = match value {
                    "all" => SiteMode::All,
                    "sampled" => SiteMode::Sampled,
                    other => bail!("attack_sites must be all or sampled, got {other:?}"),
                }
            }
            "attack_per_doc" => self.attack_per_doc = num(key, value)?,
            "top_k_percent" => self.top_k_percent = num(key, value)?,
            "gc_epsilon" => self.gc_epsilon = num(key, value)?,
            "gc_tolerance" => self.gc_tolerance = num(key, value)?,
            "gc_samples" => self.gc_samples = num(key, value)?,
            "scm_classes" => self.scm_classes = num(key, value)?,
            "scm_train_docs" => self.scm_train_docs = num(key, value)?,
            "scm_dev_docs" => self.scm_dev_docs = num(key, value)?,
            "scm_iid_docs" => self.scm_iid_docs = num(key, value)?,
            "scm_ood_docs" => self.scm_ood_docs = num(key, value)?,
            "scm_doc_len_min" => self.scm_doc_len_min = num(key, value)?,
            "scm_doc_len_max" => self.scm_doc_len_max = num(key, value)?,
            "scm_causal_pool" => self.scm_causal_pool = num(key, value)?,
            "scm_style_pool" => self.scm_style_pool = num(key, value)?,
            "scm_causal_per_doc" => self.scm_causal_per_doc = num(key, value)?,
            "scm_style_per_doc" => self.scm_style_per_doc = num(key, value)?,
            "scm_rho" => self.scm_rho = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "train_data" => self.train_data = Some(PathBuf::from(value)),
            "dev_data" => self.dev_data = Some(PathBuf::from(value)),
            "data" => self.data = Some(PathBuf::from(value)),
            "oracle" => self.oracle = Some(PathBuf::from(value)),
            "model" => self.model = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    pub fn encoder_config(&self, vocab_size: usize, num_labels: usize) -> EncoderConfig {
        EncoderConfig {
            mode: self.mode,
            blocks: self.blocks,
            embed_dim: self.embed_dim,
            heads: self.heads,
            head_dim: self.head_dim,
            ff_dim: self.ff_dim,
            n_max: self.n_max,
            vocab_size,
            num_labels,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            truncate: self.truncate,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_eps: self.adam_eps,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            clip_norm: self.clip_norm,
            seed: self.seed,
            w_perf: self.w_perf,
            w_robust: self.w_robust,
        }
    }

    pub fn scm_config(&self) -> ScmConfig {
        ScmConfig {
            classes: self.scm_classes,
            train_docs: self.scm_train_docs,
            dev_docs: self.scm_dev_docs,
            iid_docs: self.scm_iid_docs,
            ood_docs: self.scm_ood_docs,
            doc_len: (self.scm_doc_len_min, self.scm_doc_len_max),
            causal_pool: self.scm_causal_pool,
            style_pool: self.scm_style_pool,
            causal_per_doc: self.scm_causal_per_doc,
            style_per_doc: self.scm_style_per_doc,
            rho: self.scm_rho,
            seed: self.seed,
        }
    }

    /// The effective configuration as sorted `key = value` lines.
    pub fn resolved_text(&self) -> String {
        fn path(p: &Option<PathBuf>) -> String {
            p.as_ref().map_or_else(String::new, |p| p.display().to_string())
        }
        let kinds =
            self.attack_kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",");
        let mut pairs: Vec<(&str, String)> = vec![
            ("adam_eps", format!("{:e}", self.adam_eps)),
            ("alpha", self.alpha.to_string()),
            ("attack_kinds", kinds),
            ("attack_per_doc", self.attack_per_doc.to_string()),
            (
                "attack_sites",
                match self.attack_sites {
                    SiteMode::All => "all".to_string(),
                    SiteMode::Sampled => "sampled".to_string(),
                },
            ),
            ("batch_size", self.batch_size.to_string()),
            ("beta", self.beta.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("blocks", self.blocks.to_string()),
            ("clip_norm", self.clip_norm.to_string()),
            ("data", path(&self.data)),
            ("dedup_threshold", self.dedup_threshold.to_string()),
            ("dev_data", path(&self.dev_data)),
            ("embed_dim", self.embed_dim.to_string()),
            ("epochs", self.epochs.to_string()),
            ("ff_dim", self.ff_dim.to_string()),
            ("gc_epsilon", format!("{:e}", self.gc_epsilon)),
            ("gc_samples", self.gc_samples.to_string()),
            ("gc_tolerance", format!("{:e}", self.gc_tolerance)),
            ("head_dim", self.head_dim.to_string()),
            ("heads", self.heads.to_string()),
            ("lr", format!("{:e}", self.lr)),
            ("mask_source", self.mask_source.to_string()),
            ("merge_threshold", self.merge_threshold.to_string()),
            ("min_freq", self.min_freq.to_string()),
            ("mode", self.mode.to_string()),
            ("model", path(&self.model)),
            ("n_max", self.n_max.to_string()),
            ("oracle", path(&self.oracle)),
            ("out_dir", self.out_dir.display().to_string()),
            ("scm_causal_per_doc", self.scm_causal_per_doc.to_string()),
            ("scm_causal_pool", self.scm_causal_pool.to_string()),
            ("scm_classes", self.scm_classes.to_string()),
            ("scm_dev_docs", self.scm_dev_docs.to_string()),
            ("scm_doc_len_max", self.scm_doc_len_max.to_string()),
            ("scm_doc_len_min", self.scm_doc_len_min.to_string()),
            ("scm_iid_docs", self.scm_iid_docs.to_string()),
            ("scm_ood_docs", self.scm_ood_docs.to_string()),
            ("scm_rho", self.scm_rho.to_string()),
            ("scm_style_per_doc", self.scm_style_per_doc.to_string()),
            ("scm_style_pool", self.scm_style_pool.to_string()),
            ("scm_train_docs", self.scm_train_docs.to_string()),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
            ("threshold", self.threshold.to_string()),
            ("top_k_percent", self.top_k_percent.to_string()),
            ("train_data", path(&self.train_data)),
            ("truncate", self.truncate.to_string()),
            ("w_perf", self.w_perf.to_string()),
            ("w_robust", self.w_robust.to_string()),
            ("weight_decay", self.weight_decay.to_string()),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
