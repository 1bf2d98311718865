//! Flat `key = value` experiment configuration.
//!
//! Precedence, lowest first: built-in defaults, the config file, environment
//! variables `KGE_<KEY>` (key upper-cased), explicit overrides (CLI flags).
//! Unknown keys and unparsable values are errors that name the key.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{KgeError, Result};
use crate::graph::{DatasetPaths, Split, UnknownPolicy};
use crate::inference::{CandidateConfig, PoolStrategy};
use crate::models::{ModelKind, ModelSpec};
use crate::training::TrainConfig;
use crate::typing::{SubgraphConfig, TypingArchitecture, TypingLossConfig, TypingTrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Full,
    Ftai,
}

impl FromStr for EvalMode {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(EvalMode::Full),
            "ftai" => Ok(EvalMode::Ftai),
            other => Err(KgeError::InvalidArgument(format!("unknown mode {other:?} (expected full or ftai)"))),
        }
    }
}

impl Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalMode::Full => "full",
            EvalMode::Ftai => "ftai",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub unknown: UnknownPolicy,

    pub model: ModelKind,
    pub dim: usize,
    /// 0 selects a full entity table.
    pub rank: usize,
    pub gamma: f64,
    pub allow_full_rank: bool,

    pub batch_size: usize,
    pub negatives: usize,
    pub adversarial_temperature: f64,
    pub learning_rate: f64,
    pub optimizer: String,
    pub epochs: usize,
    pub eval_every: usize,
    pub filtered_negatives: bool,

    pub typing_layers: usize,
    pub typing_edge_dim: usize,
    pub typing_node_dim: usize,
    pub hops: usize,
    pub per_type_cap: usize,
    pub expand_cap: usize,
    pub typing_loss: String,
    pub typing_scale: f64,
    pub typing_margin: f64,
    pub typing_optimizer: String,
    pub typing_learning_rate: f64,
    pub typing_batch_size: usize,
    pub typing_epochs: usize,

    pub mode: EvalMode,
    pub budget: usize,
    pub pool: PoolStrategy,
    pub candidate_scorer: String,
    pub inference_hops: usize,
    pub neighborhood_cap: usize,
    pub prior_smoothing: f64,
    pub filter_splits: Vec<Split>,
    pub eval_split: Split,

    pub checkpoint: Option<PathBuf>,
    pub typing_checkpoint: Option<PathBuf>,
    pub seed: u64,
    pub threads: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let typing = TypingTrainConfig::default();
        let cand = CandidateConfig::default();
        Self {
            dataset: None,
            unknown: UnknownPolicy::Skip,
            model: ModelKind::TransE,
            dim: 200,
            rank: 0,
            gamma: 12.0,
            allow_full_rank: false,
            batch_size: train.batch_size,
            negatives: train.negatives,
            adversarial_temperature: train.adversarial_temperature,
            learning_rate: train.learning_rate,
            optimizer: train.optimizer,
            epochs: train.epochs,
            eval_every: train.eval_every,
            filtered_negatives: train.filtered_negatives,
            typing_layers: 2,
            typing_edge_dim: 64,
            typing_node_dim: 64,
            hops: typing.subgraph.hops,
            per_type_cap: typing.subgraph.per_type_cap,
            expand_cap: typing.subgraph.expand_cap,
            typing_loss: typing.loss,
            typing_scale: typing.loss_config.scale,
            typing_margin: typing.loss_config.margin,
            typing_optimizer: typing.optimizer,
            typing_learning_rate: typing.learning_rate,
            typing_batch_size: typing.batch_size,
            typing_epochs: typing.epochs,
            mode: EvalMode::Full,
            budget: cand.budget,
            pool: cand.pool,
            candidate_scorer: "typing".into(),
            inference_hops: cand.hops,
            neighborhood_cap: 0,
            prior_smoothing: 1.0,
            filter_splits: vec![Split::Train, Split::Valid, Split::Test],
            eval_split: Split::Test,
            checkpoint: None,
            typing_checkpoint: None,
            seed: 0,
            threads: 0,
            output: PathBuf::from("out"),
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "dataset",
    "unknown",
    "model",
    "dim",
    "rank",
    "gamma",
    "allow_full_rank",
    "batch_size",
    "negatives",
    "adversarial_temperature",
    "learning_rate",
    "optimizer",
    "epochs",
    "eval_every",
    "filtered_negatives",
    "typing_layers",
    "typing_edge_dim",
    "typing_node_dim",
    "hops",
    "per_type_cap",
    "expand_cap",
    "typing_loss",
    "typing_scale",
    "typing_margin",
    "typing_optimizer",
    "typing_learning_rate",
    "typing_batch_size",
    "typing_epochs",
    "mode",
    "budget",
    "pool",
    "candidate_scorer",
    "inference_hops",
    "neighborhood_cap",
    "prior_smoothing",
    "filter_splits",
    "eval_split",
    "checkpoint",
    "typing_checkpoint",
    "seed",
    "threads",
    "output",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| KgeError::Config {
        key: key.to_string(),
        message: format!("cannot parse {value:?}: {e}"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(KgeError::Config {
            key: key.to_string(),
            message: format!("expected a boolean, got {value:?}"),
        }),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        let v = value.trim();
        match k {
            "dataset" => self.dataset = optional_path(v),
            "unknown" => self.unknown = parse(k, v)?,
            "model" => self.model = parse(k, v)?,
            "dim" => self.dim = parse(k, v)?,
            "rank" => self.rank = parse(k, v)?,
            "gamma" => self.gamma = parse(k, v)?,
            "allow_full_rank" => self.allow_full_rank = parse_bool(k, v)?,
            "batch_size" => self.batch_size = parse(k, v)?,
            "negatives" => self.negatives = parse(k, v)?,
            "adversarial_temperature" => self.adversarial_temperature = parse(k, v)?,
            "learning_rate" => self.learning_rate = parse(k, v)?,
            "optimizer" => self.optimizer = v.to_string(),
            "epochs" => self.epochs = parse(k, v)?,
            "eval_every" => self.eval_every = parse(k, v)?,
            "filtered_negatives" => self.filtered_negatives = parse_bool(k, v)?,
            "typing_layers" => self.typing_layers = parse(k, v)?,
            "typing_edge_dim" => self.typing_edge_dim = parse(k, v)?,
            "typing_node_dim" => self.typing_node_dim = parse(k, v)?,
            "hops" => self.hops = parse(k, v)?,
            "per_type_cap" => self.per_type_cap = parse(k, v)?,
            "expand_cap" => self.expand_cap = parse(k, v)?,
            "typing_loss" => self.typing_loss = v.to_string(),
            "typing_scale" => self.typing_scale = parse(k, v)?,
            "typing_margin" => self.typing_margin = parse(k, v)?,
            "typing_optimizer" => self.typing_optimizer = v.to_string(),
            "typing_learning_rate" => self.typing_learning_rate = parse(k, v)?,
            "typing_batch_size" => self.typing_batch_size = parse(k, v)?,
            "typing_epochs" => self.typing_epochs = parse(k, v)?,
            "mode" => self.mode = parse(k, v)?,
            "budget" => self.budget = parse(k, v)?,
            "pool" => self.pool = parse(k, v)?,
            "candidate_scorer" => self.candidate_scorer = v.to_string(),
            "inference_hops" => self.inference_hops = parse(k, v)?,
            "neighborhood_cap" => self.neighborhood_cap = parse(k, v)?,
            "prior_smoothing" => self.prior_smoothing = parse(k, v)?,
            "filter_splits" => {
                self.filter_splits = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty() && *s != "none")
                    .map(|s| parse(k, s))
                    .collect::<Result<_>>()?
            }
            "eval_split" => self.eval_split = parse(k, v)?,
            "checkpoint" => self.checkpoint = optional_path(v),
            "typing_checkpoint" => self.typing_checkpoint = optional_path(v),
            "seed" => self.seed = parse(k, v)?,
            "threads" => self.threads = parse(k, v)?,
            "output" => self.output = PathBuf::from(v),
            _ => {
                return Err(KgeError::Config {
                    key: key.clone(),
                    message: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Text form of one key.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "dataset" => show_path(&self.dataset),
            "unknown" => match self.unknown {
                UnknownPolicy::Skip => "skip".into(),
                UnknownPolicy::Error => "error".into(),
            },
            "model" => self.model.to_string(),
            "dim" => self.dim.to_string(),
            "rank" => self.rank.to_string(),
            "gamma" => self.gamma.to_string(),
            "allow_full_rank" => self.allow_full_rank.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "negatives" => self.negatives.to_string(),
            "adversarial_temperature" => self.adversarial_temperature.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "optimizer" => self.optimizer.clone(),
            "epochs" => self.epochs.to_string(),
            "eval_every" => self.eval_every.to_string(),
            "filtered_negatives" => self.filtered_negatives.to_string(),
            "typing_layers" => self.typing_layers.to_string(),
            "typing_edge_dim" => self.typing_edge_dim.to_string(),
            "typing_node_dim" => self.typing_node_dim.to_string(),
            "hops" => self.hops.to_string(),
            "per_type_cap" => self.per_type_cap.to_string(),
            "expand_cap" => self.expand_cap.to_string(),
            "typing_loss" => self.typing_loss.clone(),
            "typing_scale" => self.typing_scale.to_string(),
            "typing_margin" => self.typing_margin.to_string(),
            "typing_optimizer" => self.typing_optimizer.clone(),
            "typing_learning_rate" => self.typing_learning_rate.to_string(),
            "typing_batch_size" => self.typing_batch_size.to_string(),
            "typing_epochs" => self.typing_epochs.to_string(),
            "mode" => self.mode.to_string(),
            "budget" => self.budget.to_string(),
            "pool" => self.pool.name().into(),
            "candidate_scorer" => self.candidate_scorer.clone(),
            "inference_hops" => self.inference_hops.to_string(),
            "neighborhood_cap" => self.neighborhood_cap.to_string(),
            "prior_smoothing" => self.prior_smoothing.to_string(),
            "filter_splits" => self.filter_splits.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
            "eval_split" => self.eval_split.name().into(),
            "checkpoint" => show_path(&self.checkpoint),
            "typing_checkpoint" => show_path(&self.typing_checkpoint),
            "seed" => self.seed.to_string(),
            "threads" => self.threads.to_string(),
            "output" => self.output.display().to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| KgeError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Applies `KGE_<KEY>` variables from `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        for key in KEYS {
            if let Some(v) = lookup(&format!("KGE_{}", key.to_ascii_uppercase())) {
                self.set(key, &v)?;
            }
        }
        Ok(())
    }

    /// The effective configuration in file syntax.
    pub fn echo(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    pub fn write_echo(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| KgeError::io(dir, e))?;
        let path = dir.join("effective_config.txt");
        fs::write(&path, self.echo()).map_err(|e| KgeError::io(&path, e))?;
        Ok(path)
    }

    /// Checks cross-field constraints and that referenced inputs exist.
    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, message: String| Err(KgeError::Config { key: key.into(), message });
        if self.rank > 0 {
            if self.rank > self.dim {
                return err("rank", format!("rank {} exceeds dim {}", self.rank, self.dim));
            }
            if self.rank == self.dim && !self.allow_full_rank {
                return err(
                    "rank",
                    format!("low-rank factorization needs r < d (got r = d = {}); set allow_full_rank = true to permit it", self.dim),
                );
            }
        }
        self.model_spec().validate().map_err(|e| KgeError::Config {
            key: "model".into(),
            message: e.to_string(),
        })?;
        self.train_config().validate().map_err(|e| KgeError::Config {
            key: "training".into(),
            message: e.to_string(),
        })?;
        self.typing_architecture(1).validate().map_err(|e| KgeError::Config {
            key: "typing".into(),
            message: e.to_string(),
        })?;
        self.typing_train_config().validate().map_err(|e| KgeError::Config {
            key: "typing".into(),
            message: e.to_string(),
        })?;
        if self.budget == 0 {
            return err("budget", "must be ≥ 1".into());
        }
        if let Some(dir) = &self.dataset {
            let paths = DatasetPaths::from_dir(dir);
            for p in [&paths.train, &paths.valid, &paths.test] {
                if !p.is_file() {
                    return err("dataset", format!("missing {}", p.display()));
                }
            }
        }
        for (key, p) in [("checkpoint", &self.checkpoint), ("typing_checkpoint", &self.typing_checkpoint)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return err(key, format!("missing {}", p.display()));
                }
            }
        }
        Ok(())
    }

    pub fn model_spec(&self) -> ModelSpec {
        let mut spec = ModelSpec::new(self.model, self.dim, self.gamma);
        if self.rank > 0 {
            spec = spec.with_rank(self.rank);
        }
        spec.allow_full_rank = self.allow_full_rank;
        spec
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            negatives: self.negatives,
            adversarial_temperature: self.adversarial_temperature,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer.clone(),
            epochs: self.epochs,
            eval_every: self.eval_every,
            seed: self.seed,
            filtered_negatives: self.filtered_negatives,
        }
    }

    pub fn subgraph_config(&self) -> SubgraphConfig {
        SubgraphConfig {
            hops: self.hops,
            per_type_cap: self.per_type_cap,
            expand_cap: self.expand_cap,
        }
    }

    pub fn typing_architecture(&self, relation_count: usize) -> TypingArchitecture {
        TypingArchitecture {
            layers: self.typing_layers,
            edge_dim: self.typing_edge_dim,
            node_dim: self.typing_node_dim,
            relation_count,
        }
    }

    pub fn typing_train_config(&self) -> TypingTrainConfig {
        TypingTrainConfig {
            loss: self.typing_loss.clone(),
            loss_config: TypingLossConfig {
                scale: self.typing_scale,
                margin: self.typing_margin,
            },
            optimizer: self.typing_optimizer.clone(),
            learning_rate: self.typing_learning_rate,
            batch_size: self.typing_batch_size,
            epochs: self.typing_epochs,
            seed: self.seed,
            subgraph: self.subgraph_config(),
        }
    }

    pub fn candidate_config(&self) -> CandidateConfig {
        CandidateConfig {
            budget: self.budget,
            pool: self.pool,
            hops: self.inference_hops,
            neighborhood_cap: if self.neighborhood_cap == 0 { usize::MAX } else { self.neighborhood_cap },
        }
    }
}

/// Defaults, then the file (if any), then `KGE_*` environment variables,
/// then `overrides` in order. Not validated.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| KgeError::io(path, e))?;
        cfg.apply_text(&text, path)?;
    }
    cfg.apply_env(|k| std::env::var(k).ok())?;
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("model", "rotate").unwrap();
        cfg.set("rank", "30").unwrap();
        cfg.set("filter_splits", "train").unwrap();
        cfg.set("dataset", "/data/fb15k").unwrap();
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.echo(), Path::new("echo")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_text("dimm = 3\n", Path::new("c")).unwrap_err();
        assert!(err.to_string().contains("dimm"), "{err}");
    }

    #[test]
    fn type_mismatch_is_an_error() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.set("dim", "wide").unwrap_err();
        assert!(err.to_string().contains("dim"));
    }

    #[test]
    fn full_rank_needs_override() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("rank", "200").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("r < d"));
        cfg.set("allow_full_rank", "true").unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn env_overrides_file() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("dim = 10 # comment\n\nepochs=3", Path::new("c")).unwrap();
        cfg.apply_env(|k| (k == "KGE_DIM").then(|| "12".to_string())).unwrap();
        assert_eq!((cfg.dim, cfg.epochs), (12, 3));
    }
}
