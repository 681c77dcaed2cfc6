//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Values set on the command line override the file, which overrides
//! the defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use reportminer_core::{ArchConfig, Architecture, EmbeddingConfig, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub reports: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    pub min_count: u64,
    pub embedding: EmbeddingConfig,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub train_fraction: f64,
    /// Cross-validation folds; 0 skips cross-validation.
    pub folds: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: PathBuf::from("out"),
            reports: None,
            labeled: None,
            min_count: 1,
            embedding: EmbeddingConfig::default(),
            arch: Architecture::Lstm,
            train: TrainConfig::default(),
            train_fraction: 0.8,
            folds: 5,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("invalid value {value:?} for {key}: {e}"))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl PipelineConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = &mut self.embedding;
        let t = &mut self.train;
        let a: &mut ArchConfig = &mut t.arch;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "reports" => self.reports = optional_path(value),
            "labeled" => self.labeled = optional_path(value),
            "min_count" => self.min_count = parse(key, value)?,
            "embed.window" => e.window = parse(key, value)?,
            "embed.dim" => e.dim = parse(key, value)?,
            "embed.negatives" => e.negatives = parse(key, value)?,
            "embed.batch" => e.batch = parse(key, value)?,
            "embed.learning_rate" => e.learning_rate = parse(key, value)?,
            "embed.epochs" => e.epochs = parse(key, value)?,
            "embed.noise_power" => e.noise_power = parse(key, value)?,
            "embed.update" => e.update = value.parse()?,
            "arch" => self.arch = value.parse()?,
            "train.learning_rate" => t.learning_rate = parse(key, value)?,
            "train.epochs" => t.epochs = parse(key, value)?,
            "train.batch_size" => t.batch_size = parse(key, value)?,
            "train.fine_tune" => t.fine_tune = parse(key, value)?,
            "train.pad_length" => {
                t.pad_length = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "train.fraction" => self.train_fraction = parse(key, value)?,
            "train.folds" => self.folds = parse(key, value)?,
            "arch.avg_hidden" => a.avg_hidden = parse(key, value)?,
            "arch.cnn_filters" => a.cnn_filters = parse(key, value)?,
            "arch.cnn_width" => a.cnn_width = parse(key, value)?,
            "arch.cnn_dense" => a.cnn_dense = parse(key, value)?,
            "arch.lstm_hidden" => a.lstm_hidden = parse(key, value)?,
            "arch.lstm_dropout" => a.lstm_dropout = parse(key, value)?,
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("config line {}: expected `key = value`", i + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("config line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in config {}", path.display()))
    }

    /// Copies the global seed into the stage configs.
    pub fn finalize(&mut self) {
        self.embedding.seed = self.seed;
        self.train.seed = self.seed;
    }

    /// Renders every key, in a form [`apply_text`](Self::apply_text) parses back.
    pub fn render(&self) -> String {
        let e = &self.embedding;
        let t = &self.train;
        let a = &t.arch;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("out", self.out.display().to_string());
        kv("reports", path(&self.reports));
        kv("labeled", path(&self.labeled));
        kv("min_count", self.min_count.to_string());
        kv("embed.window", e.window.to_string());
        kv("embed.dim", e.dim.to_string());
        kv("embed.negatives", e.negatives.to_string());
        kv("embed.batch", e.batch.to_string());
        kv("embed.learning_rate", format!("{:?}", e.learning_rate));
        kv("embed.epochs", e.epochs.to_string());
        kv("embed.noise_power", format!("{:?}", e.noise_power));
        kv("embed.update", e.update.to_string());
        kv("arch", self.arch.to_string());
        kv("train.learning_rate", format!("{:?}", t.learning_rate));
        kv("train.epochs", t.epochs.to_string());
        kv("train.batch_size", t.batch_size.to_string());
        kv("train.fine_tune", t.fine_tune.to_string());
        kv(
            "train.pad_length",
            t.pad_length.map_or_else(|| "auto".to_owned(), |l| l.to_string()),
        );
        kv("train.fraction", format!("{:?}", self.train_fraction));
        kv("train.folds", self.folds.to_string());
        kv("arch.avg_hidden", a.avg_hidden.to_string());
        kv("arch.cnn_filters", a.cnn_filters.to_string());
        kv("arch.cnn_width", a.cnn_width.to_string());
        kv("arch.cnn_dense", a.cnn_dense.to_string());
        kv("arch.lstm_hidden", a.lstm_hidden.to_string());
        kv("arch.lstm_dropout", format!("{:?}", a.lstm_dropout));
        s
    }
}
