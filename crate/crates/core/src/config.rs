//! Flat `key = value` run configuration. Blank lines and `#` comments are
//! ignored; unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::corpus::{TokenizerConfig, VocabConfig};
use crate::error::{Error, Result};
use crate::model::{Mode, TrainConfig};
use crate::temporal::{DecayConfig, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    Local,
    Remote,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub min_token_len: usize,
    pub stopword_file: Option<PathBuf>,
    pub min_df: usize,
    pub max_df_frac: f64,
    /// 0 keeps every term.
    pub max_vocab: usize,
    pub num_slices: usize,

    pub provider: ProviderKind,
    pub embed_dim: usize,
    pub embed_seed: u64,
    pub endpoint: Option<String>,
    pub embed_batch_size: usize,
    pub embed_timeout_ms: u64,

    pub lambda: f64,
    /// -1 is unlimited.
    pub attention_window: i64,

    pub k: usize,
    pub beta: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub mode: Mode,
    pub init_scale: f64,
    pub smoothing_eta: f64,
    pub sigma: f64,
}

impl Default for Config {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            min_token_len: 2,
            stopword_file: None,
            min_df: 1,
            max_df_frac: 1.0,
            max_vocab: 0,
            num_slices: 10,
            provider: ProviderKind::Local,
            embed_dim: 128,
            embed_seed: 13,
            endpoint: None,
            embed_batch_size: 32,
            embed_timeout_ms: 10_000,
            lambda: 0.5,
            attention_window: 3,
            k: t.k,
            beta: t.beta,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            seed: t.seed,
            mode: t.mode,
            init_scale: t.init_scale,
            smoothing_eta: t.smoothing_eta,
            sigma: t.sigma,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        message: format!("invalid value `{value}` for `{key}`"),
    })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            cfg.set(line, key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` pair; `line` is used in error messages.
    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "min_token_len" => self.min_token_len = parse_value(line, key, value)?,
            "stopword_file" => self.stopword_file = Some(PathBuf::from(value)),
            "min_df" => self.min_df = parse_value(line, key, value)?,
            "max_df_frac" => self.max_df_frac = parse_value(line, key, value)?,
            "max_vocab" => self.max_vocab = parse_value(line, key, value)?,
            "num_slices" => self.num_slices = parse_value(line, key, value)?,
            "provider" => {
                self.provider = match value {
                    "local" => ProviderKind::Local,
                    "remote" => ProviderKind::Remote,
                    _ => {
                        return Err(Error::Config {
                            line,
                            message: format!("provider must be `local` or `remote`, got `{value}`"),
                        })
                    }
                }
            }
            "embed_dim" => self.embed_dim = parse_value(line, key, value)?,
            "embed_seed" => self.embed_seed = parse_value(line, key, value)?,
            "endpoint" => self.endpoint = Some(value.to_owned()),
            "embed_batch_size" => self.embed_batch_size = parse_value(line, key, value)?,
            "embed_timeout_ms" => self.embed_timeout_ms = parse_value(line, key, value)?,
            "lambda" => self.lambda = parse_value(line, key, value)?,
            "attention_window" => self.attention_window = parse_value(line, key, value)?,
            "k" => self.k = parse_value(line, key, value)?,
            "beta" => self.beta = parse_value(line, key, value)?,
            "epochs" => self.epochs = parse_value(line, key, value)?,
            "learning_rate" => self.learning_rate = parse_value(line, key, value)?,
            "seed" => self.seed = parse_value(line, key, value)?,
            "mode" => {
                self.mode = value.parse().map_err(|e: Error| Error::Config {
                    line,
                    message: e.to_string(),
                })?
            }
            "init_scale" => self.init_scale = parse_value(line, key, value)?,
            "smoothing_eta" => self.smoothing_eta = parse_value(line, key, value)?,
            "sigma" => self.sigma = parse_value(line, key, value)?,
            other => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("min_token_len", self.min_token_len.to_string());
        if let Some(p) = &self.stopword_file {
            kv("stopword_file", p.display().to_string());
        }
        kv("min_df", self.min_df.to_string());
        kv("max_df_frac", format!("{:?}", self.max_df_frac));
        kv("max_vocab", self.max_vocab.to_string());
        kv("num_slices", self.num_slices.to_string());
        kv(
            "provider",
            match self.provider {
                ProviderKind::Local => "local".into(),
                ProviderKind::Remote => "remote".into(),
            },
        );
        kv("embed_dim", self.embed_dim.to_string());
        kv("embed_seed", self.embed_seed.to_string());
        if let Some(e) = &self.endpoint {
            kv("endpoint", e.clone());
        }
        kv("embed_batch_size", self.embed_batch_size.to_string());
        kv("embed_timeout_ms", self.embed_timeout_ms.to_string());
        kv("lambda", format!("{:?}", self.lambda));
        kv("attention_window", self.attention_window.to_string());
        kv("k", self.k.to_string());
        kv("beta", format!("{:?}", self.beta));
        kv("epochs", self.epochs.to_string());
        kv("learning_rate", format!("{:?}", self.learning_rate));
        kv("seed", self.seed.to_string());
        kv("mode", self.mode.to_string());
        kv("init_scale", format!("{:?}", self.init_scale));
        kv("smoothing_eta", format!("{:?}", self.smoothing_eta));
        kv("sigma", format!("{:?}", self.sigma));
        s
    }

    pub fn tokenizer_config(&self) -> Result<TokenizerConfig> {
        let cfg = TokenizerConfig {
            min_token_len: self.min_token_len,
            ..TokenizerConfig::default()
        };
        match &self.stopword_file {
            Some(p) => cfg.with_stopword_file(p),
            None => Ok(cfg),
        }
    }

    pub fn vocab_config(&self) -> VocabConfig {
        VocabConfig {
            min_df: self.min_df,
            max_df_frac: self.max_df_frac,
            max_size: (self.max_vocab > 0).then_some(self.max_vocab),
        }
    }

    pub fn decay_config(&self) -> Result<DecayConfig> {
        let cfg = DecayConfig {
            lambda: self.lambda,
            window: Window::from_config(self.attention_window)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: self.seed,
            mode: self.mode,
            init_scale: self.init_scale,
            beta: self.beta,
            k: self.k,
            smoothing_eta: self.smoothing_eta,
            sigma: self.sigma,
        }
    }

    pub fn embed_timeout(&self) -> Duration {
        Duration::from_millis(self.embed_timeout_ms)
    }
}
