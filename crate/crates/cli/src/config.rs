//! Run configuration: a TOML file (located by `--config` or
//! `BRIEFBENCH_CONFIG`) with command-line overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use briefbench::qabrief::QgMode;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub blocklist: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub backend: Option<String>,
    pub backend_timeout_ms: Option<u64>,
    pub qg_mode: Option<QgMode>,
    pub bind: Option<SocketAddr>,
    pub state_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

impl Config {
    /// Reads a config file; relative paths in it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.corpus,
            &mut cfg.index,
            &mut cfg.blocklist,
            &mut cfg.aliases,
            &mut cfg.dataset,
            &mut cfg.state_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: Config) -> Config {
        Config {
            corpus: other.corpus.or(self.corpus),
            index: other.index.or(self.index),
            blocklist: other.blocklist.or(self.blocklist),
            aliases: other.aliases.or(self.aliases),
            dataset: other.dataset.or(self.dataset),
            backend: other.backend.or(self.backend),
            backend_timeout_ms: other.backend_timeout_ms.or(self.backend_timeout_ms),
            qg_mode: other.qg_mode.or(self.qg_mode),
            bind: other.bind.or(self.bind),
            state_dir: other.state_dir.or(self.state_dir),
            seed: other.seed.or(self.seed),
        }
    }

    pub fn corpus(&self) -> Result<&Path> {
        existing(self.corpus.as_deref(), "corpus")
    }

    pub fn dataset(&self) -> Result<&Path> {
        existing(self.dataset.as_deref(), "dataset")
    }

    pub fn state_dir(&self) -> Result<&Path> {
        self.state_dir.as_deref().context("no state directory configured (set state_dir or pass --state-dir)")
    }

    pub fn bind(&self) -> SocketAddr {
        self.bind.unwrap_or_else(|| DEFAULT_BIND.parse().expect("valid default"))
    }

    pub fn backend_timeout(&self) -> Duration {
        self.backend_timeout_ms.map(Duration::from_millis).unwrap_or(briefbench::qabrief::backend::DEFAULT_TIMEOUT)
    }
}

fn existing<'a>(path: Option<&'a Path>, what: &str) -> Result<&'a Path> {
    let Some(p) = path else {
        bail!("no {what} configured (set `{what}` in the config file or pass --{what})");
    };
    if !p.exists() {
        bail!("{what} {} does not exist", p.display());
    }
    Ok(p)
}
