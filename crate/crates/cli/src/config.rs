//! Optional TOML configuration. Any value set here wins over the matching
//! command-line flag.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use syntagm_agent::{DecodingParams, RateTable};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default, rename = "loop")]
    pub loop_: LoopSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub eval: EvalSection,
    pub decoding: Option<DecodingParams>,
    /// Model id to per-1k-token rates.
    #[serde(default)]
    pub rates: std::collections::BTreeMap<String, syntagm_agent::Rate>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub kind: Option<BackendKind>,
    pub url: Option<String>,
    pub model: Option<String>,
    pub api_key_env: Option<String>,
    pub script: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    pub budget: Option<u32>,
    pub k: Option<usize>,
    pub kb: Option<PathBuf>,
    pub final_assessment: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    /// `hashing` (default) or `remote`.
    pub provider: Option<String>,
    pub url: Option<String>,
    pub model: Option<String>,
    pub dim: Option<usize>,
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub repetitions: Option<u32>,
    pub parallelism: Option<usize>,
}

impl FileConfig {
    /// Relative paths inside the file resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut().filter(|x| x.is_relative()) {
                *x = base.join(&*x);
            }
        };
        fix(&mut cfg.backend.script);
        fix(&mut cfg.loop_.kb);
        RateTable { rates: cfg.rates.clone() }.validate().map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn rate_table(&self) -> RateTable {
        RateTable { rates: self.rates.clone() }
    }
}
