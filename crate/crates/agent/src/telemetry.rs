//! Token, latency and cost accounting.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Dollar rates per 1000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub prompt_per_1k: f64,
    pub completion_per_1k: f64,
}

impl Rate {
    pub fn cost(&self, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        prompt_tokens as f64 / 1000.0 * self.prompt_per_1k
            + completion_tokens as f64 / 1000.0 * self.completion_per_1k
    }
}

/// Model id to rate, read from a TOML file:
///
/// ```toml
/// [rates."gpt-4.1"]
/// prompt_per_1k = 0.002
/// completion_per_1k = 0.008
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    #[serde(default)]
    pub rates: BTreeMap<String, Rate>,
}

impl RateTable {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let t: RateTable = toml::from_str(text).map_err(|e| e.to_string())?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (model, r) in &self.rates {
            if !(r.prompt_per_1k >= 0.0 && r.completion_per_1k >= 0.0) {
                return Err(format!("rates for {model} must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn get(&self, model: &str) -> Option<Rate> {
        self.rates.get(model).copied()
    }

    pub fn insert(&mut self, model: impl Into<String>, rate: Rate) {
        self.rates.insert(model.into(), rate);
    }
}

/// Usage of one loop run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub model_id: String,
    pub iterations: u32,
    pub generation_calls: u32,
    pub assessment_calls: u32,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Wall clock for the whole run.
    pub latency_s: f64,
    /// Dollars; absent when the model has no configured rate.
    pub cost_usd: Option<f64>,
}

impl Telemetry {
    pub fn add_usage(&mut self, prompt: u64, completion: u64) {
        self.prompt_tokens += prompt;
        self.completion_tokens += completion;
    }

    pub fn price(&mut self, rates: &RateTable) {
        self.cost_usd = rates.get(&self.model_id).map(|r| r.cost(self.prompt_tokens, self.completion_tokens));
    }
}
