use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize};

use crate::message::Usage;
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub count: u64,
    pub proportion: f64,
}

/// Dispatched tool calls per tool name. Proportions are over the total.
pub type ToolHistogram = BTreeMap<String, HistogramEntry>;

pub fn histogram_from_counts(counts: &BTreeMap<String, u64>) -> ToolHistogram {
    let total: u64 = counts.values().sum();
    counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(name, &count)| (name.clone(), HistogramEntry { count, proportion: count as f64 / total as f64 }))
        .collect()
}

pub fn tool_counts<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for t in transcripts {
        for (_, call) in t.dispatched_calls() {
            *counts.entry(call.tool_name.clone()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn tool_histogram<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> ToolHistogram {
    histogram_from_counts(&tool_counts(transcripts))
}

/// `(p_simple - p_complex) / p_complex`; `None` when `p_complex` is zero.
pub fn relative_gap(p_simple: f64, p_complex: f64) -> Option<f64> {
    (p_complex != 0.0).then(|| (p_simple - p_complex) / p_complex)
}

/// Prices per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Price {
    #[serde(deserialize_with = "decimal_from_any")]
    pub input: Decimal,
    #[serde(deserialize_with = "decimal_from_any")]
    pub output: Decimal,
}

fn decimal_from_any<'de, D: Deserializer<'de>>(d: D) -> Result<Decimal, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }
    let text = match Raw::deserialize(d)? {
        Raw::Int(i) => i.to_string(),
        // Go through the shortest decimal form so 0.4 stays 0.4.
        Raw::Float(f) => f.to_string(),
        Raw::Text(s) => s,
    };
    let value = Decimal::from_str(text.trim()).map_err(serde::de::Error::custom)?;
    if value.is_sign_negative() && !value.is_zero() {
        return Err(serde::de::Error::custom(format!("price {value} is negative")));
    }
    Ok(value)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricingTable {
    pub models: BTreeMap<String, Price>,
}

#[derive(Debug, thiserror::Error)]
pub enum PricingError {
    #[error("no price for model `{0}`")]
    UnknownModel(String),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("pricing file: {0}")]
    Parse(#[from] toml::de::Error),
}

impl PricingTable {
    pub fn from_toml(text: &str) -> Result<Self, PricingError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, PricingError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PricingError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn price(&self, model_id: &str) -> Result<Price, PricingError> {
        self.models.get(model_id).copied().ok_or_else(|| PricingError::UnknownModel(model_id.to_string()))
    }
}

/// Undiscounted cost of `usage`, unrounded. Round for display only.
pub fn cost(usage: Usage, model_id: &str, pricing: &PricingTable) -> Result<Decimal, PricingError> {
    let price = pricing.price(model_id)?;
    let million = Decimal::from(1_000_000u64);
    Ok(Decimal::from(usage.input_tokens) / million * price.input + Decimal::from(usage.output_tokens) / million * price.output)
}
