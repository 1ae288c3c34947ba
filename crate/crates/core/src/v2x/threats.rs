//! Threat register scored as likelihood times worst-case damage.
//!
//! Likelihood and damage use a 1 to 5 scale. The shipped register treats
//! scores of [`TOP_TIER_MIN_SCORE`] and above as the top tier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TOP_TIER_MIN_SCORE: u32 = 20;

const DEFAULT_REGISTER: &str = include_str!("../../data/threats.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Damage {
    pub traffic_efficiency: u8,
    pub safety: u8,
    pub privacy: u8,
    pub authenticity: u8,
}

impl Damage {
    pub fn values(&self) -> [u8; 4] {
        [
            self.traffic_efficiency,
            self.safety,
            self.privacy,
            self.authenticity,
        ]
    }

    pub fn max(&self) -> u8 {
        self.values().into_iter().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatEntry {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub likelihood: u8,
    pub damage: Damage,
    #[serde(default)]
    pub score: u32,
    /// Executable scenario demonstrating the threat, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_scenario: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("threat {id}: {field} = {value} outside 1..=5")]
pub struct RangeError {
    pub id: String,
    pub field: &'static str,
    pub value: u8,
}

/// Computes scores and sorts by descending score, ties by id.
pub fn score_threats(register: &[ThreatEntry]) -> Result<Vec<ThreatEntry>, RangeError> {
    let mut out = Vec::with_capacity(register.len());
    for t in register {
        let fields = [
            ("likelihood", t.likelihood),
            ("traffic_efficiency", t.damage.traffic_efficiency),
            ("safety", t.damage.safety),
            ("privacy", t.damage.privacy),
            ("authenticity", t.damage.authenticity),
        ];
        if let Some(&(field, value)) = fields.iter().find(|(_, v)| !(1..=5).contains(v)) {
            return Err(RangeError {
                id: t.id.clone(),
                field,
                value,
            });
        }
        let mut t = t.clone();
        t.score = u32::from(t.likelihood) * u32::from(t.damage.max());
        out.push(t);
    }
    out.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    Ok(out)
}

/// The register shipped with the crate, unscored.
pub fn default_register() -> Vec<ThreatEntry> {
    serde_json::from_str(DEFAULT_REGISTER).expect("shipped register parses")
}

pub fn top_tier(scored: &[ThreatEntry]) -> Vec<&ThreatEntry> {
    scored
        .iter()
        .filter(|t| t.score >= TOP_TIER_MIN_SCORE)
        .collect()
}
