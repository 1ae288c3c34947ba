//! Scenario configuration: network, driver parameters, signal program,
//! demand and run length.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{DriverParams, ScanConfig, DEFAULT_LERP_NORM_M};
use crate::model::{validate_network, NetworkIoError, ParticipantClass, RoadNetwork};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Network(#[from] NetworkIoError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorConfig {
    pub v_mu: f64,
    pub v_sigma: f64,
    pub a: f64,
    pub a_b: f64,
    #[serde(default = "default_margin")]
    pub d_margin: f64,
    #[serde(default = "default_lookahead")]
    pub lookahead_m: f64,
    #[serde(default = "default_norm")]
    pub lerp_norm_m: f64,
    /// Overrides the scenario step when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

fn default_margin() -> f64 {
    2.0
}
fn default_lookahead() -> f64 {
    80.0
}
fn default_norm() -> f64 {
    DEFAULT_LERP_NORM_M
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        Self {
            v_mu: 13.9,
            v_sigma: 1.5,
            a: 2.0,
            a_b: 4.0,
            d_margin: default_margin(),
            lookahead_m: default_lookahead(),
            lerp_norm_m: default_norm(),
            dt: None,
        }
    }
}

impl BehaviorConfig {
    pub fn driver(&self, xi: f64) -> DriverParams {
        DriverParams {
            v_mu: self.v_mu,
            v_sigma: self.v_sigma,
            a: self.a,
            a_b: self.a_b,
            xi,
        }
    }

    pub fn scan(&self) -> ScanConfig {
        ScanConfig {
            d_margin: self.d_margin,
            lookahead_m: self.lookahead_m,
        }
    }
}

/// One traffic stream: a lane route, a participant class and either a
/// Poisson rate or explicit spawn times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandEntry {
    pub route: Vec<String>,
    pub class: ParticipantClass,
    #[serde(default)]
    pub rate_per_h: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Walking or riding speed for VRU streams (m/s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

/// Recorded alongside results; not physically modeled.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    #[serde(default)]
    pub time_of_day: String,
    #[serde(default)]
    pub weather: String,
    #[serde(default)]
    pub season: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Network file, relative to the config file.
    pub network: String,
    #[serde(default)]
    pub behavior: BehaviorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_program: Option<String>,
    #[serde(default)]
    pub demand: Vec<DemandEntry>,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub environment: Environment,
    /// Distance ahead of a signalized crossing at which a VRU places a call.
    #[serde(default = "default_call_range")]
    pub vru_call_range_m: f64,
}

fn default_dt() -> f64 {
    0.05
}
fn default_call_range() -> f64 {
    10.0
}

impl ScenarioConfig {
    pub fn effective_dt(&self) -> f64 {
        self.behavior.dt.unwrap_or(self.dt)
    }

    pub fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        let dt = self.effective_dt();
        if !(dt > 0.0 && dt.is_finite()) {
            return bad(format!("dt must be > 0, got {dt}"));
        }
        self.behavior
            .driver(0.0)
            .check()
            .map_err(ScenarioError::Invalid)?;
        if self.behavior.v_mu - self.behavior.v_sigma <= 0.0 {
            return bad("v_mu - v_sigma must be > 0 so every set speed is positive".into());
        }
        if !(self.behavior.d_margin >= 0.0
            && self.behavior.lookahead_m > 0.0
            && self.behavior.lerp_norm_m > 0.0)
        {
            return bad("d_margin must be >= 0, lookahead_m and lerp_norm_m > 0".into());
        }
        for (i, d) in self.demand.iter().enumerate() {
            if !(d.rate_per_h >= 0.0 && d.rate_per_h.is_finite()) {
                return bad(format!("demand {i}: spawn rate must be >= 0"));
            }
            if d.route.is_empty() {
                return bad(format!("demand {i}: empty route"));
            }
            if d.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return bad(format!("demand {i}: spawn times must be >= 0"));
            }
            if let Some(v) = d.speed {
                if !(v > 0.0) {
                    return bad(format!("demand {i}: speed must be > 0"));
                }
            }
        }
        Ok(())
    }
}

/// A config with its network resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub network: RoadNetwork,
}

impl Scenario {
    pub fn new(config: ScenarioConfig, network: RoadNetwork) -> Result<Self, ScenarioError> {
        config.check()?;
        let report = validate_network(&network);
        if !report.is_empty() {
            let msgs: Vec<String> = report.findings.iter().map(|f| f.to_string()).collect();
            return Err(ScenarioError::Invalid(format!(
                "network: {}",
                msgs.join("; ")
            )));
        }
        if let Some(id) = &config.signal_program {
            if network.program(id).is_none() {
                return Err(ScenarioError::Invalid(format!(
                    "unknown signal program {id}"
                )));
            }
        }
        Ok(Self { config, network })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.into(),
            source,
        })?;
        let config: ScenarioConfig =
            serde_json::from_str(&text).map_err(|source| ScenarioError::Parse {
                path: path.into(),
                source,
            })?;
        let net_path = path
            .parent()
            .unwrap_or(Path::new("."))
            .join(&config.network);
        let network = RoadNetwork::load(&net_path)?;
        Self::new(config, network)
    }
}
