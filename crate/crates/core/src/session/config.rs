//! Session configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifecycle::{StochasticProfile, TraversalPlan, DEFAULT_CONFIRMATIONS};
use crate::mock::{BugFlags, MockConfig, Strategy};
use crate::snapshot::{FieldRule, FieldRuleSet, SourceSpec, WaitWindow};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Traverse,
    Soak,
    Replay,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Traverse => "traverse",
            Mode::Soak => "soak",
            Mode::Replay => "replay",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "traverse" => Ok(Mode::Traverse),
            "soak" => Ok(Mode::Soak),
            "replay" => Ok(Mode::Replay),
            _ => Err(format!("unknown mode `{s}` (traverse, soak, replay)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    #[default]
    Simulated,
    Wall,
}

/// The in-process DApp: a named preset with optional overrides.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DappSpec {
    pub preset: Option<String>,
    pub name: Option<String>,
    pub strategy: Option<Strategy>,
    pub bugs: Option<BugFlags>,
    pub poll_every: Option<u64>,
    pub restart_after_execute: Option<bool>,
    pub tags: Option<Vec<String>>,
}

impl DappSpec {
    pub fn preset(name: &str) -> Self {
        DappSpec { preset: Some(name.into()), ..Default::default() }
    }

    pub fn resolve(&self, confirmations: u64) -> Result<MockConfig, ConfigError> {
        let mut cfg = match &self.preset {
            Some(p) => {
                MockConfig::preset(p).ok_or_else(|| ConfigError::Invalid(format!("unknown dapp preset `{p}`")))?
            }
            None => MockConfig::default(),
        };
        if let Some(v) = &self.name {
            cfg.name = v.clone();
        }
        if let Some(v) = self.strategy {
            cfg.strategy = v;
        }
        if let Some(v) = &self.bugs {
            cfg.bugs = v.clone();
        }
        if let Some(v) = self.poll_every {
            cfg.poll_every = v;
        }
        if let Some(v) = self.restart_after_execute {
            cfg.restart_after_execute = v;
        }
        if let Some(v) = &self.tags {
            if v.is_empty() {
                return Err(ConfigError::Invalid("dapp.tags must not be empty".into()));
            }
            cfg.tags = v.clone();
        }
        cfg.confirmations = confirmations;
        Ok(cfg)
    }
}

fn default_soak_ticks() -> u64 {
    1_000
}

fn default_submit_probability() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoakConfig {
    #[serde(default = "default_soak_ticks")]
    pub ticks: u64,
    /// Chance per tick that the DApp sends a new transaction.
    #[serde(default = "default_submit_probability")]
    pub submit_probability: f64,
}

impl Default for SoakConfig {
    fn default() -> Self {
        SoakConfig { ticks: default_soak_ticks(), submit_probability: default_submit_probability() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    #[serde(default = "default_http")]
    pub http: String,
    #[serde(default = "default_stream")]
    pub stream: String,
    /// Stop after this many transactions have been traversed.
    pub max_txs: Option<usize>,
    /// Stop after this long without a new transaction.
    pub idle_timeout_ms: Option<u64>,
    /// How long to keep retrying snapshot sources before giving up.
    #[serde(default = "default_probe_ms")]
    pub source_probe_ms: u64,
    /// Tags the attached DApp declares, for coverage.
    #[serde(default)]
    pub tags: Vec<String>,
}

fn default_http() -> String {
    "127.0.0.1:8545".into()
}

fn default_stream() -> String {
    "127.0.0.1:8546".into()
}

fn default_probe_ms() -> u64 {
    10_000
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            http: default_http(),
            stream: default_stream(),
            max_txs: None,
            idle_timeout_ms: None,
            source_probe_ms: default_probe_ms(),
            tags: Vec::new(),
        }
    }
}

fn default_confirmations() -> u64 {
    DEFAULT_CONFIRMATIONS
}

fn default_txs() -> usize {
    10
}

fn default_repetitions() -> u32 {
    1
}

fn default_rules() -> FieldRuleSet {
    FieldRuleSet::new(vec![FieldRule::exclude("meta.**")]).expect("static rule")
}

fn default_sources() -> Vec<SourceSpec> {
    vec![SourceSpec::Mock]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_confirmations")]
    pub confirmations: u64,
    #[serde(default)]
    pub clock: ClockKind,
    #[serde(default)]
    pub wait: WaitWindow,
    #[serde(default = "default_rules")]
    pub rules: FieldRuleSet,
    #[serde(default = "default_sources")]
    pub sources: Vec<SourceSpec>,
    /// The in-process DApp driving the session. Absent for wire sessions.
    #[serde(default)]
    pub dapp: Option<DappSpec>,
    /// Transactions per repetition in in-process traverse sessions.
    #[serde(default = "default_txs")]
    pub txs: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub plan: Option<TraversalPlan>,
    #[serde(default)]
    pub strict_assertion2: bool,
    #[serde(default)]
    pub stochastic: Option<StochasticProfile>,
    #[serde(default)]
    pub soak: SoakConfig,
    #[serde(default)]
    pub serve: ServeConfig,
    /// Where `run` writes when `--out` is not given.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SessionConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn plan(&self) -> TraversalPlan {
        self.plan.clone().unwrap_or_else(TraversalPlan::bug_exposing)
    }

    /// True when the DApp runs inside the harness.
    pub fn in_process(&self) -> bool {
        self.dapp.is_some()
    }

    pub fn mock_config(&self) -> Result<Option<MockConfig>, ConfigError> {
        self.dapp.as_ref().map(|d| d.resolve(self.confirmations)).transpose()
    }

    /// Tags the DApp declares, for coverage.
    pub fn declared_tags(&self) -> Vec<String> {
        match self.mock_config() {
            Ok(Some(m)) => m.tags,
            _ => self.serve.tags.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.sources.is_empty() {
            return bad("at least one snapshot source is required");
        }
        if self.confirmations == 0 {
            return bad("confirmations must be at least 1");
        }
        match (self.clock, self.wait) {
            (ClockKind::Simulated, WaitWindow::WallMs(_)) => {
                return bad("a simulated clock needs `wait = { ticks = n }`")
            }
            (ClockKind::Wall, WaitWindow::Ticks(_)) => return bad("a wall clock needs `wait = { wall_ms = n }`"),
            _ => {}
        }
        let mock = self.mock_config()?;
        let has_mock_source = self.sources.iter().any(|s| matches!(s, SourceSpec::Mock));
        if has_mock_source && mock.is_none() {
            return bad("a `mock` source needs a [dapp] section");
        }
        if self.mode == Mode::Soak {
            let Some(profile) = &self.stochastic else {
                return bad("soak mode requires a [stochastic] profile");
            };
            profile.validate().map_err(ConfigError::Invalid)?;
            if !(0.0..=1.0).contains(&self.soak.submit_probability) {
                return bad("soak.submit_probability must lie in [0, 1]");
            }
            if mock.is_none() {
                return bad("soak mode runs against an in-process dapp");
            }
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if mock.is_none() && self.clock != ClockKind::Wall {
            return bad("wire sessions use the wall clock");
        }
        Ok(())
    }
}
