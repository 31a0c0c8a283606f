//! The run configuration document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use crate::phd::FilterConfig;
use crate::scenario::{preset, ScenarioSpec, SnrMode, SnrSchedule};

/// Schema version this build reads and writes.
pub const CONFIG_VERSION: u32 = 1;

/// Which algorithms a run executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Plain,
    Shrinkage,
    /// Both algorithms on identical truth and frames (common random
    /// numbers), for paired comparison.
    Both,
}

/// Scenario source: a bundled preset by name or an inline description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioRef {
    Preset(String),
    Inline(Box<ScenarioSpec>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub scenario: ScenarioRef,
    /// Force every target to this SNR (dB); used by the SNR sweep and the
    /// paired benchmark at a prescribed operating point.
    #[serde(default)]
    pub snr_override_db: Option<f64>,
    #[serde(default)]
    pub filter: FilterConfig,
    /// Target-loss level of the shrinkage optimization.
    #[serde(default = "default_beta")]
    pub shrinkage_beta: f64,
    #[serde(default = "default_trials")]
    pub mc_trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
}

fn default_beta() -> f64 {
    0.05
}

fn default_trials() -> usize {
    25
}

fn default_mode() -> RunMode {
    RunMode::Both
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self, HarnessError> {
        preset(name)?; // fail early on unknown names
        Ok(Self {
            version: CONFIG_VERSION,
            scenario: ScenarioRef::Preset(name.to_string()),
            snr_override_db: None,
            filter: FilterConfig::default(),
            shrinkage_beta: default_beta(),
            mc_trials: default_trials(),
            seed: 0,
            mode: default_mode(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |field: &str, reason: String| {
            Err(HarnessError::Config {
                field: field.to_string(),
                reason,
            })
        };
        if self.version != CONFIG_VERSION {
            return fail(
                "version",
                format!("unsupported version {} (expected {CONFIG_VERSION})", self.version),
            );
        }
        if self.mc_trials == 0 {
            return fail("mc_trials", "at least one trial is required".into());
        }
        if !(self.shrinkage_beta > 0.0 && self.shrinkage_beta < 1.0) {
            return fail(
                "shrinkage_beta",
                format!("must be in (0, 1), got {}", self.shrinkage_beta),
            );
        }
        if let Some(snr) = self.snr_override_db {
            if !snr.is_finite() {
                return fail("snr_override_db", format!("must be finite, got {snr}"));
            }
        }
        match &self.scenario {
            ScenarioRef::Preset(name) => {
                preset(name)?;
            }
            ScenarioRef::Inline(spec) => {
                spec.validate()?;
            }
        }
        Ok(())
    }

    /// Materialize the scenario, applying the SNR override if present.
    pub fn scenario_spec(&self) -> Result<ScenarioSpec, HarnessError> {
        let mut spec = match &self.scenario {
            ScenarioRef::Preset(name) => preset(name)?,
            ScenarioRef::Inline(spec) => (**spec).clone(),
        };
        if let Some(snr) = self.snr_override_db {
            for event in &mut spec.events {
                match event {
                    crate::scenario::ScenarioEvent::Birth { snr: s, .. }
                    | crate::scenario::ScenarioEvent::Spawn { snr: s, .. } => {
                        *s = SnrSchedule::constant(snr);
                    }
                }
            }
            spec.snr_mode = SnrMode::Known;
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_config_round_trips_through_json() {
        let config = RunConfig::from_preset("paper-6.2").unwrap();
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.mc_trials, config.mc_trials);
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let json = r#"{"version": 1, "scenario": {"preset": "paper-6.3"}}"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        config.validate().unwrap();
        assert_eq!(config.mc_trials, 25);
        assert_eq!(config.mode, RunMode::Both);
        assert_eq!(config.shrinkage_beta, 0.05);
    }

    #[test]
    fn validation_reports_field_paths() {
        let json = r#"{"version": 1, "scenario": {"preset": "paper-6.2"}, "mc_trials": 0}"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("mc_trials"), "{err}");
    }

    #[test]
    fn unknown_preset_is_rejected() {
        let json = r#"{"version": 1, "scenario": {"preset": "nope"}}"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{"version": 1, "scenario": {"preset": "paper-6.2"}, "trials": 3}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn snr_override_rewrites_schedules() {
        let mut config = RunConfig::from_preset("paper-6.4").unwrap();
        config.snr_override_db = Some(8.0);
        let spec = config.scenario_spec().unwrap();
        assert_eq!(spec.min_snr_db(), 8.0);
        assert_eq!(spec.snr_bracket_db(), (8.0, 8.0));
    }
}
