//! Run configuration: one TOML document covering every stage.

use pumpstation::agent::PpoConfig;
use pumpstation::forecast::GbtParams;
use pumpstation::harness::HarnessConfig;
use pumpstation::io::sha256_hex;
use pumpstation::plant::PlantConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub gbt: GbtParams,
    /// Explore the small documented hyperparameter grid instead of the
    /// fixed defaults (slower; median-quantile validation).
    pub grid_search: bool,
    /// Chronological share of the series used to fit models.
    pub train_fraction: f64,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self {
            gbt: GbtParams::default(),
            grid_search: false,
            train_fraction: 0.8,
        }
    }
}

/// The whole-run configuration. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; the plant seed is slaved to it at load time.
    pub seed: Option<u64>,
    pub plant: PlantConfig,
    pub forecast: ForecastSection,
    pub ppo: PpoConfig,
    pub harness: HarnessConfig,
}

impl RunConfig {
    /// Desk-scale defaults: 30 synthetic days, 2000 iterations.
    pub fn desk_scale() -> Self {
        let mut cfg = Self::default();
        cfg.ppo.iterations = 2000;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        cfg.apply_seed();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_toml_str(&text)
    }

    /// Propagates the master seed into the plant section.
    pub fn apply_seed(&mut self) {
        if let Some(seed) = self.seed {
            self.plant.seed = seed;
        } else {
            self.seed = Some(self.plant.seed);
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(self.plant.seed)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.plant.validate().map_err(|e| e.to_string())?;
        self.ppo.validate().map_err(|e| e.to_string())?;
        if !(0.5..=0.95).contains(&self.forecast.train_fraction) {
            return Err("forecast.train_fraction must be within [0.5, 0.95]".into());
        }
        if self.harness.min_episode_len < 21 {
            return Err("harness.min_episode_len must exceed the forecast horizon".into());
        }
        Ok(())
    }

    /// Hash of the effective configuration (canonical JSON of the parsed
    /// document, master seed applied).
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        sha256_hex(canonical.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::desk_scale();
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.config_hash(), {
            let mut c = cfg.clone();
            c.apply_seed();
            c.config_hash()
        });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("definitely_not_a_key = 1").unwrap_err();
        assert!(err.contains("parse error"), "{err}");
    }

    #[test]
    fn seed_override_changes_the_hash() {
        let mut a = RunConfig::desk_scale();
        a.apply_seed();
        let mut b = RunConfig::desk_scale();
        b.seed = Some(777);
        b.apply_seed();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(b.plant.seed, 777);
    }

    #[test]
    fn invalid_plant_section_fails_validation() {
        let text = "[plant]\nsetpoint_m = 7.9\n";
        assert!(RunConfig::from_toml_str(text).is_err());
    }
}
