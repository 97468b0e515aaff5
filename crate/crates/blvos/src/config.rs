//! Model-table configuration: defaults, JSON overrides, and configuration
//! hashing for reproducible reports.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::DelayTable;
use crate::error::Error;
use crate::imgbench::KernelConfig;
use crate::reliability::AgingParams;
use crate::volt::{EnergyModel, ShifterTable, VoltageModel};

/// All tunable model tables. Every section can be replaced from a JSON
/// override file; omitted sections keep their defaults.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub voltage: VoltageModel,
    pub delay: DelayTable,
    pub energy: EnergyModel,
    pub shifter: ShifterTable,
    pub aging: AgingParams,
    pub kernels: KernelConfig,
}

/// Partial override file: each present section replaces the default one.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub voltage: Option<VoltageModel>,
    pub delay: Option<DelayTable>,
    pub energy: Option<EnergyModel>,
    pub shifter: Option<ShifterTable>,
    pub aging: Option<AgingParams>,
    pub kernels: Option<KernelConfig>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.voltage.validate()?;
        self.delay.validate()?;
        self.energy.validate()?;
        self.shifter.validate(&self.voltage)?;
        self.aging.validate()?;
        self.kernels.validate()?;
        Ok(())
    }

    /// Defaults with the sections of an override file applied.
    pub fn with_overrides(overrides: ModelOverrides) -> Result<Self, Error> {
        let mut cfg = ModelConfig::default();
        if let Some(v) = overrides.voltage {
            cfg.voltage = v;
        }
        if let Some(v) = overrides.delay {
            cfg.delay = v;
        }
        if let Some(v) = overrides.energy {
            cfg.energy = v;
        }
        if let Some(v) = overrides.shifter {
            cfg.shifter = v;
        }
        if let Some(v) = overrides.aging {
            cfg.aging = v;
        }
        if let Some(v) = overrides.kernels {
            cfg.kernels = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let overrides: ModelOverrides = serde_json::from_str(&text)?;
        Self::with_overrides(overrides)
    }
}

/// SHA-256 of the canonical JSON serialization; used to tie tables and
/// reports to the exact configuration that produced them.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serialization cannot fail");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ModelConfig::default();
        let mut b = ModelConfig::default();
        assert_eq!(config_hash(&a), config_hash(&a));
        b.voltage.alpha = 1.4;
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    fn overrides_replace_sections() {
        let text = r#"{ "voltage": { "alpha": 1.5 } }"#;
        let overrides: ModelOverrides = serde_json::from_str(text).unwrap();
        let cfg = ModelConfig::with_overrides(overrides).unwrap();
        assert_eq!(cfg.voltage.alpha, 1.5);
        // Untouched sections keep defaults.
        assert_eq!(cfg.delay, DelayTable::default());
        // serde(default) inside the section: unspecified fields keep defaults.
        assert_eq!(cfg.voltage.v_nominal, 0.8);
    }

    #[test]
    fn unknown_sections_rejected() {
        let text = r#"{ "votlage": {} }"#;
        assert!(serde_json::from_str::<ModelOverrides>(text).is_err());
    }
}
