use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{AgeMode, Diopter};

/// Lens operating temperature range, °C.
pub const OPERATING_TEMP_C: (f64, f64) = (0.0, 45.0);
/// Plausible sensor temperature band, °C. Outside it a sample is rejected.
pub const SANE_TEMP_C: (f64, f64) = (-20.0, 80.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub refresh_hz: f64,
    /// Accommodation time constant, seconds.
    pub tau_s: f64,
    /// Per-mode overrides of `tau_s`.
    pub tau_overrides: BTreeMap<AgeMode, f64>,
    pub debounce_len: usize,
    pub debounce_threshold: usize,
    pub debounce_bucket_mm: u32,
    pub temp_coeff_d_per_c: f64,
    pub temp_ref_c: f64,
    pub power_min: Diopter,
    pub power_max: Diopter,
    pub quantum_d: f64,
    pub dof_d: Diopter,
    /// Extra distance past the threshold required to leave the presbyopic
    /// region. Zero disables hysteresis.
    pub hysteresis_mm: u32,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            refresh_hz: 60.0,
            tau_s: 0.3,
            tau_overrides: BTreeMap::new(),
            debounce_len: 5,
            debounce_threshold: 3,
            debounce_bucket_mm: 10,
            temp_coeff_d_per_c: 0.01,
            temp_ref_c: 25.0,
            power_min: Diopter(-15.0),
            power_max: Diopter(15.0),
            quantum_d: 0.1,
            dof_d: Diopter(0.0),
            hysteresis_mm: 0,
        }
    }
}

impl ControllerConfig {
    pub fn tau_for(&self, mode: AgeMode) -> f64 {
        self.tau_overrides.get(&mode).copied().unwrap_or(self.tau_s)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("refresh_hz", self.refresh_hz)?;
        positive("tau_s", self.tau_s)?;
        for (mode, tau) in &self.tau_overrides {
            positive(&format!("tau_overrides.{mode}"), *tau)?;
        }
        positive("quantum_d", self.quantum_d)?;
        if self.debounce_len < 1 || self.debounce_threshold < 1 || self.debounce_bucket_mm < 1 {
            return Err(Error::validation("debounce parameters must be >= 1"));
        }
        if self.debounce_threshold > self.debounce_len {
            return Err(Error::validation(format!(
                "debounce_threshold {} exceeds debounce_len {}",
                self.debounce_threshold, self.debounce_len
            )));
        }
        if !self.temp_coeff_d_per_c.is_finite() || !self.temp_ref_c.is_finite() {
            return Err(Error::validation("temperature parameters must be finite"));
        }
        if !(self.power_min < self.power_max)
            || !self.power_min.is_sane()
            || !self.power_max.is_sane()
        {
            return Err(Error::validation(format!(
                "power range [{}, {}] is empty or not finite",
                self.power_min.0, self.power_max.0
            )));
        }
        for (name, limit) in [("power_min", self.power_min), ("power_max", self.power_max)] {
            let steps = limit.0 / self.quantum_d;
            if (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "{name} {} is not a multiple of quantum_d {}",
                    limit.0, self.quantum_d
                )));
            }
        }
        if !(self.dof_d.0 >= 0.0) || !self.dof_d.is_sane() {
            return Err(Error::validation("dof_d must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ControllerConfig::default().validate().unwrap();
    }

    #[test]
    fn invariants_enforced() {
        let bad = [
            ControllerConfig {
                debounce_threshold: 6,
                ..Default::default()
            },
            ControllerConfig {
                power_min: Diopter(15.0),
                ..Default::default()
            },
            ControllerConfig {
                quantum_d: 0.0,
                ..Default::default()
            },
            ControllerConfig {
                tau_s: -1.0,
                ..Default::default()
            },
            ControllerConfig {
                debounce_len: 0,
                debounce_threshold: 0,
                ..Default::default()
            },
            ControllerConfig {
                power_min: Diopter(-14.95),
                ..Default::default()
            },
            ControllerConfig {
                dof_d: Diopter(-0.1),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn tau_override() {
        let mut cfg = ControllerConfig::default();
        cfg.tau_overrides.insert(AgeMode::Sixties, 0.6);
        assert_eq!(cfg.tau_for(AgeMode::Sixties), 0.6);
        assert_eq!(cfg.tau_for(AgeMode::Forties), 0.3);
    }
}
