//! Run configuration file (TOML).

use std::path::Path;

use agelens_core::controller::ControllerConfig;
use agelens_core::device::{EyeModel, EyePair, PushUpConfig, StudyConfig, TofModel};
use agelens_core::optics::{duane_amplitude, AccommodationModel};
use agelens_core::render::RenderParams;
use agelens_core::wearer::DEFAULT_PD_MM;
use agelens_core::{AgeMode, Diopter, Error, Result, WearerProfile};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WearerSection {
    pub age_years: f64,
    pub offset_left: f64,
    pub offset_right: f64,
    /// Defaults to the age curve when absent.
    pub aoa: Option<f64>,
    pub pd_mm: f64,
}

impl Default for WearerSection {
    fn default() -> Self {
        Self {
            age_years: 20.0,
            offset_left: 0.0,
            offset_right: 0.0,
            aoa: None,
            pd_mm: DEFAULT_PD_MM,
        }
    }
}

/// Virtual eyes used by `calibrate`; `render` uses the left one.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EyeSection {
    pub refraction_left: f64,
    pub refraction_right: f64,
    pub dof_d: f64,
}

impl Default for EyeSection {
    fn default() -> Self {
        Self {
            refraction_left: 0.0,
            refraction_right: 0.0,
            dof_d: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Single mode to run; all modes when absent (push-up only).
    pub mode: Option<AgeMode>,
    pub wearer: WearerSection,
    pub eye: EyeSection,
    pub controller: ControllerConfig,
    pub tof: TofModel,
    pub pushup: PushUpConfig,
    pub study: StudyConfig,
    pub render: RenderParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20250,
            mode: None,
            wearer: WearerSection::default(),
            eye: EyeSection::default(),
            controller: ControllerConfig::default(),
            tof: TofModel::default(),
            pushup: PushUpConfig::default(),
            study: StudyConfig::default(),
            render: RenderParams::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Self::parse(&text)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn wearer(&self) -> Result<WearerProfile> {
        let w = &self.wearer;
        let aoa = match w.aoa {
            Some(a) => Diopter(a),
            None => {
                let model = AccommodationModel::duane();
                let (lo, hi) = model.age_range();
                duane_amplitude(w.age_years.clamp(lo, hi), &model)?
            }
        };
        let profile = WearerProfile {
            age_years: w.age_years,
            offset_left: Diopter(w.offset_left),
            offset_right: Diopter(w.offset_right),
            aoa,
            pd_mm: w.pd_mm,
        };
        profile.validate(self.controller.power_min, self.controller.power_max)?;
        Ok(profile)
    }

    /// Calibrated eyes for the wearer: refraction equal to the stored offsets.
    pub fn calibrated_eyes(&self, wearer: &WearerProfile) -> EyePair {
        let eye = |refraction| EyeModel {
            refraction_d: refraction,
            aoa_d: wearer.aoa,
            dof_d: Diopter(self.eye.dof_d),
            pupil_mm: self.render.pupil_mm,
        };
        EyePair {
            left: eye(wearer.offset_left),
            right: eye(wearer.offset_right),
        }
    }

    /// Eyes with the configured prescriptions, for calibration.
    pub fn prescribed_eyes(&self, wearer: &WearerProfile) -> EyePair {
        let eye = |refraction| EyeModel {
            refraction_d: Diopter(refraction),
            aoa_d: wearer.aoa,
            dof_d: Diopter(self.eye.dof_d),
            pupil_mm: self.render.pupil_mm,
        };
        EyePair {
            left: eye(self.eye.refraction_left),
            right: eye(self.eye.refraction_right),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.controller.validate()?;
        self.tof.validate()?;
        self.pushup.validate(&self.tof)?;
        self.study.validate()?;
        self.render.validate()?;
        let wearer = self.wearer()?;
        for eyes in [self.calibrated_eyes(&wearer), self.prescribed_eyes(&wearer)] {
            eyes.left.validate()?;
            eyes.right.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        let c = RunConfig::parse("").unwrap();
        c.validate().unwrap();
        assert_eq!(c.wearer().unwrap().aoa, Diopter(9.75));
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::parse(
            r#"
seed = 3
mode = "50s"
[wearer]
age_years = 31
offset_left = -2.0
offset_right = -2.5
[controller]
tau_s = 0.5
[controller.tau_overrides]
"60s" = 0.8
[tof]
noise_sigma_mm = 0.0
[render]
kernel = "disc"
"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.mode, Some(AgeMode::Fifties));
        assert_eq!(c.controller.tau_for(AgeMode::Sixties), 0.8);
        assert_eq!(c.wearer().unwrap().offset_right, Diopter(-2.5));
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(matches!(
            RunConfig::parse("[wearer]\nage = 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        let c = RunConfig::parse("[wearer]\nage_years = 45\n").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::parse("[study]\nn = 0\n").unwrap();
        assert!(c.validate().is_err());
    }
}
