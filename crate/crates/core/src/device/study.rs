//! Synthetic-population push-up study.
//!
//! Draws wearers around a mean age, calibrates each against its virtual eyes,
//! measures the near point in every condition on the push-up rig and
//! summarizes each condition by its median.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{calibrate_pair, ControllerConfig};
use crate::device::eye::{EyeModel, EyePair};
use crate::device::pushup::{PushUpConfig, PushUpRig};
use crate::device::tof::TofModel;
use crate::error::{Error, Result};
use crate::optics::{duane_amplitude, AccommodationModel, AgeMode, Diopter};
use crate::wearer::{WearerProfile, DEFAULT_PD_MM};

/// Measured medians (mm) from a 19-person push-up study, per condition.
pub const REFERENCE_MEDIANS_MM: [(AgeMode, f64); 4] = [
    (AgeMode::Baseline, 132.0),
    (AgeMode::Forties, 233.0),
    (AgeMode::Fifties, 378.0),
    (AgeMode::Sixties, 782.0),
];

/// Relative band around the reference medians.
pub const DEFAULT_MEDIAN_TOLERANCE: f64 = 0.12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n: usize,
    pub age_mean: f64,
    pub age_sd: f64,
    pub age_min: f64,
    pub age_max: f64,
    /// Individual spread of amplitude around the age curve, D.
    pub aoa_jitter_sd: f64,
    /// Share of wearers with myopia.
    pub myope_fraction: f64,
    /// Myopic prescriptions are drawn uniformly from this range, D.
    pub myopia_range: (f64, f64),
    /// Share of myopes whose eyes differ.
    pub anisometropic_fraction: f64,
    /// Largest left/right difference for anisometropic wearers, D.
    pub max_anisometropia: f64,
    pub tolerance: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n: 19,
            age_mean: 27.8,
            age_sd: 4.1,
            age_min: 18.0,
            age_max: 35.0,
            aoa_jitter_sd: 0.5,
            myope_fraction: 0.3,
            myopia_range: (-6.0, -0.5),
            anisometropic_fraction: 0.2,
            max_anisometropia: 1.5,
            tolerance: DEFAULT_MEDIAN_TOLERANCE,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::validation("study n must be >= 1"));
        }
        if !(self.age_sd >= 0.0) || !(self.aoa_jitter_sd >= 0.0) {
            return Err(Error::validation("study standard deviations must be >= 0"));
        }
        if !(18.0 <= self.age_min && self.age_min <= self.age_max && self.age_max < 40.0) {
            return Err(Error::validation(
                "study age range must lie within [18, 40)",
            ));
        }
        if !self.age_mean.is_finite() {
            return Err(Error::validation("study age_mean must be finite"));
        }
        for (name, p) in [
            ("myope_fraction", self.myope_fraction),
            ("anisometropic_fraction", self.anisometropic_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!("study {name} must be in [0, 1]")));
            }
        }
        let (lo, hi) = self.myopia_range;
        if !(lo <= hi && hi <= 0.0 && lo >= -12.0) {
            return Err(Error::validation(
                "study myopia_range must lie within [-12, 0]",
            ));
        }
        if !(self.max_anisometropia >= 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::validation(
                "study max_anisometropia/tolerance out of range",
            ));
        }
        Ok(())
    }
}

/// One drawn participant before measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub age_years: f64,
    pub aoa: Diopter,
    pub refraction_left: Diopter,
    pub refraction_right: Diopter,
    pub sensor_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantResult {
    pub participant: Participant,
    pub offsets: (Diopter, Diopter),
    /// Near point per condition in [`AgeMode::ALL`] order.
    pub near_points_mm: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub mode: AgeMode,
    pub median_mm: Option<f64>,
    pub no_onset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub participants: Vec<ParticipantResult>,
    pub conditions: Vec<ConditionSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianComparison {
    pub mode: AgeMode,
    pub reference_mm: f64,
    pub simulated_mm: Option<f64>,
    pub relative_error: Option<f64>,
    pub pass: bool,
}

/// Draws the population. Deterministic in `seed`.
pub fn draw_participants(cfg: &StudyConfig, seed: u64) -> Result<Vec<Participant>> {
    cfg.validate()?;
    let model = AccommodationModel::duane();
    let (model_lo, model_hi) = model.age_range();
    let age_dist =
        Normal::new(cfg.age_mean, cfg.age_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let jitter_dist =
        Normal::new(0.0, cfg.aoa_jitter_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let quarter = |d: f64| (d * 4.0).round() / 4.0;
    (0..cfg.n)
        .map(|_| {
            let age = age_dist.sample(&mut rng).clamp(cfg.age_min, cfg.age_max);
            let jitter = jitter_dist.sample(&mut rng);
            // the age curve starts at 20; younger wearers take its first anchor
            let aoa = duane_amplitude(age.clamp(model_lo, model_hi), &model)?.0 + jitter;
            let aoa = Diopter(aoa.max(0.5));

            let (mut left, mut right) = (0.0, 0.0);
            if rng.random::<f64>() < cfg.myope_fraction {
                let (lo, hi) = cfg.myopia_range;
                left = quarter(rng.random_range(lo..=hi));
                right = left;
                if rng.random::<f64>() < cfg.anisometropic_fraction {
                    let diff = quarter(rng.random_range(0.0..=cfg.max_anisometropia));
                    right = (left - diff).max(-12.0);
                }
            }
            Ok(Participant {
                age_years: age,
                aoa,
                refraction_left: Diopter(left),
                refraction_right: Diopter(right),
                sensor_seed: rng.random(),
            })
        })
        .collect()
}

/// Calibrates and measures one participant in every condition.
pub fn measure_participant(
    p: &Participant,
    controller: &ControllerConfig,
    tof: &TofModel,
    pushup: &PushUpConfig,
) -> Result<ParticipantResult> {
    let eye = |refraction| EyeModel {
        refraction_d: refraction,
        aoa_d: p.aoa,
        dof_d: controller.dof_d,
        ..EyeModel::default()
    };
    let eyes = EyePair {
        left: eye(p.refraction_left),
        right: eye(p.refraction_right),
    };
    let offsets = calibrate_pair(
        &mut eyes.calibration_probe(),
        eyes.is_anisometropic(),
        controller,
    )?;
    let wearer = WearerProfile {
        age_years: p.age_years,
        offset_left: offsets.left,
        offset_right: offsets.right,
        aoa: p.aoa,
        pd_mm: DEFAULT_PD_MM,
    };

    let mut near_points_mm = [None; 4];
    for (i, mode) in AgeMode::ALL.into_iter().enumerate() {
        let tof = tof.clone().with_seed(p.sensor_seed.wrapping_add(i as u64));
        near_points_mm[i] = PushUpRig::new(controller, &tof, pushup).run(&eyes, &wearer, mode)?;
    }
    Ok(ParticipantResult {
        participant: p.clone(),
        offsets: (offsets.left, offsets.right),
        near_points_mm,
    })
}

pub fn run_study(
    cfg: &StudyConfig,
    seed: u64,
    controller: &ControllerConfig,
    tof: &TofModel,
    pushup: &PushUpConfig,
) -> Result<StudyReport> {
    controller.validate()?;
    tof.validate()?;
    pushup.validate(tof)?;
    let participants = draw_participants(cfg, seed)?;
    let results = participants
        .par_iter()
        .map(|p| measure_participant(p, controller, tof, pushup))
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyReport {
        conditions: summarize(&results),
        participants: results,
    })
}

pub fn summarize(results: &[ParticipantResult]) -> Vec<ConditionSummary> {
    AgeMode::ALL
        .iter()
        .enumerate()
        .map(|(i, &mode)| {
            let values: Vec<f64> = results.iter().filter_map(|r| r.near_points_mm[i]).collect();
            ConditionSummary {
                mode,
                median_mm: median(&values),
                no_onset: results.len() - values.len(),
            }
        })
        .collect()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

pub fn compare_to_reference(report: &StudyReport, tolerance: f64) -> Vec<MedianComparison> {
    REFERENCE_MEDIANS_MM
        .iter()
        .map(|&(mode, reference_mm)| {
            let simulated_mm = report
                .conditions
                .iter()
                .find(|c| c.mode == mode)
                .and_then(|c| c.median_mm);
            let relative_error = simulated_mm.map(|s| (s - reference_mm).abs() / reference_mm);
            MedianComparison {
                mode,
                reference_mm,
                simulated_mm,
                relative_error,
                pass: relative_error.is_some_and(|e| e <= tolerance),
            }
        })
        .collect()
}
