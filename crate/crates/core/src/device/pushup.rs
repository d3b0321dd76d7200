//! Push-up near point test rig.
//!
//! A text board starts far from the wearer and approaches in fixed steps.
//! Between steps it travels at `speed_mm_per_s`; at each step it pauses for
//! `hold_s` while the controller keeps running. A position counts as blurred
//! once the wearer reports blur for `sustain_ticks` consecutive sensor ticks.
//! The near point is the first (farthest) blurred position.

use serde::{Deserialize, Serialize};

use crate::controller::{Controller, ControllerConfig, SensorSample};
use crate::device::eye::EyePair;
use crate::device::tof::TofModel;
use crate::error::{Error, Result};
use crate::optics::{mode_threshold, AgeMode, Diopter};
use crate::wearer::WearerProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushUpConfig {
    pub start_mm: f64,
    pub speed_mm_per_s: f64,
    pub sustain_ticks: usize,
    /// Approach step between pauses.
    pub step_mm: f64,
    /// Pause at each step, seconds.
    pub hold_s: f64,
    pub ambient_temp_c: f64,
}

impl Default for PushUpConfig {
    fn default() -> Self {
        Self {
            start_mm: 1000.0,
            speed_mm_per_s: 20.0,
            sustain_ticks: 10,
            step_mm: 1.0,
            hold_s: 3.0,
            ambient_temp_c: 25.0,
        }
    }
}

impl PushUpConfig {
    pub fn validate(&self, tof: &TofModel) -> Result<()> {
        let farthest = mode_threshold(AgeMode::Sixties)? * 1000.0;
        if !(self.start_mm > farthest) || !self.start_mm.is_finite() {
            return Err(Error::validation(format!(
                "push-up start_mm {} must be beyond the farthest threshold {farthest:.1} mm",
                self.start_mm
            )));
        }
        if self.start_mm > tof.max_range_mm as f64 {
            return Err(Error::validation("push-up start_mm beyond sensor range"));
        }
        for (name, v) in [
            ("speed_mm_per_s", self.speed_mm_per_s),
            ("step_mm", self.step_mm),
            ("hold_s", self.hold_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("push-up {name} must be > 0")));
            }
        }
        if self.sustain_ticks < 1 {
            return Err(Error::validation("push-up sustain_ticks must be >= 1"));
        }
        if self.hold_ticks(tof) < self.sustain_ticks {
            return Err(Error::validation(
                "push-up hold_s is shorter than sustain_ticks",
            ));
        }
        Ok(())
    }

    fn hold_ticks(&self, tof: &TofModel) -> usize {
        (self.hold_s * tof.rate_hz).ceil() as usize
    }

    fn move_ticks(&self, tof: &TofModel) -> usize {
        ((self.step_mm / self.speed_mm_per_s * tof.rate_hz).ceil() as usize).max(1)
    }
}

/// Drives a controller, a virtual sensor and a virtual eye pair through the
/// push-up procedure.
#[derive(Debug, Clone)]
pub struct PushUpRig<'a> {
    pub controller: &'a ControllerConfig,
    pub tof: &'a TofModel,
    pub cfg: &'a PushUpConfig,
}

impl<'a> PushUpRig<'a> {
    pub fn new(controller: &'a ControllerConfig, tof: &'a TofModel, cfg: &'a PushUpConfig) -> Self {
        Self {
            controller,
            tof,
            cfg,
        }
    }

    /// Near point in mm, or `None` if the board reached the sensor's minimum
    /// range without sustained blur.
    ///
    /// The wearer's offsets are assumed to come from calibration against `eyes`.
    pub fn run(
        &self,
        eyes: &EyePair,
        wearer: &WearerProfile,
        mode: AgeMode,
    ) -> Result<Option<f64>> {
        self.tof.validate()?;
        self.cfg.validate(self.tof)?;
        eyes.left.validate()?;
        eyes.right.validate()?;

        let mut ctrl = Controller::new(self.controller.clone(), mode, wearer.clone())?;
        let mut sensor = self.tof.sensor();
        let period_ms = self.tof.period_ms();
        let temp = self.cfg.ambient_temp_c;
        let mut tick: u64 = 0;

        let mut tick_at = |ctrl: &mut Controller, board_mm: f64| -> Result<(Diopter, Diopter)> {
            let sample = SensorSample::new(
                (tick as f64 * period_ms).round() as i64,
                sensor.read(board_mm),
                temp,
            );
            tick += 1;
            let cmd = ctrl.step(&sample)?;
            Ok((
                delivered_power(cmd.power_left, temp, self.controller),
                delivered_power(cmd.power_right, temp, self.controller),
            ))
        };

        let min_mm = self.tof.min_range_mm as f64;
        let hold = self.cfg.hold_ticks(self.tof);
        let moving = self.cfg.move_ticks(self.tof);
        let step = self.cfg.step_mm;

        // settle at the start position before approaching
        for _ in 0..hold {
            tick_at(&mut ctrl, self.cfg.start_mm)?;
        }

        let mut k: u64 = 1;
        loop {
            let from = self.cfg.start_mm - (k - 1) as f64 * step;
            let pos = self.cfg.start_mm - k as f64 * step;
            if pos < min_mm {
                return Ok(None);
            }
            for j in 1..=moving {
                let board = from - step * j as f64 / moving as f64;
                tick_at(&mut ctrl, board)?;
            }
            let mut run = 0;
            for _ in 0..hold {
                let (l, r) = tick_at(&mut ctrl, pos)?;
                if eyes.sees_clearly(l, r, pos / 1000.0)? {
                    run = 0;
                } else {
                    run += 1;
                    if run >= self.cfg.sustain_ticks {
                        return Ok(Some(pos));
                    }
                }
            }
            k += 1;
        }
    }
}

/// Power a virtual lens actually delivers for a command at `temp_c`: the
/// thermal drift that the controller's compensation is meant to cancel.
pub fn delivered_power(command: Diopter, temp_c: f64, cfg: &ControllerConfig) -> Diopter {
    Diopter(command.0 - cfg.temp_coeff_d_per_c * (temp_c - cfg.temp_ref_c))
}

/// Steady-state near point for a calibrated wearer with zero depth of focus,
/// in meters, ignoring sensor and bucketing resolution.
///
/// Blur sets in where the demand first exceeds the amplitude: either the
/// wearer's natural near point, or below the mode threshold where the lens
/// delta eats into the amplitude.
pub fn closed_form_near_point(aoa: Diopter, delta: Diopter, threshold_m: Option<f64>) -> f64 {
    let natural = 1.0 / aoa.0;
    match threshold_m {
        None => natural,
        Some(t) => {
            let reduced = aoa.0 + delta.0;
            let shifted = if reduced <= 0.0 {
                t
            } else {
                t.min(1.0 / reduced)
            };
            natural.max(shifted)
        }
    }
}
