//! Corrective offset search against a fixed far target.
//!
//! The probe reports whether the target is clear through a given lens power.
//! For an eye that can accommodate, the clear powers form an interval whose
//! most-plus end sits at the eye's refraction plus the target's vergence.
//! The search locates that end, then removes the working-distance vergence.

use serde::{Deserialize, Serialize};

use super::{quantize_clamp, ControllerConfig};
use crate::error::{Error, Result};
use crate::optics::Diopter;

/// Calibration target distance, meters.
pub const CALIBRATION_DISTANCE_M: f64 = 1.0;

const REFINE_ITERATIONS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EyeSelection {
    Left,
    Right,
    /// Both lenses driven together by one dial.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offsets {
    pub left: Diopter,
    pub right: Diopter,
}

/// Finds the corrective offset for `eye`.
///
/// `probe(eye, power)` must answer whether the target at
/// [`CALIBRATION_DISTANCE_M`] looks clear through `power`.
pub fn calibrate<P>(probe: &mut P, eye: EyeSelection, cfg: &ControllerConfig) -> Result<Diopter>
where
    P: FnMut(EyeSelection, Diopter) -> bool,
{
    let q = cfg.quantum_d;
    let lo_step = (cfg.power_min.0 / q).round() as i64;
    let hi_step = (cfg.power_max.0 / q).round() as i64;
    let at = |s: i64| quantize_clamp(Diopter(s as f64 * q), cfg).0;

    // Most-plus clear power on the lens grid.
    let clear_step = (lo_step..=hi_step)
        .rev()
        .find(|&s| probe(eye, at(s)))
        .ok_or_else(|| {
            Error::CalibrationFailed(format!(
                "no power in [{}, {}] gives a clear target for {eye:?}",
                cfg.power_min.0, cfg.power_max.0
            ))
        })?;

    let mut clear = at(clear_step).0;
    if clear_step < hi_step {
        // Bisect the clear/blurred boundary between adjacent grid points.
        let mut blurred = at(clear_step + 1).0;
        for _ in 0..REFINE_ITERATIONS {
            let mid = 0.5 * (clear + blurred);
            if probe(eye, Diopter(mid)) {
                clear = mid;
            } else {
                blurred = mid;
            }
        }
    }

    let offset = Diopter(clear - 1.0 / CALIBRATION_DISTANCE_M);
    Ok(quantize_clamp(offset, cfg).0)
}

/// Calibrates both eyes, separately when the wearer reports anisometropia
/// and with a single shared power otherwise.
pub fn calibrate_pair<P>(
    probe: &mut P,
    anisometropic: bool,
    cfg: &ControllerConfig,
) -> Result<Offsets>
where
    P: FnMut(EyeSelection, Diopter) -> bool,
{
    if anisometropic {
        Ok(Offsets {
            left: calibrate(probe, EyeSelection::Left, cfg)?,
            right: calibrate(probe, EyeSelection::Right, cfg)?,
        })
    } else {
        let both = calibrate(probe, EyeSelection::Both, cfg)?;
        Ok(Offsets {
            left: both,
            right: both,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Minimal accommodating eye: clear iff 0 <= 1/d - (P - R) <= aoa.
    fn probe_for(refraction: f64, aoa: f64) -> impl FnMut(EyeSelection, Diopter) -> bool {
        move |_, p| {
            let demand = 1.0 / CALIBRATION_DISTANCE_M - (p.0 - refraction);
            (0.0..=aoa).contains(&demand)
        }
    }

    #[test]
    fn emmetrope_gets_zero() {
        let cfg = ControllerConfig::default();
        let off = calibrate(&mut probe_for(0.0, 9.75), EyeSelection::Both, &cfg).unwrap();
        assert_eq!(off, Diopter(0.0));
    }

    #[test]
    fn myope_recovered() {
        let cfg = ControllerConfig::default();
        let off = calibrate(&mut probe_for(-3.0, 9.75), EyeSelection::Both, &cfg).unwrap();
        assert!((off.0 + 3.0).abs() <= 0.1, "{off}");
    }

    #[test]
    fn hyperope_recovered_despite_accommodation() {
        let cfg = ControllerConfig::default();
        let off = calibrate(&mut probe_for(2.25, 9.75), EyeSelection::Both, &cfg).unwrap();
        assert!((off.0 - 2.25).abs() <= 0.1, "{off}");
    }

    #[test]
    fn anisometropic_pair() {
        let cfg = ControllerConfig::default();
        let mut left = probe_for(-2.0, 8.0);
        let mut right = probe_for(-3.5, 8.0);
        let mut probe = |eye: EyeSelection, p: Diopter| match eye {
            EyeSelection::Left => left(eye, p),
            EyeSelection::Right => right(eye, p),
            EyeSelection::Both => left(eye, p) && right(eye, p),
        };
        let off = calibrate_pair(&mut probe, true, &cfg).unwrap();
        assert!((off.left.0 + 2.0).abs() <= 0.1);
        assert!((off.right.0 + 3.5).abs() <= 0.1);
    }

    #[test]
    fn never_clear_fails() {
        let cfg = ControllerConfig::default();
        let mut probe = |_: EyeSelection, _: Diopter| false;
        assert!(matches!(
            calibrate(&mut probe, EyeSelection::Left, &cfg),
            Err(Error::CalibrationFailed(_))
        ));
    }
}
