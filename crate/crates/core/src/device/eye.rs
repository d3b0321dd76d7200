use serde::{Deserialize, Serialize};

use crate::controller::{EyeSelection, CALIBRATION_DISTANCE_M};
use crate::error::{Error, Result};
use crate::optics::{accommodation_demand, defocus, Diopter};

/// A virtual eye behind one tunable lens.
///
/// `refraction_d` is the spectacle prescription (negative for myopes). A lens
/// of power `P` leaves a residual of `P - refraction_d`, so a calibrated
/// system that carries the prescription as its offset reduces to an
/// emmetropic eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EyeModel {
    pub refraction_d: Diopter,
    pub aoa_d: Diopter,
    pub dof_d: Diopter,
    pub pupil_mm: f64,
}

impl Default for EyeModel {
    fn default() -> Self {
        Self {
            refraction_d: Diopter::ZERO,
            aoa_d: Diopter(9.75),
            dof_d: Diopter::ZERO,
            pupil_mm: 4.0,
        }
    }
}

impl EyeModel {
    pub fn emmetrope(aoa: Diopter) -> Self {
        Self {
            aoa_d: aoa,
            ..Self::default()
        }
    }

    pub fn with_refraction(mut self, refraction: Diopter) -> Self {
        self.refraction_d = refraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aoa_d.0 > 0.0) || !self.aoa_d.is_sane() {
            return Err(Error::validation("eye aoa_d must be > 0"));
        }
        if !(self.dof_d.0 >= 0.0) || !self.dof_d.is_sane() {
            return Err(Error::validation("eye dof_d must be >= 0"));
        }
        if !(self.pupil_mm > 0.0) || !self.pupil_mm.is_finite() {
            return Err(Error::validation("eye pupil_mm must be > 0"));
        }
        if !self.refraction_d.is_sane() {
            return Err(Error::validation("eye refraction_d is not finite"));
        }
        Ok(())
    }

    /// Defocus left over when viewing `distance_m` through `lens_power`.
    ///
    /// Positive demand beyond the amplitude blurs near targets. Negative demand
    /// (target past the far point of an under-corrected myope) blurs far ones,
    /// since accommodation cannot relax below zero.
    pub fn defocus_through(&self, lens_power: Diopter, distance_m: f64) -> Result<Diopter> {
        let residual = lens_power - self.refraction_d;
        let demand = accommodation_demand(distance_m, residual)?;
        if demand.0 < 0.0 {
            Ok(Diopter((-demand.0 - self.dof_d.0).max(0.0)))
        } else {
            Ok(defocus(demand, self.aoa_d, self.dof_d))
        }
    }

    pub fn sees_clearly(&self, lens_power: Diopter, distance_m: f64) -> Result<bool> {
        Ok(self.defocus_through(lens_power, distance_m)?.0 == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyePair {
    pub left: EyeModel,
    pub right: EyeModel,
}

impl EyePair {
    pub fn both(eye: EyeModel) -> Self {
        Self {
            left: eye,
            right: eye,
        }
    }

    pub fn is_anisometropic(&self) -> bool {
        self.left.refraction_d != self.right.refraction_d
    }

    /// Binocular clarity: the target is clear if either eye resolves it.
    pub fn sees_clearly(
        &self,
        left_power: Diopter,
        right_power: Diopter,
        distance_m: f64,
    ) -> Result<bool> {
        Ok(self.left.sees_clearly(left_power, distance_m)?
            || self.right.sees_clearly(right_power, distance_m)?)
    }

    /// Clarity report at the calibration target, as a wearer would give it.
    pub fn calibration_probe(&self) -> impl FnMut(EyeSelection, Diopter) -> bool + '_ {
        move |eye, power| {
            let see = |e: &EyeModel| {
                e.sees_clearly(power, CALIBRATION_DISTANCE_M)
                    .unwrap_or(false)
            };
            match eye {
                EyeSelection::Left => see(&self.left),
                EyeSelection::Right => see(&self.right),
                EyeSelection::Both => see(&self.left) && see(&self.right),
            }
        }
    }
}
