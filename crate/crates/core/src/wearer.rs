use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{
    duane_amplitude, AccommodationModel, AgeBracket, Diopter, DIOPTER_SANITY_BOUND,
};

pub const PD_RANGE_MM: (f64, f64) = (55.0, 70.0);
pub const DEFAULT_PD_MM: f64 = 63.0;

/// The person wearing the lenses.
///
/// Offsets are the per-eye corrective powers found at calibration and added
/// to every subsequent command. `pd_mm` is carried as metadata only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WearerProfile {
    pub age_years: f64,
    pub offset_left: Diopter,
    pub offset_right: Diopter,
    pub aoa: Diopter,
    pub pd_mm: f64,
}

impl WearerProfile {
    /// Emmetropic wearer whose amplitude follows the accommodation model.
    /// Ages outside the model's anchors take the nearest anchor's amplitude.
    pub fn emmetrope(age_years: f64) -> Result<Self> {
        let model = AccommodationModel::duane();
        let (lo, hi) = model.age_range();
        let aoa = duane_amplitude(age_years.clamp(lo, hi), &model)?;
        Ok(Self {
            age_years,
            offset_left: Diopter::ZERO,
            offset_right: Diopter::ZERO,
            aoa,
            pd_mm: DEFAULT_PD_MM,
        })
    }

    pub fn with_offsets(mut self, left: Diopter, right: Diopter) -> Self {
        self.offset_left = left;
        self.offset_right = right;
        self
    }

    pub fn with_aoa(mut self, aoa: Diopter) -> Self {
        self.aoa = aoa;
        self
    }

    pub fn bracket(&self) -> Result<AgeBracket> {
        AgeBracket::from_age(self.age_years)
    }

    pub fn validate(&self, power_min: Diopter, power_max: Diopter) -> Result<()> {
        self.bracket()?;
        if !(self.aoa.0 > 0.0) || !self.aoa.is_sane() {
            return Err(Error::validation(format!(
                "wearer aoa must be in (0, {DIOPTER_SANITY_BOUND}] D, got {}",
                self.aoa.0
            )));
        }
        for (side, off) in [("left", self.offset_left), ("right", self.offset_right)] {
            if !off.0.is_finite() || off < power_min || off > power_max {
                return Err(Error::validation(format!(
                    "{side} offset {} outside lens range [{}, {}]",
                    off.0, power_min.0, power_max.0
                )));
            }
        }
        let (lo, hi) = PD_RANGE_MM;
        if !(lo..=hi).contains(&self.pd_mm) {
            return Err(Error::validation(format!(
                "pupillary distance {} mm outside [{lo}, {hi}]",
                self.pd_mm
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emmetrope_defaults() {
        let w = WearerProfile::emmetrope(20.0).unwrap();
        assert_eq!(w.aoa, Diopter(9.75));
        assert_eq!(w.bracket().unwrap(), AgeBracket::Twenties);
        w.validate(Diopter(-15.0), Diopter(15.0)).unwrap();
        // below the youngest anchor
        let w = WearerProfile::emmetrope(18.0).unwrap();
        assert_eq!(w.aoa, Diopter(9.75));
        w.validate(Diopter(-15.0), Diopter(15.0)).unwrap();
        assert!(WearerProfile::emmetrope(f64::NAN).is_err());
    }

    #[test]
    fn validation_catches_bad_fields() {
        let lim = (Diopter(-15.0), Diopter(15.0));
        let base = WearerProfile::emmetrope(25.0).unwrap();

        let w = base.clone().with_offsets(Diopter(-16.0), Diopter(0.0));
        assert!(w.validate(lim.0, lim.1).is_err());

        let w = base.clone().with_aoa(Diopter(0.0));
        assert!(w.validate(lim.0, lim.1).is_err());

        let mut w = base.clone();
        w.pd_mm = 80.0;
        assert!(w.validate(lim.0, lim.1).is_err());

        let mut w = base;
        w.age_years = 45.0;
        assert!(w.validate(lim.0, lim.1).is_err());
    }
}
