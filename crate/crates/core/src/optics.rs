//! Accommodation and vergence arithmetic.
//!
//! Sign convention: myopic prescriptions and simulation deltas are negative
//! diopters, lens power adds to the eye's optical system, and the
//! accommodation demand placed on a corrected eye looking through a lens of
//! power `P` at distance `d` is `1/d - P`.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sanity bound on any diopter value the program produces.
pub const DIOPTER_SANITY_BOUND: f64 = 100.0;

/// Amplitude of accommodation assumed for a wearer in their twenties.
pub const TWENTIES_REFERENCE_AOA: f64 = 9.75;

/// Optical power in diopters (reciprocal meters).
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Diopter(pub f64);

impl Diopter {
    pub const ZERO: Diopter = Diopter(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> Diopter {
        Diopter(self.0.abs())
    }

    /// Finite and within the sanity bound.
    pub fn is_sane(self) -> bool {
        self.0.is_finite() && self.0.abs() <= DIOPTER_SANITY_BOUND
    }
}

impl From<f64> for Diopter {
    fn from(v: f64) -> Self {
        Diopter(v)
    }
}

impl Add for Diopter {
    type Output = Diopter;
    fn add(self, rhs: Diopter) -> Diopter {
        Diopter(self.0 + rhs.0)
    }
}

impl AddAssign for Diopter {
    fn add_assign(&mut self, rhs: Diopter) {
        self.0 += rhs.0;
    }
}

impl Sub for Diopter {
    type Output = Diopter;
    fn sub(self, rhs: Diopter) -> Diopter {
        Diopter(self.0 - rhs.0)
    }
}

impl Neg for Diopter {
    type Output = Diopter;
    fn neg(self) -> Diopter {
        Diopter(-self.0)
    }
}

impl fmt::Display for Diopter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = f.precision() {
            write!(f, "{:.*} D", p, self.0)
        } else {
            write!(f, "{} D", self.0)
        }
    }
}

/// Wearer age bracket. Only these two rows exist in the delta table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgeBracket {
    Twenties,
    Thirties,
}

impl AgeBracket {
    pub const ALL: [AgeBracket; 2] = [AgeBracket::Twenties, AgeBracket::Thirties];

    /// `[18, 30)` maps to twenties, `[30, 40)` to thirties. Anything else is
    /// rejected: there are no deltas for it.
    pub fn from_age(age_years: f64) -> Result<AgeBracket> {
        if !age_years.is_finite() {
            return Err(Error::invalid(format!("age {age_years} is not finite")));
        }
        if (18.0..30.0).contains(&age_years) {
            Ok(AgeBracket::Twenties)
        } else if (30.0..40.0).contains(&age_years) {
            Ok(AgeBracket::Thirties)
        } else {
            Err(Error::Range {
                what: "wearer age",
                value: age_years,
                min: 18.0,
                max: 40.0,
            })
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeBracket::Twenties => "20s",
            AgeBracket::Thirties => "30s",
        }
    }
}

/// Simulation target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeMode {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "40s")]
    Forties,
    #[serde(rename = "50s")]
    Fifties,
    #[serde(rename = "60s")]
    Sixties,
}

impl AgeMode {
    pub const ALL: [AgeMode; 4] = [
        AgeMode::Baseline,
        AgeMode::Forties,
        AgeMode::Fifties,
        AgeMode::Sixties,
    ];

    pub const SIMULATED: [AgeMode; 3] = [AgeMode::Forties, AgeMode::Fifties, AgeMode::Sixties];

    pub fn label(self) -> &'static str {
        match self {
            AgeMode::Baseline => "baseline",
            AgeMode::Forties => "40s",
            AgeMode::Fifties => "50s",
            AgeMode::Sixties => "60s",
        }
    }

    fn require_simulated(self) -> Result<()> {
        if self == AgeMode::Baseline {
            Err(Error::invalid("baseline mode has no presbyopic delta"))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for AgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(AgeMode::Baseline),
            "40s" | "forties" => Ok(AgeMode::Forties),
            "50s" | "fifties" => Ok(AgeMode::Fifties),
            "60s" | "sixties" => Ok(AgeMode::Sixties),
            other => Err(Error::invalid(format!("unknown age mode `{other}`"))),
        }
    }
}

/// Lens power deltas (D) per wearer bracket and simulated decade, at the
/// one-decimal precision of the lens driver.
pub struct DeltaTable;

impl DeltaTable {
    const ENTRIES: [(AgeBracket, AgeMode, f64); 6] = [
        (AgeBracket::Twenties, AgeMode::Forties, -5.8),
        (AgeBracket::Twenties, AgeMode::Fifties, -7.3),
        (AgeBracket::Twenties, AgeMode::Sixties, -8.5),
        (AgeBracket::Thirties, AgeMode::Forties, -3.3),
        (AgeBracket::Thirties, AgeMode::Fifties, -5.1),
        (AgeBracket::Thirties, AgeMode::Sixties, -6.0),
    ];

    pub fn entries() -> impl Iterator<Item = (AgeBracket, AgeMode, Diopter)> {
        Self::ENTRIES.iter().map(|&(b, m, d)| (b, m, Diopter(d)))
    }
}

/// Piecewise-linear amplitude-of-accommodation curve over age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccommodationModel {
    anchors: Vec<(f64, Diopter)>,
}

impl AccommodationModel {
    pub fn new(anchors: Vec<(f64, Diopter)>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::invalid(
                "accommodation model needs at least one anchor",
            ));
        }
        for w in anchors.windows(2) {
            let ((a0, p0), (a1, p1)) = (w[0], w[1]);
            if a1 <= a0 {
                return Err(Error::invalid("anchor ages must be strictly increasing"));
            }
            if p1 >= p0 {
                return Err(Error::invalid(
                    "anchor amplitudes must be strictly decreasing",
                ));
            }
        }
        if anchors.iter().any(|(a, p)| !a.is_finite() || !p.is_sane()) {
            return Err(Error::invalid("anchors must be finite"));
        }
        Ok(Self { anchors })
    }

    /// Duane-style anchors at 20/30/40/50/60 years.
    pub fn duane() -> Self {
        Self::new(vec![
            (20.0, Diopter(9.75)),
            (30.0, Diopter(7.3)),
            (40.0, Diopter(4.0)),
            (50.0, Diopter(2.45)),
            (60.0, Diopter(1.25)),
        ])
        .expect("static anchors are well formed")
    }

    pub fn anchors(&self) -> &[(f64, Diopter)] {
        &self.anchors
    }

    pub fn age_range(&self) -> (f64, f64) {
        (self.anchors[0].0, self.anchors[self.anchors.len() - 1].0)
    }
}

impl Default for AccommodationModel {
    fn default() -> Self {
        Self::duane()
    }
}

pub fn duane_amplitude(age_years: f64, model: &AccommodationModel) -> Result<Diopter> {
    let (lo, hi) = model.age_range();
    if !(lo..=hi).contains(&age_years) {
        return Err(Error::Range {
            what: "age",
            value: age_years,
            min: lo,
            max: hi,
        });
    }
    let anchors = model.anchors();
    if let Some(&(_, p)) = anchors.iter().find(|(a, _)| *a == age_years) {
        return Ok(p);
    }
    let i = anchors.partition_point(|(a, _)| *a < age_years);
    let (a0, p0) = anchors[i - 1];
    let (a1, p1) = anchors[i];
    let t = (age_years - a0) / (a1 - a0);
    Ok(Diopter(p0.0 + t * (p1.0 - p0.0)))
}

pub fn mode_delta(bracket: AgeBracket, mode: AgeMode) -> Result<Diopter> {
    mode.require_simulated()?;
    DeltaTable::entries()
        .find(|&(b, m, _)| b == bracket && m == mode)
        .map(|(_, _, d)| d)
        .ok_or_else(|| Error::invalid(format!("no delta for {bracket:?} / {mode}")))
}

/// Amplitude the simulation leaves a twenties reference wearer with:
/// 9.75 D plus the unrounded twenties delta. The 40s entry is 4.0 D because
/// its delta is -5.75 D before the table rounds it to -5.8 D.
pub fn target_amplitude(mode: AgeMode) -> Result<Diopter> {
    mode.require_simulated()?;
    Ok(Diopter(match mode {
        AgeMode::Forties => 4.0,
        AgeMode::Fifties => 2.45,
        AgeMode::Sixties => 1.25,
        AgeMode::Baseline => unreachable!(),
    }))
}

/// Near point in meters for a given amplitude.
pub fn near_point(aoa: Diopter) -> Result<f64> {
    if !(aoa.0 > 0.0) || !aoa.0.is_finite() {
        return Err(Error::Domain(format!(
            "near point needs aoa > 0, got {}",
            aoa.0
        )));
    }
    Ok(1.0 / aoa.0)
}

/// Distance (m) below which a mode switches the lenses to presbyopic power.
pub fn mode_threshold(mode: AgeMode) -> Result<f64> {
    near_point(target_amplitude(mode)?)
}

pub fn accommodation_demand(distance_m: f64, lens_power: Diopter) -> Result<Diopter> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be > 0, got {distance_m}"
        )));
    }
    Ok(Diopter(1.0 / distance_m - lens_power.0))
}

/// Residual defocus once accommodation and depth of focus are spent. Zero is sharp.
pub fn defocus(demand: Diopter, aoa: Diopter, dof: Diopter) -> Diopter {
    debug_assert!(aoa.0 >= 0.0 && dof.0 >= 0.0);
    Diopter((demand.0 - aoa.0 - dof.0).max(0.0))
}
