//! The per-sample lens control pipeline:
//! debounce, region decision, target power, exponential slew, temperature
//! compensation, then quantization and clamping for each eye.

mod calibrate;
mod config;
mod debounce;

pub use calibrate::{calibrate, calibrate_pair, EyeSelection, Offsets, CALIBRATION_DISTANCE_M};
pub use config::{ControllerConfig, OPERATING_TEMP_C, SANE_TEMP_C};
pub use debounce::{bucket, DebounceBuffer};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{mode_delta, mode_threshold, AgeMode, Diopter};
use crate::wearer::WearerProfile;

/// One distance/temperature reading from the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t_ms: i64,
    pub distance_mm: u32,
    pub temp_c: f64,
}

impl SensorSample {
    pub fn new(t_ms: i64, distance_mm: u32, temp_c: f64) -> Self {
        Self {
            t_ms,
            distance_mm,
            temp_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Corrective,
    Presbyopic,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Corrective => "corrective",
            Region::Presbyopic => "presbyopic",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Quantized per-eye output for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensCommand {
    pub t_ms: i64,
    pub power_left: Diopter,
    pub power_right: Diopter,
    pub region: Region,
    pub clamped: bool,
    /// Sample temperature was outside the lens operating range.
    pub temp_out_of_spec: bool,
}

pub fn region_of(stable_mm: u32, mode: AgeMode) -> Region {
    match mode_threshold(mode) {
        Ok(threshold_m) if (stable_mm as f64) < threshold_m * 1000.0 => Region::Presbyopic,
        _ => Region::Corrective,
    }
}

/// Region decision with an exit band: once presbyopic, the reading must reach
/// `threshold + band_mm` to return to corrective.
pub fn region_with_hysteresis(
    stable_mm: u32,
    mode: AgeMode,
    previous: Region,
    band_mm: u32,
) -> Region {
    let plain = region_of(stable_mm, mode);
    if band_mm == 0 || previous == Region::Corrective || plain == Region::Presbyopic {
        return plain;
    }
    let threshold_mm = mode_threshold(mode).map(|t| t * 1000.0).unwrap_or(0.0);
    if (stable_mm as f64) < threshold_mm + band_mm as f64 {
        Region::Presbyopic
    } else {
        Region::Corrective
    }
}

pub fn target_power(
    region: Region,
    mode: AgeMode,
    wearer: &WearerProfile,
) -> Result<(Diopter, Diopter)> {
    match region {
        Region::Corrective => Ok((wearer.offset_left, wearer.offset_right)),
        Region::Presbyopic => {
            let delta = mode_delta(wearer.bracket()?, mode)?;
            Ok((delta + wearer.offset_left, delta + wearer.offset_right))
        }
    }
}

/// Exponential approach of `current` toward `target` over `dt_s`.
pub fn slew(current: Diopter, target: Diopter, dt_s: f64, tau_s: f64) -> Diopter {
    debug_assert!(dt_s > 0.0 && tau_s > 0.0);
    let decay = (-dt_s / tau_s).exp();
    Diopter(target.0 + (current.0 - target.0) * decay)
}

/// Additive linear correction for lens thermal drift about the reference temperature.
pub fn compensate_temperature(power: Diopter, temp_c: f64, cfg: &ControllerConfig) -> Diopter {
    Diopter(power.0 + cfg.temp_coeff_d_per_c * (temp_c - cfg.temp_ref_c))
}

pub fn temperature_in_spec(temp_c: f64) -> bool {
    (OPERATING_TEMP_C.0..=OPERATING_TEMP_C.1).contains(&temp_c)
}

// Slack that lets values a few ulps short of a half step still round away from zero.
const TIE_SLACK: f64 = 1e-9;

/// Rounds to the nearest multiple of `quantum_d` (ties away from zero), then
/// clamps to the lens range. Returns the power and whether it was clamped.
pub fn quantize_clamp(power: Diopter, cfg: &ControllerConfig) -> (Diopter, bool) {
    let q = cfg.quantum_d;
    let scaled = power.0 / q;
    let steps = (scaled.abs() + 0.5 + TIE_SLACK).floor().copysign(scaled);
    let lo = (cfg.power_min.0 / q).round();
    let hi = (cfg.power_max.0 / q).round();
    let (steps, clamped) = if steps < lo {
        (lo, true)
    } else if steps > hi {
        (hi, true)
    } else {
        (steps, false)
    };
    (Diopter(steps_to_power(steps, q)), clamped)
}

fn steps_to_power(steps: f64, quantum: f64) -> f64 {
    // Divide by an integral reciprocal when there is one so that e.g. -58
    // steps of 0.1 is the f64 nearest -5.8 rather than -5.800000000000001.
    let inv = 1.0 / quantum;
    let v = if (inv - inv.round()).abs() < 1e-9 {
        steps / inv.round()
    } else {
        steps * quantum
    };
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Steady-state quantized command for a stable distance, skipping the slew.
pub fn steady_command(
    stable_mm: u32,
    mode: AgeMode,
    wearer: &WearerProfile,
    temp_c: f64,
    cfg: &ControllerConfig,
) -> Result<(Region, Diopter, Diopter)> {
    let region = region_of(stable_mm, mode);
    let (l, r) = target_power(region, mode, wearer)?;
    let (l, _) = quantize_clamp(compensate_temperature(l, temp_c, cfg), cfg);
    let (r, _) = quantize_clamp(compensate_temperature(r, temp_c, cfg), cfg);
    Ok((region, l, r))
}

/// A single lens controller. Owns its configuration and mutable state; run one
/// per simulated device.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    mode: AgeMode,
    wearer: WearerProfile,
    buffer: DebounceBuffer,
    current_left: Diopter,
    current_right: Diopter,
    last_stable_mm: Option<u32>,
    last_t_ms: Option<i64>,
    region: Region,
}

impl Controller {
    pub fn new(cfg: ControllerConfig, mode: AgeMode, wearer: WearerProfile) -> Result<Self> {
        cfg.validate()?;
        wearer.validate(cfg.power_min, cfg.power_max)?;
        Ok(Self {
            buffer: DebounceBuffer::new(cfg.debounce_len),
            current_left: wearer.offset_left,
            current_right: wearer.offset_right,
            cfg,
            mode,
            wearer,
            last_stable_mm: None,
            last_t_ms: None,
            region: Region::Corrective,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn mode(&self) -> AgeMode {
        self.mode
    }

    pub fn wearer(&self) -> &WearerProfile {
        &self.wearer
    }

    pub fn buffer(&self) -> &DebounceBuffer {
        &self.buffer
    }

    pub fn last_stable_mm(&self) -> Option<u32> {
        self.last_stable_mm
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Continuous (pre-quantization) lens powers.
    pub fn current_power(&self) -> (Diopter, Diopter) {
        (self.current_left, self.current_right)
    }

    /// Switches the simulated decade. Lens powers keep slewing from where they are.
    pub fn set_mode(&mut self, mode: AgeMode) {
        self.mode = mode;
    }

    pub fn step(&mut self, sample: &SensorSample) -> Result<LensCommand> {
        if let Some(prev) = self.last_t_ms {
            if sample.t_ms < prev {
                return Err(Error::invalid(format!(
                    "sample timestamp {} precedes previous {}",
                    sample.t_ms, prev
                )));
            }
        }
        let (tlo, thi) = SANE_TEMP_C;
        if !(tlo..=thi).contains(&sample.temp_c) {
            return Err(Error::invalid(format!(
                "temperature {} °C outside sensor band [{tlo}, {thi}]",
                sample.temp_c
            )));
        }

        let stable = self.buffer.push(
            sample.distance_mm,
            self.cfg.debounce_threshold,
            self.cfg.debounce_bucket_mm,
        );
        let region = region_with_hysteresis(stable, self.mode, self.region, self.cfg.hysteresis_mm);
        let (target_left, target_right) = target_power(region, self.mode, &self.wearer)?;

        let dt_s = match self.last_t_ms {
            Some(prev) if sample.t_ms > prev => (sample.t_ms - prev) as f64 / 1000.0,
            _ => 1.0 / self.cfg.refresh_hz,
        };
        let tau = self.cfg.tau_for(self.mode);
        self.current_left = slew(self.current_left, target_left, dt_s, tau);
        self.current_right = slew(self.current_right, target_right, dt_s, tau);

        let (left, clamp_l) = quantize_clamp(
            compensate_temperature(self.current_left, sample.temp_c, &self.cfg),
            &self.cfg,
        );
        let (right, clamp_r) = quantize_clamp(
            compensate_temperature(self.current_right, sample.temp_c, &self.cfg),
            &self.cfg,
        );

        self.last_t_ms = Some(sample.t_ms);
        self.last_stable_mm = Some(stable);
        self.region = region;

        Ok(LensCommand {
            t_ms: sample.t_ms,
            power_left: left,
            power_right: right,
            region,
            clamped: clamp_l || clamp_r,
            temp_out_of_spec: !temperature_in_spec(sample.temp_c),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn emmetrope20() -> WearerProfile {
        WearerProfile::emmetrope(20.0).unwrap()
    }

    fn run_constant(ctrl: &mut Controller, mm: u32, n: usize, dt_ms: i64) -> Vec<LensCommand> {
        (0..n)
            .map(|i| {
                ctrl.step(&SensorSample::new(i as i64 * dt_ms, mm, 25.0))
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn region_examples() {
        assert_eq!(region_of(249, AgeMode::Forties), Region::Presbyopic);
        assert_eq!(region_of(251, AgeMode::Forties), Region::Corrective);
        assert_eq!(region_of(250, AgeMode::Forties), Region::Corrective);
        assert_eq!(region_of(700, AgeMode::Sixties), Region::Presbyopic);
        assert_eq!(region_of(408, AgeMode::Fifties), Region::Presbyopic);
        assert_eq!(region_of(409, AgeMode::Fifties), Region::Corrective);
        assert_eq!(region_of(10, AgeMode::Baseline), Region::Corrective);
    }

    #[test]
    fn hysteresis_band() {
        let m = AgeMode::Forties;
        assert_eq!(
            region_with_hysteresis(255, m, Region::Presbyopic, 0),
            Region::Corrective
        );
        assert_eq!(
            region_with_hysteresis(255, m, Region::Presbyopic, 10),
            Region::Presbyopic
        );
        assert_eq!(
            region_with_hysteresis(260, m, Region::Presbyopic, 10),
            Region::Corrective
        );
        assert_eq!(
            region_with_hysteresis(255, m, Region::Corrective, 10),
            Region::Corrective
        );
    }

    #[test]
    fn target_power_examples() {
        let w = emmetrope20();
        let m = AgeMode::Forties;
        let t = target_power(region_of(200, m), m, &w).unwrap();
        assert_eq!(t, (Diopter(-5.8), Diopter(-5.8)));
        let t = target_power(region_of(400, m), m, &w).unwrap();
        assert_eq!(t, (Diopter(0.0), Diopter(0.0)));

        let myope = emmetrope20().with_offsets(Diopter(-3.0), Diopter(-2.5));
        let (l, r) = target_power(region_of(200, m), m, &myope).unwrap();
        assert!(close(l.0, -8.8, 1e-12) && close(r.0, -8.3, 1e-12));
    }

    #[test]
    fn slew_examples() {
        assert_eq!(slew(Diopter(0.0), Diopter(0.0), 0.1, 0.3), Diopter(0.0));
        let v = slew(Diopter(0.0), Diopter(-5.8), 0.3, 0.3).0;
        assert!(close(v, -5.8 * (1.0 - (-1.0f64).exp()), 1e-12));
        assert!(close(v, -3.666, 1e-3));
        let v = slew(Diopter(-5.8), Diopter(0.0), 1.5, 0.3).0;
        assert!(close(v, -0.0391, 1e-4));
    }

    #[test]
    fn temperature_examples() {
        let cfg = ControllerConfig::default();
        assert_eq!(
            compensate_temperature(Diopter(-5.8), 25.0, &cfg),
            Diopter(-5.8)
        );
        assert!(close(
            compensate_temperature(Diopter(-5.8), 35.0, &cfg).0,
            -5.7,
            1e-12
        ));
        assert!(close(
            compensate_temperature(Diopter(0.0), 5.0, &cfg).0,
            -0.2,
            1e-12
        ));
        assert!(temperature_in_spec(0.0) && temperature_in_spec(45.0));
        assert!(!temperature_in_spec(-0.1) && !temperature_in_spec(45.5));
    }

    #[test]
    fn quantize_examples() {
        let cfg = ControllerConfig::default();
        assert_eq!(quantize_clamp(Diopter(-5.75), &cfg), (Diopter(-5.8), false));
        assert_eq!(quantize_clamp(Diopter(5.75), &cfg), (Diopter(5.8), false));
        assert_eq!(quantize_clamp(Diopter(0.0), &cfg), (Diopter(0.0), false));
        assert_eq!(quantize_clamp(Diopter(-0.04), &cfg), (Diopter(0.0), false));
        assert_eq!(quantize_clamp(Diopter(-15.5), &cfg), (Diopter(-15.0), true));
        assert_eq!(quantize_clamp(Diopter(15.04), &cfg), (Diopter(15.0), false));
        assert_eq!(quantize_clamp(Diopter(15.05), &cfg), (Diopter(15.0), true));
        assert_eq!(quantize_clamp(Diopter(-8.8), &cfg).0, Diopter(-8.8));
    }

    #[test]
    fn steady_corrective_converges_to_zero() {
        let mut c =
            Controller::new(ControllerConfig::default(), AgeMode::Forties, emmetrope20()).unwrap();
        let log = run_constant(&mut c, 400, 120, 33);
        let last = log.last().unwrap();
        assert_eq!(
            (last.power_left, last.power_right),
            (Diopter(0.0), Diopter(0.0))
        );
        assert!(log.iter().all(|c| c.region == Region::Corrective));
    }

    #[test]
    fn steady_presbyopic_reaches_table_value() {
        let cfg = ControllerConfig::default();
        let mut c = Controller::new(cfg.clone(), AgeMode::Forties, emmetrope20()).unwrap();
        // 33 ms ticks for 2 s, well past 5 tau
        let log = run_constant(&mut c, 200, 61, 33);
        let last = log.last().unwrap();
        assert_eq!(last.region, Region::Presbyopic);
        assert!(close(last.power_left.0, -5.8, cfg.quantum_d));
        let mut long = Controller::new(cfg, AgeMode::Forties, emmetrope20()).unwrap();
        let last = *run_constant(&mut long, 200, 600, 33).last().unwrap();
        assert_eq!(last.power_left, Diopter(-5.8));
        assert_eq!(last.power_right, Diopter(-5.8));
    }

    #[test]
    fn outlier_does_not_flip_region() {
        let mut c =
            Controller::new(ControllerConfig::default(), AgeMode::Forties, emmetrope20()).unwrap();
        let mut log = run_constant(&mut c, 400, 10, 33);
        log.push(c.step(&SensorSample::new(330, 50, 25.0)).unwrap());
        for i in 11..20 {
            log.push(c.step(&SensorSample::new(i * 33, 400, 25.0)).unwrap());
        }
        assert!(log.iter().all(|c| c.region == Region::Corrective));
        assert!(log.iter().all(|c| c.power_left == Diopter(0.0)));
    }

    #[test]
    fn rejects_time_reversal_and_insane_temperature() {
        let mut c =
            Controller::new(ControllerConfig::default(), AgeMode::Forties, emmetrope20()).unwrap();
        c.step(&SensorSample::new(100, 400, 25.0)).unwrap();
        assert!(c.step(&SensorSample::new(99, 400, 25.0)).is_err());
        assert!(c.step(&SensorSample::new(100, 400, 25.0)).is_ok());
        assert!(c.step(&SensorSample::new(200, 400, 95.0)).is_err());
    }

    #[test]
    fn out_of_spec_temperature_is_flagged() {
        let mut c =
            Controller::new(ControllerConfig::default(), AgeMode::Forties, emmetrope20()).unwrap();
        let cmd = c.step(&SensorSample::new(0, 400, 50.0)).unwrap();
        assert!(cmd.temp_out_of_spec);
        let cmd = c.step(&SensorSample::new(33, 400, 30.0)).unwrap();
        assert!(!cmd.temp_out_of_spec);
    }

    #[test]
    fn extreme_myope_in_sixties_is_clamped() {
        let w = emmetrope20().with_offsets(Diopter(-10.0), Diopter(-10.0));
        let mut c = Controller::new(ControllerConfig::default(), AgeMode::Sixties, w).unwrap();
        let last = *run_constant(&mut c, 300, 200, 33).last().unwrap();
        assert_eq!(last.power_left, Diopter(-15.0));
        assert!(last.clamped);
    }

    #[test]
    fn steady_command_matches_delta() {
        let cfg = ControllerConfig::default();
        let w = emmetrope20();
        for m in AgeMode::SIMULATED {
            let (region, l, r) = steady_command(100, m, &w, 25.0, &cfg).unwrap();
            assert_eq!(region, Region::Presbyopic);
            let d = mode_delta(crate::optics::AgeBracket::Twenties, m).unwrap();
            assert_eq!((l, r), (d, d));
        }
    }

    fn is_quantum_multiple(p: f64, q: f64) -> bool {
        let s = p / q;
        (s - s.round()).abs() < 1e-6
    }

    proptest! {
        #[test]
        fn slew_never_overshoots(
            cur in -15.0f64..15.0, tgt in -15.0f64..15.0,
            dt in 1e-4f64..2.0, tau in 0.01f64..2.0,
        ) {
            let new = slew(Diopter(cur), Diopter(tgt), dt, tau).0;
            prop_assert!((new - tgt).abs() <= (cur - tgt).abs());
            let lo = cur.min(tgt);
            let hi = cur.max(tgt);
            prop_assert!(new >= lo && new <= hi);
        }

        #[test]
        fn quantized_is_multiple_within_limits(p in -40.0f64..40.0) {
            let cfg = ControllerConfig::default();
            let (q, clamped) = quantize_clamp(Diopter(p), &cfg);
            prop_assert!(is_quantum_multiple(q.0, cfg.quantum_d));
            prop_assert!(q >= cfg.power_min && q <= cfg.power_max);
            prop_assert_eq!(clamped, p.abs() >= 15.05);
            if !clamped {
                prop_assert!((q.0 - p).abs() <= cfg.quantum_d / 2.0 + 1e-9);
            }
        }

        #[test]
        fn temperature_identity_at_reference(p in -15.0f64..15.0) {
            let cfg = ControllerConfig::default();
            prop_assert_eq!(compensate_temperature(Diopter(p), cfg.temp_ref_c, &cfg), Diopter(p));
        }

        #[test]
        fn debounce_output_is_buffer_member(
            seq in proptest::collection::vec(0u32..2000, 1..40),
        ) {
            let mut buf = DebounceBuffer::new(5);
            for d in seq {
                let out = buf.push(d, 3, 10);
                prop_assert!(buf.newest_first().any(|v| v == out));
            }
        }

        #[test]
        fn step_is_deterministic(
            dists in proptest::collection::vec(30u32..1500, 1..60),
            mode_ix in 0usize..4,
        ) {
            let mode = AgeMode::ALL[mode_ix];
            let run = || {
                let mut c = Controller::new(ControllerConfig::default(), mode, emmetrope20()).unwrap();
                dists.iter().enumerate()
                    .map(|(i, &d)| c.step(&SensorSample::new(i as i64 * 33, d, 25.0)).unwrap())
                    .collect::<Vec<_>>()
            };
            let a = run();
            let b = run();
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.power_left.0.to_bits(), y.power_left.0.to_bits());
                prop_assert_eq!(x.power_right.0.to_bits(), y.power_right.0.to_bits());
                prop_assert_eq!(x.region, y.region);
            }
        }
    }
}
