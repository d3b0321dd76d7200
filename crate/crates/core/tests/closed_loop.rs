//! Controller, virtual sensor, lens and eye run together.

use agelens_core::controller::{Controller, ControllerConfig, Region};
use agelens_core::device::study::{compare_to_reference, draw_participants};
use agelens_core::device::{
    closed_form_near_point, replay, run_study, write_command_log, EyeModel, EyePair, PushUpConfig,
    PushUpRig, ScenarioTrace, StudyConfig, TofModel,
};
use agelens_core::optics::{mode_delta, mode_threshold};
use agelens_core::{AgeMode, Diopter, WearerProfile};

fn rig_near_point(aoa: f64, mode: AgeMode, tof: &TofModel, pushup: &PushUpConfig) -> Option<f64> {
    let cfg = ControllerConfig::default();
    let wearer = WearerProfile::emmetrope(24.0)
        .unwrap()
        .with_aoa(Diopter(aoa));
    let eyes = EyePair::both(EyeModel::emmetrope(Diopter(aoa)));
    PushUpRig::new(&cfg, tof, pushup)
        .run(&eyes, &wearer, mode)
        .unwrap()
}

#[test]
fn thermal_drift_is_cancelled() {
    let tof = TofModel::noiseless();
    let q = ControllerConfig::default().quantum_d;
    // 5, 25 and 35 C compensate by whole quanta; 40 C by 1.5 quanta, so the
    // delivered power may sit half a quantum off and move onset by d^2 * q / 2.
    for (temp, half_quantum_off) in [(5.0, false), (25.0, false), (35.0, false), (40.0, true)] {
        let pushup = PushUpConfig {
            ambient_temp_c: temp,
            ..PushUpConfig::default()
        };
        for mode in AgeMode::SIMULATED {
            let np = rig_near_point(9.75, mode, &tof, &pushup).unwrap();
            let thr = mode_threshold(mode).unwrap() * 1000.0;
            let slack = if half_quantum_off {
                (thr / 1000.0).powi(2) * q / 2.0 * 1000.0
            } else {
                0.0
            };
            assert!(
                (np - thr).abs() <= 1.0 + slack,
                "{temp} C {mode}: {np} vs {thr}"
            );
        }
    }
}

#[test]
fn noisy_sensor_stays_near_threshold() {
    let pushup = PushUpConfig::default();
    for seed in 0..3 {
        let tof = TofModel::default().with_seed(seed);
        for mode in AgeMode::SIMULATED {
            let np = rig_near_point(9.75, mode, &tof, &pushup).unwrap();
            let thr = mode_threshold(mode).unwrap() * 1000.0;
            // sensor noise (3 mm sigma) plus one debounce bucket
            assert!(
                (np - thr).abs() <= 15.0,
                "seed {seed} {mode}: {np} vs {thr}"
            );
        }
    }
}

#[test]
fn weak_accommodation_follows_closed_form() {
    // Below the target amplitude the wearer's own near point dominates.
    let tof = TofModel::noiseless();
    let pushup = PushUpConfig::default();
    for (aoa, mode) in [
        (3.0, AgeMode::Forties),
        (2.0, AgeMode::Fifties),
        (7.58, AgeMode::Baseline),
    ] {
        let delta = mode_delta(agelens_core::AgeBracket::Twenties, mode).unwrap_or(Diopter::ZERO);
        let want = closed_form_near_point(Diopter(aoa), delta, mode_threshold(mode).ok()) * 1000.0;
        let np = rig_near_point(aoa, mode, &tof, &pushup).unwrap();
        assert!((np - want).abs() <= 1.0, "{mode} aoa {aoa}: {np} vs {want}");
    }
}

#[test]
fn trace_csv_round_trip_replays_identically() {
    let mut sensor = TofModel::default().with_seed(11).sensor();
    let trace = ScenarioTrace::step_change(900.0, 180.0, 60, 120, 22.0, &mut sensor).unwrap();
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).unwrap();
    let parsed = ScenarioTrace::read_csv(csv.as_slice()).unwrap();
    assert_eq!(parsed, trace);

    let run = |t: &ScenarioTrace| {
        let wearer = WearerProfile::emmetrope(24.0).unwrap();
        let mut ctrl =
            Controller::new(ControllerConfig::default(), AgeMode::Forties, wearer).unwrap();
        let log = replay(t, &mut ctrl).unwrap();
        let mut out = Vec::new();
        write_command_log(&mut out, &log).unwrap();
        (log, out)
    };
    let (log, a) = run(&trace);
    let (_, b) = run(&parsed);
    assert_eq!(a, b);
    assert_eq!(log.first().unwrap().region, Region::Corrective);
    let last = log.last().unwrap();
    assert_eq!(last.region, Region::Presbyopic);
    assert_eq!(last.power_left, Diopter(-5.8));
}

#[test]
fn study_is_reproducible_and_within_band() {
    let cfg = StudyConfig::default();
    let controller = ControllerConfig::default();
    let tof = TofModel::default();
    let pushup = PushUpConfig::default();
    let a = run_study(&cfg, 5, &controller, &tof, &pushup).unwrap();
    let b = run_study(&cfg, 5, &controller, &tof, &pushup).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.participants.len(), cfg.n);
    for c in compare_to_reference(&a, cfg.tolerance) {
        assert!(c.pass, "{c:?}");
    }
    assert_ne!(
        draw_participants(&cfg, 5).unwrap(),
        draw_participants(&cfg, 6).unwrap()
    );
}
