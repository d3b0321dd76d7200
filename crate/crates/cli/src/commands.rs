//! Subcommand bodies. Each returns the full report so that callers decide
//! where it goes.

use std::fmt::Write as _;
use std::path::Path;

use agelens_core::controller::{calibrate_pair, Controller};
use agelens_core::device::study::{compare_to_reference, REFERENCE_MEDIANS_MM};
use agelens_core::device::{replay, run_study, write_command_log, PushUpRig, ScenarioTrace};
use agelens_core::optics::{mode_delta, mode_threshold, target_amplitude};
use agelens_core::render::{
    read_depth, read_image, render as render_image, write_image, ControllerSnapshot,
};
use agelens_core::{AgeBracket, AgeMode, Result};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

/// Mode used by subcommands that need exactly one.
const DEFAULT_SINGLE_MODE: AgeMode = AgeMode::Forties;

pub fn table(format: Format) -> Result<String> {
    let mut out = String::new();
    let row = |m: AgeMode| -> Result<(String, String, String, String)> {
        if m == AgeMode::Baseline {
            return Ok(Default::default());
        }
        Ok((
            format!("{:.1}", mode_delta(AgeBracket::Twenties, m)?.0),
            format!("{:.1}", mode_delta(AgeBracket::Thirties, m)?.0),
            format!("{:.2}", target_amplitude(m)?.0),
            format!("{:.1}", mode_threshold(m)? * 1000.0),
        ))
    };
    match format {
        Format::Csv => {
            out.push_str("mode,delta_20s_d,delta_30s_d,target_aoa_d,threshold_mm\n");
            for m in AgeMode::ALL {
                let (d20, d30, aoa, thr) = row(m)?;
                writeln!(out, "{m},{d20},{d30},{aoa},{thr}").unwrap();
            }
        }
        Format::Text => {
            writeln!(
                out,
                "{:<10}{:>12}{:>12}{:>16}{:>16}",
                "mode", "20s (D)", "30s (D)", "target AoA (D)", "threshold (mm)"
            )
            .unwrap();
            for m in AgeMode::ALL {
                let (d20, d30, aoa, thr) = row(m)?;
                let dash = |s: String| if s.is_empty() { "-".to_string() } else { s };
                writeln!(
                    out,
                    "{:<10}{:>12}{:>12}{:>16}{:>16}",
                    m.label(),
                    dash(d20),
                    dash(d30),
                    dash(aoa),
                    dash(thr)
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

fn fmt_mm(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| format!("{v:.1}"))
}

pub fn pushup(cfg: &RunConfig, format: Format) -> Result<String> {
    cfg.validate()?;
    let wearer = cfg.wearer()?;
    let eyes = cfg.calibrated_eyes(&wearer);
    let tof = cfg.tof.clone().with_seed(cfg.seed);
    let rig = PushUpRig::new(&cfg.controller, &tof, &cfg.pushup);
    let modes: Vec<AgeMode> = cfg.mode.map_or_else(|| AgeMode::ALL.to_vec(), |m| vec![m]);

    let mut out = String::new();
    if format == Format::Csv {
        out.push_str("mode,near_point_mm,threshold_mm\n");
    } else {
        writeln!(
            out,
            "push-up: age {:.1}, AoA {:.2} D, offsets {:.1}/{:.1} D",
            wearer.age_years, wearer.aoa.0, wearer.offset_left.0, wearer.offset_right.0
        )
        .unwrap();
    }
    for mode in modes {
        let np = rig.run(&eyes, &wearer, mode)?;
        let threshold = mode_threshold(mode).ok().map(|t| t * 1000.0);
        match format {
            Format::Csv => writeln!(
                out,
                "{mode},{},{}",
                fmt_mm(np),
                threshold.map_or(String::new(), |t| format!("{t:.1}"))
            ),
            Format::Text => writeln!(
                out,
                "  {:<9} near point {:>7} mm{}",
                mode.label(),
                fmt_mm(np),
                threshold.map_or(String::new(), |t| format!("  (threshold {t:.1} mm)"))
            ),
        }
        .unwrap();
    }
    Ok(out)
}

pub fn replay_trace(cfg: &RunConfig, trace_path: &Path) -> Result<String> {
    cfg.validate()?;
    let trace = ScenarioTrace::read_csv(std::fs::File::open(trace_path)?)?;
    let mode = cfg.mode.unwrap_or(DEFAULT_SINGLE_MODE);
    let mut controller = Controller::new(cfg.controller.clone(), mode, cfg.wearer()?)?;
    let log = replay(&trace, &mut controller)?;
    let mut buf = Vec::new();
    write_command_log(&mut buf, &log)?;
    Ok(String::from_utf8(buf).expect("command log is ASCII"))
}

pub fn study(cfg: &RunConfig, format: Format) -> Result<String> {
    cfg.validate()?;
    let report = run_study(&cfg.study, cfg.seed, &cfg.controller, &cfg.tof, &cfg.pushup)?;
    let tol = cfg.study.tolerance;
    let cmp = compare_to_reference(&report, tol);

    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("mode,median_mm,reference_mm,relative_error,tolerance,pass\n");
            for c in &cmp {
                writeln!(
                    out,
                    "{},{},{:.1},{},{tol},{}",
                    c.mode,
                    fmt_mm(c.simulated_mm),
                    c.reference_mm,
                    c.relative_error
                        .map_or("none".to_string(), |e| format!("{e:.4}")),
                    c.pass
                )
                .unwrap();
            }
        }
        Format::Text => {
            writeln!(
                out,
                "study: n = {}, age {:.1} ± {:.1}, seed {}",
                cfg.study.n, cfg.study.age_mean, cfg.study.age_sd, cfg.seed
            )
            .unwrap();
            writeln!(
                out,
                "{:<10}{:>12}{:>14}{:>10}  result",
                "mode", "median mm", "reference mm", "error"
            )
            .unwrap();
            for c in &cmp {
                writeln!(
                    out,
                    "{:<10}{:>12}{:>14.1}{:>10}  {}",
                    c.mode.label(),
                    fmt_mm(c.simulated_mm),
                    c.reference_mm,
                    c.relative_error
                        .map_or("-".to_string(), |e| format!("{:.1}%", e * 100.0)),
                    if c.pass { "PASS" } else { "FAIL" }
                )
                .unwrap();
            }
            let all = cmp.iter().all(|c| c.pass);
            writeln!(
                out,
                "overall: {} (tolerance {:.0}% of {} reference medians)",
                if all { "PASS" } else { "FAIL" },
                tol * 100.0,
                REFERENCE_MEDIANS_MM.len()
            )
            .unwrap();
        }
    }
    Ok(out)
}

pub fn calibrate(cfg: &RunConfig, format: Format) -> Result<String> {
    cfg.validate()?;
    let wearer = cfg.wearer()?;
    let eyes = cfg.prescribed_eyes(&wearer);
    let offsets = calibrate_pair(
        &mut eyes.calibration_probe(),
        eyes.is_anisometropic(),
        &cfg.controller,
    )?;
    Ok(match format {
        Format::Csv => format!(
            "eye,offset_d\nleft,{:.1}\nright,{:.1}\n",
            offsets.left.0, offsets.right.0
        ),
        Format::Text => format!(
            "calibration at 1 m ({}): left {:.1} D, right {:.1} D\n",
            if eyes.is_anisometropic() {
                "per eye"
            } else {
                "both eyes"
            },
            offsets.left.0,
            offsets.right.0
        ),
    })
}

pub fn render(cfg: &RunConfig, image: &Path, depth: &Path, out: &Path) -> Result<String> {
    cfg.validate()?;
    let wearer = cfg.wearer()?;
    let img = read_image(image)?;
    let depth = read_depth(depth)?;
    let mode = cfg.mode.unwrap_or(DEFAULT_SINGLE_MODE);
    let eye = cfg.calibrated_eyes(&wearer).left;
    let mut snapshot = ControllerSnapshot::new(cfg.controller.clone(), mode, wearer);
    snapshot.temp_c = cfg.controller.temp_ref_c;
    let blurred = render_image(&img, &depth, &eye, &snapshot, &cfg.render)?;
    write_image(out, &blurred)?;
    Ok(format!(
        "rendered {}x{} ({mode}) to {}\n",
        blurred.width,
        blurred.height,
        out.display()
    ))
}
