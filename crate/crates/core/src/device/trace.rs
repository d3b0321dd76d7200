//! Sensor traces, command logs and their CSV forms.
//!
//! Trace CSV: header `t_ms,distance_mm,temp_c`.
//! Command log CSV: header `t_ms,power_left_d,power_right_d,region,clamped`
//! with powers printed to one decimal place.

use std::io::{Read, Write};

use crate::controller::{Controller, LensCommand, SensorSample, SANE_TEMP_C};
use crate::device::tof::TofSensor;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 3] = ["t_ms", "distance_mm", "temp_c"];
pub const COMMAND_LOG_HEADER: &str = "t_ms,power_left_d,power_right_d,region,clamped";

/// Replayable sensor sequence with strictly increasing timestamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioTrace {
    samples: Vec<SensorSample>,
}

impl ScenarioTrace {
    pub fn new(samples: Vec<SensorSample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            check_sample(s).map_err(|m| Error::validation(format!("sample {i}: {m}")))?;
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t_ms <= w[0].t_ms) {
            return Err(Error::validation(format!(
                "sample {}: timestamp {} not after {}",
                i + 1,
                samples[i + 1].t_ms,
                samples[i].t_ms
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[SensorSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples a sequence of true distances through `sensor`, one per sensor period.
    pub fn from_distances<I>(distances_mm: I, temp_c: f64, sensor: &mut TofSensor) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let period = sensor.model().period_ms();
        let samples = distances_mm
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                SensorSample::new((i as f64 * period).round() as i64, sensor.read(d), temp_c)
            })
            .collect();
        Self::new(samples)
    }

    pub fn constant(
        distance_mm: f64,
        n: usize,
        temp_c: f64,
        sensor: &mut TofSensor,
    ) -> Result<Self> {
        Self::from_distances(std::iter::repeat_n(distance_mm, n), temp_c, sensor)
    }

    /// `before` samples at `from_mm`, then `after` samples at `to_mm`.
    pub fn step_change(
        from_mm: f64,
        to_mm: f64,
        before: usize,
        after: usize,
        temp_c: f64,
        sensor: &mut TofSensor,
    ) -> Result<Self> {
        let it = std::iter::repeat_n(from_mm, before).chain(std::iter::repeat_n(to_mm, after));
        Self::from_distances(it, temp_c, sensor)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut samples = Vec::new();
        let mut header_seen = false;
        let mut record = csv::StringRecord::new();
        loop {
            let more = rdr.read_record(&mut record).map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            if !more {
                break;
            }
            let line = record.position().map_or(0, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            if !header_seen {
                if record.iter().ne(TRACE_HEADER.iter().copied()) {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected header `{}`", TRACE_HEADER.join(",")),
                    });
                }
                header_seen = true;
                continue;
            }
            let sample = parse_sample(&record).map_err(|message| Error::Parse { line, message })?;
            if let Some(prev) = samples.last().map(|s: &SensorSample| s.t_ms) {
                if sample.t_ms <= prev {
                    return Err(Error::Parse {
                        line,
                        message: format!("timestamp {} not after {prev}", sample.t_ms),
                    });
                }
            }
            samples.push(sample);
        }
        Ok(Self { samples })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", TRACE_HEADER.join(","))?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", s.t_ms, s.distance_mm, s.temp_c)?;
        }
        Ok(())
    }
}

fn check_sample(s: &SensorSample) -> std::result::Result<(), String> {
    let (lo, hi) = SANE_TEMP_C;
    if !(lo..=hi).contains(&s.temp_c) {
        return Err(format!("temperature {} outside [{lo}, {hi}] °C", s.temp_c));
    }
    Ok(())
}

fn parse_sample(record: &csv::StringRecord) -> std::result::Result<SensorSample, String> {
    if record.len() != 3 {
        return Err(format!("expected 3 fields, found {}", record.len()));
    }
    let t_ms = record[0]
        .parse::<i64>()
        .map_err(|e| format!("t_ms `{}`: {e}", &record[0]))?;
    let distance_mm = record[1]
        .parse::<u32>()
        .map_err(|e| format!("distance_mm `{}`: {e}", &record[1]))?;
    let temp_c = record[2]
        .parse::<f64>()
        .map_err(|e| format!("temp_c `{}`: {e}", &record[2]))?;
    let s = SensorSample {
        t_ms,
        distance_mm,
        temp_c,
    };
    check_sample(&s)?;
    Ok(s)
}

/// Runs every sample of `trace` through `controller`, one command per sample.
pub fn replay(trace: &ScenarioTrace, controller: &mut Controller) -> Result<Vec<LensCommand>> {
    trace.samples().iter().map(|s| controller.step(s)).collect()
}

pub fn write_command_log<W: Write>(mut w: W, log: &[LensCommand]) -> Result<()> {
    writeln!(w, "{COMMAND_LOG_HEADER}")?;
    for c in log {
        writeln!(
            w,
            "{},{:.1},{:.1},{},{}",
            c.t_ms, c.power_left.0, c.power_right.0, c.region, c.clamped
        )?;
    }
    Ok(())
}
