//! Line-based pulse schedule files.
//!
//! One directive per line, `#` starts a comment. Every value carries a unit.
//!
//! ```text
//! ramp  from=-50ueV to=30ueV duration=20ns      # or rate=10ueV/ns
//! dwell eps=30ueV duration=100ns
//! drive eps=800ueV duration=25us freq=4.199GHz amp=0.02MHz phase=0rad
//! ```
//!
//! A preset line expands to a complete sequence:
//!
//! * `funnel depth= dwell= [load=-50ueV rate=50ueV/ns]`
//! * `lzs depth= dwell= [load=-50ueV rate=10ueV/ns]`
//! * `exchange depth= dwell= [load=-50ueV knee=50ueV fast=20ueV/ns far=1000ueV prep=2000ns plunge=2ns]`
//! * `esr depth= freq= [amp=0.02MHz duration=25000ns phase=0rad load=-50ueV knee=50ueV fast=10ueV/ns rate=0.5ueV/ns]`
//!
//! Each returns to its load point along the mirror image of the way in.

use std::collections::BTreeMap;

use crate::quantity::{self, Kind};
use dqdsim::dynamics::{Drive, InitialState, PulseSchedule, Segment};

/// Detuning mismatch tolerated between consecutive segments, µeV.
const CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScheduleError {
    pub line: usize,
    pub message: String,
}

struct Args<'a> {
    line: usize,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Args<'a> {
    fn parse(line: usize, tokens: &[&'a str], allowed: &[&str]) -> Result<Self, ScheduleError> {
        let mut values = BTreeMap::new();
        for t in tokens {
            let (k, v) = t.split_once('=').ok_or_else(|| ScheduleError { line, message: format!("expected key=value, got `{t}`") })?;
            if !allowed.contains(&k) {
                return Err(ScheduleError { line, message: format!("unknown key `{k}` (expected one of {})", allowed.join(", ")) });
            }
            if values.insert(k, v).is_some() {
                return Err(ScheduleError { line, message: format!("key `{k}` given twice") });
            }
        }
        Ok(Args { line, values })
    }

    fn get(&self, key: &str, kind: Kind) -> Result<Option<f64>, ScheduleError> {
        self.values
            .get(key)
            .map(|v| quantity::parse(v, kind).map_err(|e| ScheduleError { line: self.line, message: format!("`{key}`: {e}") }))
            .transpose()
    }

    fn require(&self, key: &str, kind: Kind) -> Result<f64, ScheduleError> {
        self.get(key, kind)?.ok_or_else(|| ScheduleError { line: self.line, message: format!("missing `{key}`") })
    }

    fn or(&self, key: &str, kind: Kind, default: f64) -> Result<f64, ScheduleError> {
        Ok(self.get(key, kind)?.unwrap_or(default))
    }

    fn positive(&self, key: &str, kind: Kind, default: Option<f64>) -> Result<f64, ScheduleError> {
        let v = match default {
            Some(d) => self.or(key, kind, d)?,
            None => self.require(key, kind)?,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(ScheduleError { line: self.line, message: format!("`{key}` must be positive, got {v} {}", kind.unit()) });
        }
        Ok(v)
    }
}

/// Appends a ramp unless it has no extent.
fn ramp_to(out: &mut Vec<Segment>, from: f64, to: f64, duration: f64) {
    if from != to && duration > 0.0 {
        out.push(Segment::ramp(from, to, duration));
    }
}

fn mirror(out: &mut Vec<Segment>, way_in: &[Segment]) {
    out.extend(way_in.iter().rev().map(Segment::reversed));
}

fn preset(name: &str, a: &Args) -> Result<Option<Vec<Segment>>, ScheduleError> {
    let mut out = Vec::new();
    match name {
        "funnel" | "lzs" => {
            let default_rate = if name == "funnel" { 50.0 } else { 10.0 };
            let load = a.or("load", Kind::Energy, -50.0)?;
            let depth = a.require("depth", Kind::Energy)?;
            let dwell = a.positive("dwell", Kind::Time, None)?;
            let rate = a.positive("rate", Kind::Rate, Some(default_rate))?;
            let mut way_in = Vec::new();
            ramp_to(&mut way_in, load, depth, (depth - load).abs() / rate);
            out.extend(&way_in);
            out.push(Segment::dwell(depth, dwell));
            mirror(&mut out, &way_in);
        }
        "exchange" => {
            let load = a.or("load", Kind::Energy, -50.0)?;
            let knee = a.or("knee", Kind::Energy, 50.0)?;
            let fast = a.positive("fast", Kind::Rate, Some(20.0))?;
            let far = a.or("far", Kind::Energy, 1000.0)?;
            let prep = a.positive("prep", Kind::Time, Some(2000.0))?;
            let plunge = a.positive("plunge", Kind::Time, Some(2.0))?;
            let depth = a.require("depth", Kind::Energy)?;
            let dwell = a.positive("dwell", Kind::Time, None)?;
            let mut way_in = Vec::new();
            ramp_to(&mut way_in, load, knee, (knee - load).abs() / fast);
            ramp_to(&mut way_in, knee, far, prep);
            ramp_to(&mut way_in, far, depth, plunge);
            out.extend(&way_in);
            out.push(Segment::dwell(depth, dwell));
            mirror(&mut out, &way_in);
        }
        "esr" => {
            let load = a.or("load", Kind::Energy, -50.0)?;
            let knee = a.or("knee", Kind::Energy, 50.0)?;
            let fast = a.positive("fast", Kind::Rate, Some(10.0))?;
            let rate = a.positive("rate", Kind::Rate, Some(0.5))?;
            let depth = a.require("depth", Kind::Energy)?;
            let drive = Drive {
                freq: a.require("freq", Kind::Frequency)?,
                amp: a.or("amp", Kind::Coupling, 0.02)?,
                phase: a.or("phase", Kind::Angle, 0.0)?,
            };
            let duration = a.positive("duration", Kind::Time, Some(25_000.0))?;
            let mut way_in = Vec::new();
            ramp_to(&mut way_in, load, knee, (knee - load).abs() / fast);
            ramp_to(&mut way_in, knee, depth, (depth - knee).abs() / rate);
            out.extend(&way_in);
            out.push(Segment::drive(depth, duration, drive));
            mirror(&mut out, &way_in);
        }
        _ => return Ok(None),
    }
    Ok(Some(out))
}

const PRESET_KEYS: &[&str] =
    &["depth", "dwell", "load", "rate", "knee", "fast", "far", "prep", "plunge", "freq", "amp", "duration", "phase"];

/// Parses a schedule file. Continuity of ε between consecutive segments is enforced.
pub fn parse_schedule(text: &str) -> Result<PulseSchedule, ScheduleError> {
    let mut segments: Vec<Segment> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        last_line = line;
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let (kind, rest) = (tokens[0], &tokens[1..]);
        let new: Vec<Segment> = match kind {
            "ramp" => {
                let a = Args::parse(line, rest, &["from", "to", "duration", "rate"])?;
                let (from, to) = (a.require("from", Kind::Energy)?, a.require("to", Kind::Energy)?);
                let duration = match (a.get("duration", Kind::Time)?, a.get("rate", Kind::Rate)?) {
                    (Some(d), None) => d,
                    (None, Some(r)) if r > 0.0 => (to - from).abs() / r,
                    (None, Some(r)) => return Err(ScheduleError { line, message: format!("rate must be positive, got {r}") }),
                    _ => return Err(ScheduleError { line, message: "ramp needs exactly one of `duration` or `rate`".into() }),
                };
                vec![Segment::ramp(from, to, duration)]
            }
            "dwell" => {
                let a = Args::parse(line, rest, &["eps", "duration"])?;
                vec![Segment::dwell(a.require("eps", Kind::Energy)?, a.require("duration", Kind::Time)?)]
            }
            "drive" => {
                let a = Args::parse(line, rest, &["eps", "duration", "freq", "amp", "phase"])?;
                let drive = Drive {
                    freq: a.require("freq", Kind::Frequency)?,
                    amp: a.require("amp", Kind::Coupling)?,
                    phase: a.or("phase", Kind::Angle, 0.0)?,
                };
                vec![Segment::drive(a.require("eps", Kind::Energy)?, a.require("duration", Kind::Time)?, drive)]
            }
            name => {
                let a = Args::parse(line, rest, PRESET_KEYS)?;
                preset(name, &a)?.ok_or_else(|| ScheduleError {
                    line,
                    message: format!("unknown directive or preset `{name}` (presets: funnel, lzs, exchange, esr)"),
                })?
            }
        };
        for seg in new {
            let index = segments.len();
            let d = seg.duration();
            if !(d > 0.0 && d.is_finite()) {
                return Err(ScheduleError { line, message: format!("segment {index}: duration must be positive, got {d} ns") });
            }
            if let Some(prev) = segments.last() {
                let (end, start) = (prev.eps_end(), seg.eps_start());
                if (end - start).abs() > CONTINUITY_TOL * end.abs().max(1.0) {
                    return Err(ScheduleError {
                        line,
                        message: format!("segment {index} starts at {start} µeV but segment {} ends at {end} µeV", index - 1),
                    });
                }
            }
            segments.push(seg);
        }
    }
    PulseSchedule::new(segments, InitialState::Ground02S).map_err(|e| ScheduleError { line: last_line, message: e.to_string() })
}

/// Writes the schedule as explicit segment lines. Only ground-state starts can be
/// written.
pub fn to_schedule_string(schedule: &PulseSchedule) -> Option<String> {
    if schedule.initial != InitialState::Ground02S {
        return None;
    }
    let e = |v: f64| quantity::format(v, Kind::Energy).replace(' ', "");
    let t = |v: f64| quantity::format(v, Kind::Time).replace(' ', "");
    let mut out = String::new();
    for seg in &schedule.segments {
        let line = match *seg {
            Segment::Ramp { eps_start, eps_end, duration } => {
                format!("ramp from={} to={} duration={}", e(eps_start), e(eps_end), t(duration))
            }
            Segment::Dwell { eps, duration } => format!("dwell eps={} duration={}", e(eps), t(duration)),
            Segment::Drive { eps, duration, drive } => format!(
                "drive eps={} duration={} freq={} amp={} phase={}",
                e(eps),
                t(duration),
                quantity::format(drive.freq, Kind::Frequency).replace(' ', ""),
                quantity::format(drive.amp, Kind::Coupling).replace(' ', ""),
                quantity::format(drive.phase, Kind::Angle).replace(' ', ""),
            ),
        };
        out.push_str(&line);
        out.push('\n');
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exchange_preset_shape() {
        let s = parse_schedule("exchange depth=30µeV dwell=100ns").unwrap();
        let kinds: Vec<&str> = s.segments.iter().map(Segment::kind).collect();
        assert_eq!(kinds, ["ramp", "ramp", "ramp", "dwell", "ramp", "ramp", "ramp"]);
        assert_eq!(s.segments[3], Segment::dwell(30.0, 100.0));
        assert_eq!(s.segments[1], Segment::ramp(50.0, 1000.0, 2000.0));
        assert_eq!(s.eps_start(), -50.0);
        assert_eq!(s.eps_end(), -50.0);
        assert_eq!(s.segments[0].duration(), 5.0);
    }

    #[test]
    fn explicit_file() {
        let text = "# funnel by hand\nramp from=-50ueV to=30ueV duration=20ns\ndwell eps=30ueV duration=100ns\nramp from=30ueV to=-50ueV rate=4ueV/ns\n";
        let s = parse_schedule(text).unwrap();
        assert_eq!(
            s.segments,
            vec![Segment::ramp(-50.0, 30.0, 20.0), Segment::dwell(30.0, 100.0), Segment::ramp(30.0, -50.0, 20.0)]
        );
    }

    #[test]
    fn gap_is_reported_with_segment_index() {
        let e = parse_schedule("ramp from=-50ueV to=30ueV duration=20ns\ndwell eps=35ueV duration=1ns\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("segment 1"), "{e}");
    }

    #[test]
    fn rejections() {
        assert!(parse_schedule("dwell eps=0ueV duration=-1ns").unwrap_err().message.contains("positive"));
        assert!(parse_schedule("wobble depth=3ueV").unwrap_err().message.contains("unknown directive or preset"));
        assert!(parse_schedule("funnel depth=3ueV").unwrap_err().message.contains("dwell"));
        assert!(parse_schedule("dwell eps=3 duration=1ns").unwrap_err().message.contains("unit"));
    }

    #[test]
    fn presets_round_trip_through_text() {
        for text in ["funnel depth=40ueV dwell=50ns", "lzs depth=30ueV dwell=3ns", "esr depth=800ueV freq=4.199GHz", "exchange depth=300ueV dwell=1us"] {
            let s = parse_schedule(text).unwrap();
            assert_eq!(parse_schedule(&to_schedule_string(&s).unwrap()).unwrap(), s);
        }
    }
}
