//! Device configuration files.
//!
//! TOML with four tables. Dimensional values are strings carrying a unit; plain
//! numbers are accepted only for dimensionless keys.
//!
//! ```toml
//! [hamiltonian]
//! tc0 = "1.864 GHz"      # required
//! g1 = 1.999785          # required
//! g2 = 2.000215          # required
//! tc_decay = "500 ueV"   # "inf ueV" for a constant tunnel coupling
//! delta11 = "0.196 MHz"
//! e_charging = "15 meV"
//! valley_frac = 0.017
//!
//! [field]
//! b0z = "150 mT"         # required
//! b_offset = "-1.04 mT"
//!
//! [noise]
//! sigma_eps = "0 ueV"
//! sigma_delta = "0 kHz"
//!
//! [sensor]
//! sigma_current = "10 pA"
//! standard_singlet = "0 pA"
//! standard_triplet = "20.7 pA"
//! latched_singlet = "0 pA"
//! latched_triplet = "46.5 pA"
//! latch_success = 1.0
//! prep_error = 0.0
//! ```

use serde::Deserialize;
use toml::{Spanned, Value};

use crate::quantity::{self, Kind};
use dqdsim::model::DeviceParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", match .line { Some((l, c)) => format!("line {l}, column {c}: {message}"), None => message.clone() })]
pub struct ConfigError {
    pub line: Option<(usize, usize)>,
    pub message: String,
}

type Field = Option<Spanned<Value>>;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Hamiltonian {
    tc0: Field,
    tc_decay: Field,
    delta11: Field,
    g1: Field,
    g2: Field,
    e_charging: Field,
    valley_frac: Field,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FieldTable {
    b0z: Field,
    b_offset: Field,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Noise {
    sigma_eps: Field,
    sigma_delta: Field,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Sensor {
    sigma_current: Field,
    standard_singlet: Field,
    standard_triplet: Field,
    latched_singlet: Field,
    latched_triplet: Field,
    latch_success: Field,
    prep_error: Field,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    hamiltonian: Option<Hamiltonian>,
    field: Option<FieldTable>,
    noise: Option<Noise>,
    sensor: Option<Sensor>,
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

struct Reader<'a> {
    text: &'a str,
}

impl Reader<'_> {
    fn error(&self, v: &Spanned<Value>, message: String) -> ConfigError {
        ConfigError { line: Some(position(self.text, v.span().start)), message }
    }

    fn quantity(&self, key: &str, field: &Field, kind: Kind, default: f64) -> Result<f64, ConfigError> {
        let Some(v) = field else { return Ok(default) };
        match v.get_ref() {
            Value::String(s) => quantity::parse(s, kind).map_err(|e| self.error(v, format!("`{key}`: {e}"))),
            other => Err(self.error(v, format!("`{key}` must be a string with a unit, e.g. \"1 {}\", got {other}", kind.unit()))),
        }
    }

    fn number(&self, key: &str, field: &Field, default: f64) -> Result<f64, ConfigError> {
        let Some(v) = field else { return Ok(default) };
        match v.get_ref() {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            Value::String(s) => s.trim().parse().map_err(|_| self.error(v, format!("`{key}` must be a plain number, got \"{s}\""))),
            other => Err(self.error(v, format!("`{key}` must be a number, got {other}"))),
        }
    }
}

fn required<'a>(field: &'a Field, key: &str) -> Result<&'a Field, ConfigError> {
    match field {
        Some(_) => Ok(field),
        None => Err(ConfigError { line: None, message: format!("missing required key `{key}`") }),
    }
}

/// Parses and validates a device configuration. Optional keys default to
/// `DeviceParams::default()`.
pub fn parse_device_config(text: &str) -> Result<DeviceParams, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| position(text, s.start)),
        message: e.message().to_string(),
    })?;
    let r = Reader { text };
    let d = DeviceParams::default();
    let h = doc.hamiltonian.unwrap_or_default();
    let f = doc.field.unwrap_or_default();
    let n = doc.noise.unwrap_or_default();
    let s = doc.sensor.unwrap_or_default();
    let mut sensor = d.sensor.clone();
    sensor.sigma_current = r.quantity("sigma_current", &s.sigma_current, Kind::Current, sensor.sigma_current)?;
    sensor.standard.mu_singlet = r.quantity("standard_singlet", &s.standard_singlet, Kind::Current, sensor.standard.mu_singlet)?;
    sensor.standard.mu_triplet = r.quantity("standard_triplet", &s.standard_triplet, Kind::Current, sensor.standard.mu_triplet)?;
    sensor.latched.mu_singlet = r.quantity("latched_singlet", &s.latched_singlet, Kind::Current, sensor.latched.mu_singlet)?;
    sensor.latched.mu_triplet = r.quantity("latched_triplet", &s.latched_triplet, Kind::Current, sensor.latched.mu_triplet)?;
    sensor.latch_success = r.number("latch_success", &s.latch_success, sensor.latch_success)?;
    sensor.prep_error = r.number("prep_error", &s.prep_error, sensor.prep_error)?;
    let params = DeviceParams {
        tc0: r.quantity("tc0", required(&h.tc0, "hamiltonian.tc0")?, Kind::Frequency, d.tc0)?,
        tc_decay: r.quantity("tc_decay", &h.tc_decay, Kind::Energy, d.tc_decay)?,
        delta11: r.quantity("delta11", &h.delta11, Kind::Coupling, d.delta11)?,
        g1: r.number("g1", required(&h.g1, "hamiltonian.g1")?, d.g1)?,
        g2: r.number("g2", required(&h.g2, "hamiltonian.g2")?, d.g2)?,
        e_charging: r.quantity("e_charging", &h.e_charging, Kind::LargeEnergy, d.e_charging)?,
        valley_frac: r.number("valley_frac", &h.valley_frac, d.valley_frac)?,
        b0z: r.quantity("b0z", required(&f.b0z, "field.b0z")?, Kind::Field, d.b0z)?,
        b_offset: r.quantity("b_offset", &f.b_offset, Kind::Field, d.b_offset)?,
        sigma_eps: r.quantity("sigma_eps", &n.sigma_eps, Kind::Energy, d.sigma_eps)?,
        sigma_delta: r.quantity("sigma_delta", &n.sigma_delta, Kind::SmallFrequency, d.sigma_delta)?,
        sensor,
    };
    params.validate().map_err(|e| ConfigError { line: None, message: e.to_string() })?;
    Ok(params)
}

/// Writes every key; `parse_device_config` returns the same parameters.
pub fn to_config_string(p: &DeviceParams) -> String {
    let q = |v: f64, k: Kind| format!("\"{}\"", quantity::format(v, k));
    let s = &p.sensor;
    format!(
        "[hamiltonian]\ntc0 = {}\ntc_decay = {}\ndelta11 = {}\ng1 = {:?}\ng2 = {:?}\ne_charging = {}\nvalley_frac = {:?}\n\n\
         [field]\nb0z = {}\nb_offset = {}\n\n\
         [noise]\nsigma_eps = {}\nsigma_delta = {}\n\n\
         [sensor]\nsigma_current = {}\nstandard_singlet = {}\nstandard_triplet = {}\nlatched_singlet = {}\nlatched_triplet = {}\nlatch_success = {:?}\nprep_error = {:?}\n",
        q(p.tc0, Kind::Frequency),
        q(p.tc_decay, Kind::Energy),
        q(p.delta11, Kind::Coupling),
        p.g1,
        p.g2,
        q(p.e_charging, Kind::LargeEnergy),
        p.valley_frac,
        q(p.b0z, Kind::Field),
        q(p.b_offset, Kind::Field),
        q(p.sigma_eps, Kind::Energy),
        q(p.sigma_delta, Kind::SmallFrequency),
        q(s.sigma_current, Kind::Current),
        q(s.standard.mu_singlet, Kind::Current),
        q(s.standard.mu_triplet, Kind::Current),
        q(s.latched.mu_singlet, Kind::Current),
        q(s.latched.mu_triplet, Kind::Current),
        s.latch_success,
        s.prep_error,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[hamiltonian]\ntc0 = \"1.864 GHz\"\ng1 = 1.9998\ng2 = 2.0002\n\n[field]\nb0z = \"150 mT\"\n";

    #[test]
    fn minimal_file_takes_defaults() {
        let p = parse_device_config(MINIMAL).unwrap();
        assert_eq!(p.tc0, 1.864);
        assert_eq!(p.b0z, 150.0);
        assert_eq!(p.g1, 1.9998);
        assert_eq!(p.tc_decay, DeviceParams::default().tc_decay);
        assert_eq!(p.sensor, DeviceParams::default().sensor);
    }

    #[test]
    fn invariant_violation_names_the_key() {
        let e = parse_device_config(&MINIMAL.replace("1.864 GHz", "-1 GHz")).unwrap_err();
        assert!(e.message.contains("tc0"), "{e}");
    }

    #[test]
    fn unknown_key_and_missing_unit() {
        let e = parse_device_config(&format!("{MINIMAL}colour = 3\n")).unwrap_err();
        assert!(e.message.contains("colour") && e.line.is_some(), "{e}");
        let e = parse_device_config(&MINIMAL.replace("\"150 mT\"", "150")).unwrap_err();
        assert_eq!(e.line.map(|l| l.0), Some(7));
        let e = parse_device_config(&MINIMAL.replace("150 mT", "150 GHz")).unwrap_err();
        assert!(e.message.contains("b0z"), "{e}");
    }

    #[test]
    fn missing_required_key() {
        let e = parse_device_config("[field]\nb0z = \"1 mT\"\n").unwrap_err();
        assert!(e.message.contains("hamiltonian.tc0"));
    }

    #[test]
    fn serialization_round_trips() {
        let p = DeviceParams { tc_decay: f64::INFINITY, sigma_eps: 2.5, ..DeviceParams::default() };
        assert_eq!(parse_device_config(&to_config_string(&p)).unwrap(), p);
    }
}
