//! Numbers with mandatory unit suffixes, converted to the simulator's internal units.

/// Physical dimension of a value and its internal unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// µeV.
    Energy,
    /// GHz.
    Frequency,
    /// MHz; couplings and Rabi frequencies.
    Coupling,
    /// kHz; coupling noise.
    SmallFrequency,
    /// mT.
    Field,
    /// ns.
    Time,
    /// µeV/ns.
    Rate,
    /// pA.
    Current,
    /// rad.
    Angle,
    /// meV; charging energy.
    LargeEnergy,
}

impl Kind {
    /// Canonical suffix written on output.
    pub fn unit(self) -> &'static str {
        match self {
            Kind::Energy => "ueV",
            Kind::Frequency => "GHz",
            Kind::Coupling => "MHz",
            Kind::SmallFrequency => "kHz",
            Kind::Field => "mT",
            Kind::Time => "ns",
            Kind::Rate => "ueV/ns",
            Kind::Current => "pA",
            Kind::Angle => "rad",
            Kind::LargeEnergy => "meV",
        }
    }

    /// Accepted suffixes with their factor to the internal unit.
    fn units(self) -> &'static [(&'static str, f64)] {
        const ENERGY: &[(&str, f64)] = &[("ueV", 1.0), ("µeV", 1.0), ("μeV", 1.0), ("meV", 1e3), ("neV", 1e-3)];
        const FREQ: &[(&str, f64)] = &[("GHz", 1.0), ("MHz", 1e-3), ("kHz", 1e-6), ("Hz", 1e-9)];
        const FIELD: &[(&str, f64)] = &[("mT", 1.0), ("T", 1e3), ("uT", 1e-3), ("µT", 1e-3), ("μT", 1e-3)];
        const TIME: &[(&str, f64)] =
            &[("ns", 1.0), ("ps", 1e-3), ("us", 1e3), ("µs", 1e3), ("μs", 1e3), ("ms", 1e6), ("s", 1e9)];
        const RATE: &[(&str, f64)] = &[("ueV/ns", 1.0), ("µeV/ns", 1.0), ("μeV/ns", 1.0), ("meV/ns", 1e3), ("ueV/us", 1e-3)];
        const CURRENT: &[(&str, f64)] = &[("pA", 1.0), ("fA", 1e-3), ("nA", 1e3)];
        const ANGLE: &[(&str, f64)] = &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)];
        const COUPLING: &[(&str, f64)] = &[("MHz", 1.0), ("GHz", 1e3), ("kHz", 1e-3), ("Hz", 1e-6)];
        const SMALL: &[(&str, f64)] = &[("kHz", 1.0), ("MHz", 1e3), ("Hz", 1e-3)];
        const LARGE: &[(&str, f64)] = &[("meV", 1.0), ("ueV", 1e-3), ("µeV", 1e-3), ("μeV", 1e-3), ("eV", 1e3)];
        match self {
            Kind::Energy => ENERGY,
            Kind::Frequency => FREQ,
            Kind::Coupling => COUPLING,
            Kind::SmallFrequency => SMALL,
            Kind::Field => FIELD,
            Kind::Time => TIME,
            Kind::Rate => RATE,
            Kind::Current => CURRENT,
            Kind::Angle => ANGLE,
            Kind::LargeEnergy => LARGE,
        }
    }

    fn describe(self) -> String {
        self.units().iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
    }
}

/// Parses `"<number> <unit>"` (the space is optional), returning the value in the
/// internal unit of `kind`.
pub fn parse(text: &str, kind: Kind) -> Result<f64, String> {
    let text = text.trim();
    let split = (1..=text.len())
        .rev()
        .filter(|&i| text.is_char_boundary(i))
        .find(|&i| text[..i].trim_end().parse::<f64>().is_ok())
        .ok_or_else(|| format!("`{text}` does not start with a number"))?;
    let value: f64 = text[..split].trim_end().parse().expect("checked");
    let unit = text[split..].trim();
    if unit.is_empty() {
        return Err(format!("`{text}` needs a unit ({})", kind.describe()));
    }
    let factor = kind
        .units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| format!("unit `{unit}` is not one of {}", kind.describe()))?;
    Ok(value * factor)
}

/// Writes a value in the canonical unit; parses back to the same bits.
pub fn format(value: f64, kind: Kind) -> String {
    format!("{value:?} {}", kind.unit())
}
