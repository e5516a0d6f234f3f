use nalgebra::Vector5;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::Basis;

/// Tolerance (µeV) on ε continuity between consecutive segments.
const CONTINUITY_TOL: f64 = 1e-9;

/// Microwave drive of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    /// Carrier frequency, GHz.
    pub freq: f64,
    /// Rabi frequency at the mean g-factor, MHz.
    pub amp: f64,
    /// Carrier phase, rad.
    pub phase: f64,
}

/// One piece of a detuning program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Linear detuning ramp.
    Ramp { eps_start: f64, eps_end: f64, duration: f64 },
    /// Constant detuning.
    Dwell { eps: f64, duration: f64 },
    /// Constant detuning with a microwave drive.
    Drive { eps: f64, duration: f64, drive: Drive },
}

impl Segment {
    pub fn ramp(eps_start: f64, eps_end: f64, duration: f64) -> Self {
        Segment::Ramp { eps_start, eps_end, duration }
    }

    /// Ramp between two detunings at a fixed rate (µeV/ns).
    pub fn ramp_at_rate(eps_start: f64, eps_end: f64, rate: f64) -> Self {
        Segment::Ramp { eps_start, eps_end, duration: (eps_end - eps_start).abs() / rate }
    }

    pub fn dwell(eps: f64, duration: f64) -> Self {
        Segment::Dwell { eps, duration }
    }

    pub fn drive(eps: f64, duration: f64, drive: Drive) -> Self {
        Segment::Drive { eps, duration, drive }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Segment::Ramp { .. } => "ramp",
            Segment::Dwell { .. } => "dwell",
            Segment::Drive { .. } => "drive",
        }
    }

    pub fn eps_start(&self) -> f64 {
        match *self {
            Segment::Ramp { eps_start, .. } => eps_start,
            Segment::Dwell { eps, .. } | Segment::Drive { eps, .. } => eps,
        }
    }

    pub fn eps_end(&self) -> f64 {
        match *self {
            Segment::Ramp { eps_end, .. } => eps_end,
            Segment::Dwell { eps, .. } | Segment::Drive { eps, .. } => eps,
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Ramp { duration, .. } | Segment::Dwell { duration, .. } | Segment::Drive { duration, .. } => {
                duration
            }
        }
    }

    /// Detuning at local time `t` ∈ [0, duration].
    pub fn eps_at(&self, t: f64) -> f64 {
        match *self {
            Segment::Ramp { eps_start, eps_end, duration } => eps_start + (eps_end - eps_start) * (t / duration),
            Segment::Dwell { eps, .. } | Segment::Drive { eps, .. } => eps,
        }
    }

    pub fn drive_params(&self) -> Option<Drive> {
        match *self {
            Segment::Drive { drive, .. } => Some(drive),
            _ => None,
        }
    }

    /// The same segment traversed backwards in ε.
    pub fn reversed(&self) -> Self {
        match *self {
            Segment::Ramp { eps_start, eps_end, duration } => Segment::Ramp { eps_start: eps_end, eps_end: eps_start, duration },
            other => other,
        }
    }

    /// The same segment with every detuning offset by `d_eps`.
    pub fn shifted(&self, d_eps: f64) -> Self {
        match *self {
            Segment::Ramp { eps_start, eps_end, duration } => {
                Segment::Ramp { eps_start: eps_start + d_eps, eps_end: eps_end + d_eps, duration }
            }
            Segment::Dwell { eps, duration } => Segment::Dwell { eps: eps + d_eps, duration },
            Segment::Drive { eps, duration, drive } => Segment::Drive { eps: eps + d_eps, duration, drive },
        }
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        let d = self.duration();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Schedule(format!("segment {index}: duration must be positive and finite, got {d} ns")));
        }
        if !self.eps_start().is_finite() || !self.eps_end().is_finite() {
            return Err(Error::Schedule(format!("segment {index}: non-finite detuning")));
        }
        if let Some(dr) = self.drive_params() {
            if !(dr.freq >= 0.0) || !dr.amp.is_finite() || !dr.phase.is_finite() {
                return Err(Error::Schedule(format!("segment {index}: invalid drive parameters")));
            }
        }
        Ok(())
    }
}

/// Starting state of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// The hybridized singlet at the schedule's first detuning (the (0,2)S ground state
    /// when that point lies deep in (0,2)).
    Ground02S,
    Custom(StateVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub segments: Vec<Segment>,
    pub initial: InitialState,
}

impl PulseSchedule {
    /// Builds and validates a schedule.
    pub fn new(segments: Vec<Segment>, initial: InitialState) -> Result<Self> {
        let s = PulseSchedule { segments, initial };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Schedule("schedule has no segments".into()));
        }
        for (k, seg) in self.segments.iter().enumerate() {
            seg.validate(k)?;
            if k > 0 {
                let prev = self.segments[k - 1].eps_end();
                if (seg.eps_start() - prev).abs() > CONTINUITY_TOL * prev.abs().max(1.0) {
                    return Err(Error::Schedule(format!(
                        "segment {k} starts at {} µeV but segment {} ends at {prev} µeV",
                        seg.eps_start(),
                        k - 1
                    )));
                }
            }
        }
        if let InitialState::Custom(s) = &self.initial {
            let n = s.norm_sqr();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::Schedule(format!("custom initial state has norm² {n}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn eps_start(&self) -> f64 {
        self.segments[0].eps_start()
    }

    pub fn eps_end(&self) -> f64 {
        self.segments[self.segments.len() - 1].eps_end()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    /// Detuning at absolute time `t`.
    pub fn eps_at(&self, t: f64) -> f64 {
        let mut t0 = 0.0;
        for seg in &self.segments {
            let d = seg.duration();
            if t <= t0 + d {
                return seg.eps_at((t - t0).max(0.0));
            }
            t0 += d;
        }
        self.eps_end()
    }

    /// The program played backwards in ε (segment order and ramp directions swapped).
    pub fn reversed(&self) -> Self {
        PulseSchedule {
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
            initial: self.initial.clone(),
        }
    }

    /// The program with every detuning offset by `d_eps`.
    pub fn shifted(&self, d_eps: f64) -> Self {
        PulseSchedule {
            segments: self.segments.iter().map(|s| s.shifted(d_eps)).collect(),
            initial: self.initial.clone(),
        }
    }
}

/// Normalized amplitudes over the five-level basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub amps: Vector5<C64>,
    pub basis: Basis,
}

impl StateVector {
    pub fn new(amps: Vector5<C64>) -> Self {
        StateVector { amps, basis: Basis::Full5 }
    }

    pub fn from_real(v: &Vector5<f64>) -> Self {
        Self::new(v.map(|x| C64::new(x, 0.0)))
    }

    pub fn basis_state(index: usize) -> Self {
        let mut v = Vector5::zeros();
        v[index] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn populations(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.amps[i].norm_sqr())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// |⟨v|self⟩|² for a real vector `v`.
    pub fn overlap_real(&self, v: &Vector5<f64>) -> f64 {
        self.amps.iter().zip(v.iter()).map(|(a, b)| a * *b).sum::<C64>().norm_sqr()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.amps.map(|z| z.conj()))
    }
}
