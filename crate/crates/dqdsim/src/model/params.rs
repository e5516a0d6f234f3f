use crate::error::{Error, Result};
use crate::readout::SensorParams;
use crate::units::{self, MU_B_GHZ_PER_T};

/// Every physical parameter of the double-dot model.
///
/// Units follow the field docs; conversion to GHz happens in the accessor methods.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    /// Tunnel coupling at zero detuning, GHz.
    pub tc0: f64,
    /// Decay scale of the tunnel coupling with detuning, µeV. `f64::INFINITY` keeps it constant.
    pub tc_decay: f64,
    /// Singlet/polarized-triplet coupling in the (1,1) channel, MHz.
    pub delta11: f64,
    /// Effective g-factor of dot 1.
    pub g1: f64,
    /// Effective g-factor of dot 2.
    pub g2: f64,
    /// Applied field, mT.
    pub b0z: f64,
    /// Residual offset field, mT.
    pub b_offset: f64,
    /// Charging energy, meV. Only used for the validity bound.
    pub e_charging: f64,
    /// (0,2) singlet-triplet splitting as a fraction of the charging energy.
    pub valley_frac: f64,
    /// Quasi-static detuning noise, µeV (standard deviation).
    pub sigma_eps: f64,
    /// Quasi-static fluctuation of the singlet/triplet coupling, kHz.
    pub sigma_delta: f64,
    pub sensor: SensorParams,
}

impl Default for DeviceParams {
    fn default() -> Self {
        let dg = 0.43e-3;
        DeviceParams {
            tc0: 1.864,
            tc_decay: 500.0,
            delta11: 0.196,
            g1: 2.0 - dg / 2.0,
            g2: 2.0 + dg / 2.0,
            b0z: 0.0,
            b_offset: -1.04,
            e_charging: 15.0,
            valley_frac: 0.017,
            sigma_eps: 0.0,
            sigma_delta: 0.0,
            sensor: SensorParams::default(),
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite, got {v}")))
            }
        };
        finite("tc0", self.tc0)?;
        if self.tc0 <= 0.0 {
            return Err(Error::param("tc0", format!("must be > 0, got {}", self.tc0)));
        }
        if self.tc_decay.is_nan() || self.tc_decay <= 0.0 {
            return Err(Error::param("tc_decay", format!("must be > 0, got {}", self.tc_decay)));
        }
        for (name, g) in [("g1", self.g1), ("g2", self.g2)] {
            finite(name, g)?;
            if g <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {g}")));
            }
        }
        finite("delta11", self.delta11)?;
        finite("b0z", self.b0z)?;
        finite("b_offset", self.b_offset)?;
        for (name, s) in [("sigma_eps", self.sigma_eps), ("sigma_delta", self.sigma_delta)] {
            finite(name, s)?;
            if s < 0.0 {
                return Err(Error::param(name, format!("must be ≥ 0, got {s}")));
            }
        }
        if !(self.e_charging > 0.0) || !self.e_charging.is_finite() {
            return Err(Error::param("e_charging", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.valley_frac) {
            return Err(Error::param("valley_frac", "must lie in [0, 1]"));
        }
        self.sensor.validate()
    }

    /// Net field B₀ + B_offset, mT.
    #[inline]
    pub fn b_net(&self) -> f64 {
        self.b0z + self.b_offset
    }

    #[inline]
    pub fn g_mean(&self) -> f64 {
        0.5 * (self.g1 + self.g2)
    }

    /// Mean Zeeman splitting, GHz.
    #[inline]
    pub fn ez_mean(&self) -> f64 {
        units::zeeman(self.g_mean(), self.b_net())
    }

    /// Zeeman difference (dot 2 minus dot 1), GHz.
    #[inline]
    pub fn ez_diff(&self) -> f64 {
        (self.g2 - self.g1) * MU_B_GHZ_PER_T * self.b_net() * 1e-3
    }

    /// Singlet/polarized-triplet coupling, GHz.
    #[inline]
    pub fn delta11_ghz(&self) -> f64 {
        units::mhz(self.delta11)
    }

    /// Detuning below which (0,2) triplets would enter the spectrum, µeV.
    pub fn valley_bound(&self) -> f64 {
        self.e_charging * 1e3 * self.valley_frac
    }

    /// Warning text when `eps` leaves the range where the five-level truncation holds.
    ///
    /// Deep in (0,2) the omitted (0,2) triplets come down past the (1,1) manifold once
    /// −ε exceeds the valley splitting; the (1,1) side carries no such limit.
    pub fn validity_warning(&self, eps: f64) -> Option<String> {
        let bound = self.valley_bound();
        (eps < -bound).then(|| {
            format!("detuning {eps} µeV lies beyond the (0,2) valley bound of −{bound:.1} µeV")
        })
    }

    /// Copy with the field replaced.
    pub fn with_field(&self, b0z: f64) -> Self {
        DeviceParams { b0z, ..self.clone() }
    }
}
