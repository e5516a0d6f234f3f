//! Physical constants and unit bridges.
//!
//! Internally every energy is stored as `E/h` in GHz and every time in ns, so a
//! phase is simply `2π·f·t`. Conversions happen at the boundary.

/// Planck constant expressed as µeV per GHz.
pub const H_UEV_PER_GHZ: f64 = 4.135_667_696;

/// Bohr magneton over h, in GHz per tesla.
pub const MU_B_GHZ_PER_T: f64 = 13.996_244_9;

/// Converts an energy in µeV to a frequency in GHz.
#[inline]
pub fn to_frequency(energy_uev: f64) -> f64 {
    energy_uev / H_UEV_PER_GHZ
}

/// Converts a frequency in GHz to an energy in µeV.
#[inline]
pub fn to_energy(freq_ghz: f64) -> f64 {
    freq_ghz * H_UEV_PER_GHZ
}

/// MHz → GHz.
#[inline]
pub fn mhz(f: f64) -> f64 {
    f * 1e-3
}

/// kHz → GHz.
#[inline]
pub fn khz(f: f64) -> f64 {
    f * 1e-6
}

/// Level velocity in GHz/ns → Hz/s.
#[inline]
pub fn ghz_per_ns_to_hz_per_s(v: f64) -> f64 {
    v * 1e18
}

/// Level velocity in Hz/s → GHz/ns.
#[inline]
pub fn hz_per_s_to_ghz_per_ns(v: f64) -> f64 {
    v * 1e-18
}

/// Zeeman frequency (GHz) of a spin with g-factor `g` in a field of `b_mt` millitesla.
#[inline]
pub fn zeeman(g: f64, b_mt: f64) -> f64 {
    g * MU_B_GHZ_PER_T * b_mt * 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_bridge() {
        assert_eq!(to_frequency(0.0), 0.0);
        assert!((to_frequency(4.135_667_696) - 1.0).abs() < 1e-15);
        // 0.6 meV operating point
        assert!((to_frequency(600.0) - 145.0794).abs() < 1e-3);
        assert!((to_energy(to_frequency(123.4)) - 123.4).abs() < 1e-12);
    }

    #[test]
    fn zeeman_at_150_mt() {
        assert!((zeeman(2.0, 150.0) - 4.198_873_47).abs() < 1e-8);
    }
}
