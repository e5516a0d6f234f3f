use nalgebra::{DMatrix, Matrix5};
use num_complex::Complex64 as C64;

use super::DeviceParams;
use crate::units::to_frequency;

/// Basis indices of the five-level model.
pub const T_PLUS: usize = 0;
pub const T_ZERO: usize = 1;
pub const T_MINUS: usize = 2;
pub const S11: usize = 3;
pub const S02: usize = 4;

/// Index of the hybridized singlet in the effective four-level basis.
pub const S_HYBRID: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// {T+, T0, T−, S_H}
    Effective4,
    /// {T+, T0, T−, (1,1)S, (0,2)S}
    Full5,
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Basis::Effective4 => 4,
            Basis::Full5 => 5,
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Basis::Effective4 => &["T+", "T0", "T-", "S_H"],
            Basis::Full5 => &["T+", "T0", "T-", "(1,1)S", "(0,2)S"],
        }
    }
}

/// A Hermitian matrix in GHz together with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub basis: Basis,
    pub matrix: DMatrix<C64>,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Largest entrywise deviation from Hermiticity, GHz.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Form of the T0–S_H coupling in the effective four-level model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum T0Coupling {
    /// Projection of the five-level T0–(1,1)S element onto S_H: −(δE_Z/2)·cos(θ/2).
    #[default]
    Projected,
    /// δE_Z·cos θ, the literal entry of the published effective matrix.
    CosTheta,
}

/// Tunnel coupling at detuning `eps` (µeV), GHz.
pub fn tunnel_coupling(params: &DeviceParams, eps: f64) -> f64 {
    if params.tc_decay.is_infinite() {
        params.tc0
    } else {
        params.tc0 * (-eps.max(0.0) / params.tc_decay).exp()
    }
}

/// Charge mixing angle θ = −atan2(2·t_c, ε/h), in (−π, 0).
pub fn mixing_angle(tc: f64, eps: f64) -> f64 {
    -(2.0 * tc).atan2(to_frequency(eps))
}

/// Exchange splitting J(ε), GHz.
pub fn exchange_j(params: &DeviceParams, eps: f64) -> f64 {
    exchange_from(to_frequency(eps), tunnel_coupling(params, eps))
}

/// J for detuning frequency `f` and tunnel coupling `tc`, written to stay accurate
/// when f ≫ t_c (no cancellation).
pub(crate) fn exchange_from(f: f64, tc: f64) -> f64 {
    let r = (0.25 * f * f + tc * tc).sqrt();
    if f > 0.0 {
        tc * tc / (r + 0.5 * f)
    } else {
        r - 0.5 * f
    }
}

/// Spin-flip coupling Δ(θ) = Δ₁₁·cos(θ/2), MHz.
pub fn delta_theta(params: &DeviceParams, eps: f64) -> f64 {
    let theta = mixing_angle(tunnel_coupling(params, eps), eps);
    params.delta11 * (0.5 * theta).cos()
}

/// Real symmetric five-level matrix (GHz) used by the propagators.
///
/// Spin part from H_Z = Ē_Z(S_z1+S_z2) + (δE_Z/2)(S_z2−S_z1) with the singlet
/// written (↑↓−↓↑)/√2 in (dot 1, dot 2) order; this fixes the T0–(1,1)S element at
/// −δE_Z/2 so the S/T0 splitting tends to δE_Z deep in (1,1).
pub fn h5_real(params: &DeviceParams, eps: f64) -> Matrix5<f64> {
    let f = to_frequency(eps);
    let tc = tunnel_coupling(params, eps);
    let ez = params.ez_mean();
    let dez = params.ez_diff();
    let d = params.delta11_ghz();
    let mut h = Matrix5::zeros();
    h[(T_PLUS, T_PLUS)] = -0.5 * f + ez;
    h[(T_ZERO, T_ZERO)] = -0.5 * f;
    h[(T_MINUS, T_MINUS)] = -0.5 * f - ez;
    h[(S11, S11)] = -0.5 * f;
    h[(S02, S02)] = 0.5 * f;
    h[(S11, S02)] = tc;
    h[(S02, S11)] = tc;
    h[(T_ZERO, S11)] = -0.5 * dez;
    h[(S11, T_ZERO)] = -0.5 * dez;
    h[(T_PLUS, S11)] = d;
    h[(S11, T_PLUS)] = d;
    h[(T_MINUS, S11)] = -d;
    h[(S11, T_MINUS)] = -d;
    h
}

/// Five-level Hamiltonian in {T+, T0, T−, (1,1)S, (0,2)S}.
pub fn build_h5(params: &DeviceParams, eps: f64) -> Hamiltonian {
    let h = h5_real(params, eps);
    Hamiltonian {
        basis: Basis::Full5,
        matrix: DMatrix::from_fn(5, 5, |i, j| C64::new(h[(i, j)], 0.0)),
    }
}

/// Effective four-level Hamiltonian in {T+, T0, T−, S_H} with the projected T0 coupling.
pub fn effective_h4(params: &DeviceParams, eps: f64) -> Hamiltonian {
    effective_h4_with(params, eps, T0Coupling::default())
}

pub fn effective_h4_with(params: &DeviceParams, eps: f64, coupling: T0Coupling) -> Hamiltonian {
    let f = to_frequency(eps);
    let tc = tunnel_coupling(params, eps);
    let theta = mixing_angle(tc, eps);
    let j = exchange_from(f, tc);
    let ez = params.ez_mean();
    let dez = params.ez_diff();
    let d = params.delta11_ghz() * (0.5 * theta).cos();
    let t0 = match coupling {
        T0Coupling::Projected => -0.5 * dez * (0.5 * theta).cos(),
        T0Coupling::CosTheta => dez * theta.cos(),
    };
    let mut m = DMatrix::<C64>::zeros(4, 4);
    let re = |x: f64| C64::new(x, 0.0);
    m[(T_PLUS, T_PLUS)] = re(ez - 0.5 * f);
    m[(T_ZERO, T_ZERO)] = re(-0.5 * f);
    m[(T_MINUS, T_MINUS)] = re(-ez - 0.5 * f);
    m[(S_HYBRID, S_HYBRID)] = re(-0.5 * f - j);
    for (k, v) in [(T_PLUS, d), (T_ZERO, t0), (T_MINUS, -d)] {
        m[(k, S_HYBRID)] = re(v);
        m[(S_HYBRID, k)] = re(v);
    }
    Hamiltonian { basis: Basis::Effective4, matrix: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference() -> DeviceParams {
        DeviceParams { b_offset: 0.0, ..DeviceParams::default() }
    }

    #[test]
    fn tunnel_coupling_forms() {
        let p = DeviceParams { tc_decay: f64::INFINITY, ..reference() };
        assert_eq!(tunnel_coupling(&p, 0.0), 1.864);
        assert_eq!(tunnel_coupling(&p, 800.0), 1.864);
        let p = DeviceParams { tc_decay: 300.0, ..reference() };
        assert!((tunnel_coupling(&p, 300.0) - 1.864 / std::f64::consts::E).abs() < 1e-12);
        assert!((tunnel_coupling(&p, 300.0) - 0.6857).abs() < 1e-4);
        // no growth on the (0,2) side
        assert_eq!(tunnel_coupling(&p, -100.0), 1.864);
    }

    #[test]
    fn mixing_angle_limits() {
        assert!((mixing_angle(1.864, 0.0) + PI / 2.0).abs() < 1e-15);
        let eps = crate::units::to_energy(2.0 * 1.864);
        assert!((mixing_angle(1.864, eps) + PI / 4.0).abs() < 1e-12);
        let th = mixing_angle(1e-9, 100.0);
        assert!(th < 0.0 && th > -1e-6);
    }

    #[test]
    fn exchange_closed_form() {
        let p = DeviceParams { tc_decay: f64::INFINITY, ..reference() };
        assert!((exchange_j(&p, 0.0) - 1.864).abs() < 1e-12);
        let eps = crate::units::to_energy(100.0);
        let j = exchange_j(&p, eps);
        assert!((j - 0.034733).abs() < 1e-6, "{j}");
        assert!((j - 1.864f64.powi(2) / 100.0).abs() / j < 1e-3);
        // no cancellation loss far in (1,1)
        let direct = ((100.0f64).powi(2) / 4.0 + 1.864f64.powi(2)).sqrt() - 50.0;
        assert!((j - direct).abs() < 1e-12);
    }

    #[test]
    fn delta_theta_limits() {
        let p = reference();
        assert!((delta_theta(&p, 0.0) - p.delta11 / 2f64.sqrt()).abs() < 1e-12);
        let far = DeviceParams { tc_decay: f64::INFINITY, ..p.clone() };
        assert!((delta_theta(&far, 1e7) - p.delta11).abs() < 1e-6);
        let zero = DeviceParams { delta11: 0.0, ..p };
        assert_eq!(delta_theta(&zero, 40.0), 0.0);
    }

    #[test]
    fn h5_block_structure() {
        let p = DeviceParams { g1: 2.0, g2: 2.0, delta11: 0.0, b0z: 0.0, b_offset: 0.0, ..reference() };
        let h = h5_real(&p, 0.0);
        for i in 0..3 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
        let block = nalgebra::Matrix2::new(h[(3, 3)], h[(3, 4)], h[(4, 3)], h[(4, 4)]);
        let ev = block.symmetric_eigenvalues();
        assert!(((ev[0] - ev[1]).abs() - 2.0 * 1.864).abs() < 1e-12);
    }

    #[test]
    fn zeeman_scales() {
        let p = DeviceParams { g1: 2.0, g2: 2.0, b0z: 150.0, ..reference() };
        assert!((p.ez_mean() - 4.19887).abs() < 1e-5);
        let p = DeviceParams { b0z: 150.0, ..reference() };
        assert!((p.ez_diff() * 1e3 - 0.903).abs() < 5e-4);
    }

    #[test]
    fn builders_are_hermitian() {
        let p = DeviceParams { b0z: 120.0, ..reference() };
        for eps in [-80.0, 0.0, 35.0, 400.0] {
            assert!(build_h5(&p, eps).hermiticity_error() < 1e-12);
            assert!(effective_h4(&p, eps).hermiticity_error() < 1e-12);
            assert!(effective_h4_with(&p, eps, T0Coupling::CosTheta).hermiticity_error() < 1e-12);
        }
    }
}
