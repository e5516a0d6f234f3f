//! Transverse microwave drive in the five-level basis.

use nalgebra::Matrix5;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use super::kernel::half_spread_real;
use super::schedule::{Drive, Segment};
use crate::error::{Error, Result};
use crate::model::{h5_real, Basis, DeviceParams, Hamiltonian, S11, T_MINUS, T_PLUS, T_ZERO};
use crate::units::mhz;

/// Which frame drive segments are integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    /// Full carrier, cos(2πft + φ) modulation.
    Lab,
    /// Frame co-rotating with the carrier about z, counter-rotating terms dropped.
    #[default]
    Rotating,
}

/// Single-spin operators Sx, Sy of each dot and total Sz, restricted to the basis
/// {T+, T0, T−, (1,1)S, (0,2)S}. The (0,2)S row and column are zero.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx1: Matrix5<C64>,
    pub sx2: Matrix5<C64>,
    pub sy1: Matrix5<C64>,
    pub sy2: Matrix5<C64>,
    pub sz: Matrix5<C64>,
}

fn hermitian_from(entries: &[(usize, usize, C64)]) -> Matrix5<C64> {
    let mut m = Matrix5::zeros();
    for &(i, j, z) in entries {
        m[(i, j)] = z;
        m[(j, i)] = z.conj();
    }
    m
}

impl SpinOperators {
    pub fn new() -> Self {
        let c = 0.5 * FRAC_1_SQRT_2;
        let re = |x: f64| C64::new(x, 0.0);
        let im = |x: f64| C64::new(0.0, x);
        let sx1 = hermitian_from(&[(T_PLUS, T_ZERO, re(c)), (T_PLUS, S11, re(-c)), (T_MINUS, T_ZERO, re(c)), (T_MINUS, S11, re(c))]);
        let sx2 = hermitian_from(&[(T_PLUS, T_ZERO, re(c)), (T_PLUS, S11, re(c)), (T_MINUS, T_ZERO, re(c)), (T_MINUS, S11, re(-c))]);
        let sy1 = hermitian_from(&[(T_PLUS, T_ZERO, im(-c)), (T_PLUS, S11, im(c)), (T_MINUS, T_ZERO, im(c)), (T_MINUS, S11, im(c))]);
        let sy2 = hermitian_from(&[(T_PLUS, T_ZERO, im(-c)), (T_PLUS, S11, im(-c)), (T_MINUS, T_ZERO, im(c)), (T_MINUS, S11, im(-c))]);
        let mut sz = Matrix5::zeros();
        sz[(T_PLUS, T_PLUS)] = re(1.0);
        sz[(T_MINUS, T_MINUS)] = re(-1.0);
        SpinOperators { sx1, sx2, sy1, sy2, sz }
    }
}

impl Default for SpinOperators {
    fn default() -> Self {
        Self::new()
    }
}

/// Per-dot Rabi rates (GHz): Ω·g_i/ḡ.
pub(crate) fn rabi_rates(params: &DeviceParams, drive: &Drive) -> (f64, f64) {
    let omega = mhz(drive.amp);
    let g = params.g_mean();
    (omega * params.g1 / g, omega * params.g2 / g)
}

/// Drive operator without time dependence: Ω₁Sx₁ + Ω₂Sx₂.
pub(crate) fn drive_x(ops: &SpinOperators, params: &DeviceParams, drive: &Drive) -> Matrix5<C64> {
    let (o1, o2) = rabi_rates(params, drive);
    ops.sx1 * C64::new(o1, 0.0) + ops.sx2 * C64::new(o2, 0.0)
}

/// Static part with the Δ couplings to T± removed; those oscillate at the carrier
/// frequency in the rotating frame and average out.
fn static_secular(params: &DeviceParams, eps: f64) -> Matrix5<f64> {
    let mut h = h5_real(params, eps);
    for t in [T_PLUS, T_MINUS] {
        h[(t, S11)] = 0.0;
        h[(S11, t)] = 0.0;
    }
    h
}

/// Time-independent rotating-frame Hamiltonian of a drive segment.
pub(crate) fn rotating_matrix(ops: &SpinOperators, params: &DeviceParams, eps: f64, drive: &Drive) -> Matrix5<C64> {
    let (o1, o2) = rabi_rates(params, drive);
    let (c, s) = (drive.phase.cos(), drive.phase.sin());
    static_secular(params, eps).map(|x| C64::new(x, 0.0)) - ops.sz * C64::new(drive.freq, 0.0)
        + (ops.sx1 * C64::new(o1 * c, 0.0) + ops.sy1 * C64::new(o1 * s, 0.0))
        + (ops.sx2 * C64::new(o2 * c, 0.0) + ops.sy2 * C64::new(o2 * s, 0.0))
}

/// Lab-frame Hamiltonian at absolute time `t`. The carrier amplitude is 2Ω so that
/// Ω is the Rabi frequency in both frames.
pub(crate) fn lab_matrix(ops: &SpinOperators, params: &DeviceParams, eps: f64, drive: &Drive, t: f64) -> Matrix5<C64> {
    let m = 2.0 * (TAU * drive.freq * t + drive.phase).cos();
    h5_real(params, eps).map(|x| C64::new(x, 0.0)) + drive_x(ops, params, drive) * C64::new(m, 0.0)
}

/// Bound on the lab-frame eigenfrequencies: static half-spread plus the carrier
/// amplitude ‖2(Ω₁Sx₁ + Ω₂Sx₂)‖ ≤ Ω₁ + Ω₂.
pub(crate) fn half_spread_drive(params: &DeviceParams, eps: f64, drive: &Drive) -> f64 {
    let (o1, o2) = rabi_rates(params, drive);
    half_spread_real(&h5_real(params, eps)) + o1.abs() + o2.abs()
}

/// diag(e^{i·sign·2πft·m}) with m the total spin projection.
pub(crate) fn frame_rotation(freq: f64, t: f64, sign: f64) -> [C64; 5] {
    let p = C64::from_polar(1.0, sign * TAU * freq * t);
    let one = C64::new(1.0, 0.0);
    let mut d = [one; 5];
    d[T_PLUS] = p;
    d[T_MINUS] = p.conj();
    d
}

/// Hamiltonian of a drive segment at absolute time `t` in the requested frame.
pub fn esr_hamiltonian(params: &DeviceParams, seg: &Segment, t: f64, frame: Frame) -> Result<Hamiltonian> {
    let Segment::Drive { eps, drive, .. } = *seg else {
        return Err(Error::Schedule(format!("esr_hamiltonian needs a drive segment, got {}", seg.kind())));
    };
    let ops = SpinOperators::new();
    let m = match frame {
        Frame::Lab => lab_matrix(&ops, params, eps, &drive, t),
        Frame::Rotating => rotating_matrix(&ops, params, eps, &drive),
    };
    Ok(Hamiltonian { basis: Basis::Full5, matrix: nalgebra::DMatrix::from_iterator(5, 5, m.iter().copied()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Matrix4};

    fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
        Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
    }

    /// Product basis |dot1 dot2⟩ ordered ↑↑, ↑↓, ↓↑, ↓↓ mapped to T+, T0, T−, S(1,1).
    fn coupled_basis() -> Matrix4<C64> {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        // columns are the coupled states in product coordinates
        Matrix4::from_columns(&[
            nalgebra::Vector4::new(o, z, z, z),
            nalgebra::Vector4::new(z, r, r, z),
            nalgebra::Vector4::new(z, z, z, o),
            nalgebra::Vector4::new(z, r, -r, z),
        ])
    }

    fn embed(m4: &Matrix4<C64>) -> Matrix5<C64> {
        let idx = [T_PLUS, T_ZERO, T_MINUS, S11];
        let mut m = Matrix5::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(idx[i], idx[j])] = m4[(i, j)];
            }
        }
        m
    }

    #[test]
    fn operators_match_product_basis_construction() {
        let h = C64::new(0.5, 0.0);
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        let sx = Matrix2::new(z, o, o, z) * h;
        let sy = Matrix2::new(z, -i, i, z) * h;
        let sz = Matrix2::new(o, z, z, -o) * h;
        let id = Matrix2::identity();
        let u = coupled_basis();
        let to_coupled = |m: Matrix4<C64>| embed(&(u.adjoint() * m * u));
        let ops = SpinOperators::new();
        assert!((to_coupled(kron(&sx, &id)) - ops.sx1).norm() < 1e-15);
        assert!((to_coupled(kron(&id, &sx)) - ops.sx2).norm() < 1e-15);
        assert!((to_coupled(kron(&sy, &id)) - ops.sy1).norm() < 1e-15);
        assert!((to_coupled(kron(&id, &sy)) - ops.sy2).norm() < 1e-15);
        assert!((to_coupled(kron(&sz, &id) + kron(&id, &sz)) - ops.sz).norm() < 1e-15);
    }

    #[test]
    fn quoted_drive_elements() {
        let p = DeviceParams { g1: 1.9, g2: 2.1, ..DeviceParams::default() };
        let d = Drive { freq: 4.2, amp: 3.0, phase: 0.0 };
        let (o1, o2) = rabi_rates(&p, &d);
        let m = drive_x(&SpinOperators::new(), &p, &d);
        let k = 2.0 * std::f64::consts::SQRT_2;
        assert!((m[(T_PLUS, T_ZERO)].re - (o1 + o2) / k).abs() < 1e-15);
        assert!((m[(T_ZERO, T_MINUS)].re - (o1 + o2) / k).abs() < 1e-15);
        assert!((m[(T_PLUS, S11)].re + (o1 - o2) / k).abs() < 1e-15);
        assert!((m[(S11, T_MINUS)].re - (o1 - o2) / k).abs() < 1e-15);
        assert!(m.row(crate::model::S02).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn equal_g_decouples_singlet() {
        let p = DeviceParams { g1: 2.0, g2: 2.0, ..DeviceParams::default() };
        let m = drive_x(&SpinOperators::new(), &p, &Drive { freq: 1.0, amp: 5.0, phase: 0.3 });
        assert!(m.row(S11).iter().all(|z| z.norm() < 1e-18));
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let p = DeviceParams { b0z: 150.0, delta11: 2.0, ..DeviceParams::default() };
        let seg = Segment::drive(300.0, 10.0, Drive { freq: 4.2, amp: 1.0, phase: 0.7 });
        for frame in [Frame::Lab, Frame::Rotating] {
            let h = esr_hamiltonian(&p, &seg, 1.234, frame).unwrap();
            assert!(h.hermiticity_error() < 1e-15);
        }
        assert!(esr_hamiltonian(&p, &Segment::dwell(0.0, 1.0), 0.0, Frame::Lab).is_err());
    }
}
