//! Device parameters, Hamiltonians and their spectra.

mod eigen;
mod hamiltonian;
mod levels;
mod params;

pub use eigen::{eigensystem, EigenSystem};
pub use hamiltonian::{
    build_h5, delta_theta, effective_h4, effective_h4_with, exchange_j, h5_real, mixing_angle,
    tunnel_coupling, Basis, Hamiltonian, T0Coupling, S02, S11, S_HYBRID, T_MINUS, T_PLUS, T_ZERO,
};
pub(crate) use levels::bisect;
pub use levels::{
    diabatic_crossing_gap, diabatic_levels, labeled_levels, polarized_partner, singlet_state,
    singlet_triplet_crossings, Level, Levels, Pair,
};
pub use params::DeviceParams;
pub use crate::units::to_frequency;
