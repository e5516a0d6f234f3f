//! Pulse schedules and their time evolution.

mod drive;
mod evolve;
mod kernel;
mod prepare;
mod schedule;
mod velocity;

pub use drive::{esr_hamiltonian, Frame, SpinOperators};
pub use evolve::{
    compile, evolve, evolve_reverse, initial_state, propagate, propagate_adjoint, steps_for, EvolveOptions, Evolution,
    SegmentGrid, TimeGrid, TrajectoryPoint,
};
pub use prepare::{
    adiabatic_prepare, adiabatic_prepare_with, lz_diabatic, product_ground, PrepDiagnostics, PrepProtocol, Prepared,
};
pub use schedule::{Drive, InitialState, PulseSchedule, Segment, StateVector};
pub use velocity::{level_velocity, velocity_of};
