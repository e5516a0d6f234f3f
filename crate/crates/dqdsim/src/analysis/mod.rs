//! Parameter recovery from simulated data.

mod decay;
mod fft;
mod fit;
mod gap;
mod lm;
mod lz;
mod phase;

pub use decay::{fit_decay, DecayFit, Envelope};
pub use fft::{fft_peak, SpectralPeak};
pub use fit::{confidence_intervals, CiMethod, FitOptions, FitResult, Z95};
pub use gap::{fit_gap_model, GapModel, GapPoint};
pub use lm::LmOptions;
pub use lz::{fit_lz, lz_model};
pub use phase::{phase_along, stokes_offset, stueckelberg_phase};
