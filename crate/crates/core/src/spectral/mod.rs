//! Atom–photon bound states and the exactly cubic model of critical decay.

mod bound;
mod cubic;

use thiserror::Error;

use crate::quad::QuadError;

pub use bound::{
    bound_state_frequencies, diagonalize_comoving, BoundEigenstate, BoundState, BoundStateResult,
    ComovingSpectrum, MAX_ORACLE_SITES,
};
pub use cubic::{
    critical_rates, cubic_decay, cubic_i, cubic_scattering_state, decay_cutoff, spectral_weight, sum_rule,
    CriticalRates, CubicDecay, CubicModelParams, ScatteringState, TAIL_WEIGHT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("coupling must be positive, got {0}")]
    InvalidCoupling(f64),
    #[error("invalid band: J = {hopping}, a = {lattice_constant}")]
    InvalidBand { hopping: f64, lattice_constant: f64 },
    #[error("grid must be even and at most {MAX_ORACLE_SITES} sites, got {0}")]
    GridSize(usize),
    #[error("closed form is singular at k = 0")]
    ZeroWavevector,
    #[error("invalid time grid: t_max = {t_max}, dt = {dt}")]
    InvalidTimes { t_max: f64, dt: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}
