//! Design calculators for physical implementations, in SI units.

mod cpw;
mod fiber;

use serde::Serialize;
use thiserror::Error;

use crate::quad::QuadError;

pub use cpw::{
    cpw_coupling, cpw_coupling_profile, cpw_field, cpw_mode_integral, cpw_mode_volume, CpwCoupling, CpwParams,
    MODE_INTEGRAL_HEIGHT,
};
pub use fiber::{
    fiber_band, fiber_sweep, free_hopping, FiberBand, FiberParams, FiberSweepPoint, CHECK_CUTOFF,
    CONVERGENCE_TOL, PARAXIAL_LIMIT, PLANE_WAVE_CUTOFF, QUASI_MOMENTUM_POINTS,
};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatformError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("plane-wave expansion not converged: band edges move by {shift:.2e} of the bandwidth")]
    NotConverged { shift: f64 },
    #[error("field requested at or below the surface (y = {0})")]
    BelowSurface(f64),
    #[error("field is singular at the electrode edge z = {z}")]
    OnElectrodeEdge { z: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Maps between SI quantities and the dimensionless units `J = a = ħ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitScale {
    /// `J` (rad/s).
    pub hopping: f64,
    /// `a` (m).
    pub lattice_constant: f64,
}

impl UnitScale {
    pub fn new(hopping: f64, lattice_constant: f64) -> Result<Self, PlatformError> {
        if !(hopping > 0.0 && hopping.is_finite()) {
            return Err(PlatformError::InvalidParameter {
                name: "J",
                value: hopping,
            });
        }
        if !(lattice_constant > 0.0 && lattice_constant.is_finite()) {
            return Err(PlatformError::InvalidParameter {
                name: "a",
                value: lattice_constant,
            });
        }
        Ok(Self {
            hopping,
            lattice_constant,
        })
    }

    /// `c̄ = 2Ja` (m/s).
    pub fn cbar(&self) -> f64 {
        2.0 * self.hopping * self.lattice_constant
    }

    pub fn rate_to_units(&self, rate: f64) -> f64 {
        rate / self.hopping
    }

    pub fn rate_to_si(&self, rate: f64) -> f64 {
        rate * self.hopping
    }

    pub fn time_to_units(&self, seconds: f64) -> f64 {
        seconds * self.hopping
    }

    pub fn time_to_si(&self, t: f64) -> f64 {
        t / self.hopping
    }

    pub fn length_to_units(&self, metres: f64) -> f64 {
        metres / self.lattice_constant
    }

    pub fn length_to_si(&self, z: f64) -> f64 {
        z * self.lattice_constant
    }

    /// Velocity in units of `Ja` (so `c̄ = 2`).
    pub fn velocity_to_units(&self, v: f64) -> f64 {
        v / (self.hopping * self.lattice_constant)
    }

    pub fn velocity_to_si(&self, v: f64) -> f64 {
        v * self.hopping * self.lattice_constant
    }
}
