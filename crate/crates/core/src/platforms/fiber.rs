//! Axial band structure of a fiber whose radius is modulated periodically.

use std::f64::consts::PI;

use serde::Serialize;

use super::{PlatformError, HBAR, SPEED_OF_LIGHT};

/// Plane waves `|n| ≤ PLANE_WAVE_CUTOFF` in the central equation.
pub const PLANE_WAVE_CUTOFF: usize = 10;
/// Cutoff used to check convergence.
pub const CHECK_CUTOFF: usize = 14;
/// Quasi-momentum samples across the zone.
pub const QUASI_MOMENTUM_POINTS: usize = 201;
/// Allowed band-edge shift between the two cutoffs, relative to the bandwidth.
pub const CONVERGENCE_TOL: f64 = 1e-3;
/// Paraxial warning threshold on `δR/a`.
pub const PARAXIAL_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberParams {
    /// Unmodulated radius `R0` (m).
    pub radius: f64,
    pub refractive_index: f64,
    /// Cutoff angular frequency `ω_e` (rad/s).
    pub cutoff_frequency: f64,
    /// Modulation amplitude `δR` (m).
    pub modulation: f64,
    /// Modulation period `a` (m).
    pub period: f64,
}

impl FiberParams {
    pub fn validate(&self) -> Result<(), PlatformError> {
        for (name, value) in [
            ("R0", self.radius),
            ("n", self.refractive_index),
            ("omega_e", self.cutoff_frequency),
            ("a", self.period),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PlatformError::InvalidParameter { name, value });
            }
        }
        if !(self.modulation >= 0.0 && self.modulation < self.radius) {
            return Err(PlatformError::InvalidParameter {
                name: "deltaR",
                value: self.modulation,
            });
        }
        Ok(())
    }

    /// `m* = ω_e n² ħ / c²`.
    pub fn effective_mass(&self) -> f64 {
        self.cutoff_frequency * self.refractive_index.powi(2) * HBAR / SPEED_OF_LIGHT.powi(2)
    }

    /// Azimuthal order `ℓ` from `ω_e = ℓ c / (n R0)`.
    pub fn azimuthal_order(&self) -> f64 {
        self.cutoff_frequency * self.refractive_index * self.radius / SPEED_OF_LIGHT
    }

    /// Potential amplitude `V0 = ħ ω_e δR/R0` (J).
    pub fn potential(&self) -> f64 {
        HBAR * self.cutoff_frequency * self.modulation / self.radius
    }

    /// Radius variation `δr ≈ R0 ε / ω_e` matching an on-site frequency spread `ε`.
    pub fn radius_variation(&self, epsilon: f64) -> f64 {
        self.radius * epsilon / self.cutoff_frequency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberBand {
    /// Tunneling rate `J` (rad/s).
    pub hopping: f64,
    /// `c̄ = 2Ja` (m/s).
    pub cbar: f64,
    pub effective_mass: f64,
    pub potential: f64,
    /// `(q, E(q))` for the lowest band, energies in J.
    pub band: Vec<(f64, f64)>,
    /// Largest band-edge shift between cutoffs, relative to the bandwidth.
    pub convergence: f64,
    pub warnings: Vec<String>,
}

/// Lowest eigenvalue of the symmetric tridiagonal matrix by Sturm bisection.
pub(crate) fn lowest_eigenvalue(diag: &[f64], off: f64) -> f64 {
    let spread = 2.0 * off.abs();
    let mut lo = diag.iter().copied().fold(f64::INFINITY, f64::min) - spread;
    let mut hi = diag.iter().copied().fold(f64::INFINITY, f64::min) + spread;
    // Number of eigenvalues below x from the LDLᵀ pivots.
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for (i, &a) in diag.iter().enumerate() {
            let prev = if i == 0 { 0.0 } else { off * off / d };
            d = a - x - prev;
            if d == 0.0 {
                d = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    while count_below(hi) == 0 {
        hi += spread.max(1.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn lowest_band(params: &FiberParams, cutoff: usize) -> Vec<(f64, f64)> {
    let m = params.effective_mass();
    let a = params.period;
    let half_v = 0.5 * params.potential();
    let kinetic = HBAR * HBAR / (2.0 * m);
    let g = 2.0 * PI / a;
    (0..QUASI_MOMENTUM_POINTS)
        .map(|i| {
            let q = -PI / a + 2.0 * PI / a * i as f64 / (QUASI_MOMENTUM_POINTS - 1) as f64;
            let diag: Vec<f64> = (-(cutoff as i64)..=cutoff as i64)
                .map(|n| kinetic * (q + g * n as f64).powi(2))
                .collect();
            (q, lowest_eigenvalue(&diag, half_v))
        })
        .collect()
}

fn band_edges(band: &[(f64, f64)]) -> (f64, f64) {
    band.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, e)| {
        (lo.min(e), hi.max(e))
    })
}

/// Lowest band of `-(ħ²/2m*) ψ'' + V0 cos(2πz/a) ψ = E ψ` by plane-wave expansion.
pub fn fiber_band(params: &FiberParams) -> Result<FiberBand, PlatformError> {
    params.validate()?;
    let band = lowest_band(params, PLANE_WAVE_CUTOFF);
    let check = lowest_band(params, CHECK_CUTOFF);
    let (lo, hi) = band_edges(&band);
    let (lo2, hi2) = band_edges(&check);
    let width = hi2 - lo2;
    let convergence = ((lo - lo2).abs().max((hi - hi2).abs())) / width;
    if !(convergence <= CONVERGENCE_TOL) {
        return Err(PlatformError::NotConverged { shift: convergence });
    }
    let hopping = (hi - lo) / (4.0 * HBAR);
    let mut warnings = Vec::new();
    let ell = params.azimuthal_order();
    if params.modulation / params.radius >= 1.0 / ell {
        warnings.push(format!(
            "deltaR/R0 = {:.4} reaches 1/l = {:.4}: neighbouring transverse branches mix",
            params.modulation / params.radius,
            1.0 / ell
        ));
    }
    if params.modulation / params.period >= PARAXIAL_LIMIT {
        warnings.push(format!(
            "deltaR/a = {:.4} exceeds the paraxial threshold {PARAXIAL_LIMIT}",
            params.modulation / params.period
        ));
    }
    Ok(FiberBand {
        hopping,
        cbar: 2.0 * hopping * params.period,
        effective_mass: params.effective_mass(),
        potential: params.potential(),
        band,
        convergence,
        warnings,
    })
}

/// `J` for the unmodulated fiber: `ħπ²/(8 m* a²)`.
pub fn free_hopping(params: &FiberParams) -> f64 {
    HBAR * PI * PI / (8.0 * params.effective_mass() * params.period.powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberSweepPoint {
    pub period: f64,
    pub ratio: f64,
    /// `None` when the plane-wave expansion did not converge.
    pub hopping: Option<f64>,
    pub cbar: Option<f64>,
}

/// `J` and `c̄` over a grid of periods and modulation depths `δR/R0`.
pub fn fiber_sweep(base: &FiberParams, periods: &[f64], ratios: &[f64]) -> Vec<FiberSweepPoint> {
    let mut out = Vec::with_capacity(periods.len() * ratios.len());
    for &period in periods {
        for &ratio in ratios {
            let p = FiberParams {
                period,
                modulation: ratio * base.radius,
                ..*base
            };
            let band = fiber_band(&p).ok();
            out.push(FiberSweepPoint {
                period,
                ratio,
                hopping: band.as_ref().map(|b| b.hopping),
                cbar: band.as_ref().map(|b| b.cbar),
            });
        }
    }
    out
}
