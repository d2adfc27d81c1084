//! Perturbative emission rates, directionality, validity of the continuum
//! model, sideband channels, and comparisons between simulated runs.

mod fit;

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::band::{dos_comoving, lorentzian_weight, BandError, BandParams, ComovingFrame, ZONE_SCAN_POINTS};
use crate::dynamics::{wannier_profile, CouplingSpec, SimOutput, WANNIER_CUTOFF};
use crate::quad::{self, Tolerance};

pub use fit::{fit_decay, DecayFit, DecayModel, FitError, EXPONENTIAL_TRANSIENT, MIN_FIT_POINTS};

/// Rates below this (units of J) on both sides mark a point as off-band.
pub const OFF_BAND_RATE: f64 = 1e-14;

/// Default photon broadening used for directionality maps.
pub const DEFAULT_PHOTON_LOSS: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmissionError {
    #[error("photon broadening must be positive, got {0}")]
    NonPositiveBroadening(f64),
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("outputs hold {eff} and {full} atoms")]
    AtomCountMismatch { eff: usize, full: usize },
    #[error("t_f = {t_f} exceeds the simulated range {available}")]
    BeyondSeries { t_f: f64, available: f64 },
}

/// Emission rates into left (`k < 0`) and right (`k > 0`) moving modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub gamma_l: f64,
    pub gamma_r: f64,
}

impl RatePair {
    pub fn total(&self) -> f64 {
        self.gamma_l + self.gamma_r
    }
}

/// `Γ_side = 2ḡ² (a/2π) ∫_side dk (γ_p/2) / ((δ - ω̃_k)² + (γ_p/2)²)`.
///
/// For `γ_p → 0` and simple in-band roots this tends to `ḡ² a / |ṽ_g(k)|`
/// summed over the roots on each side.
pub fn emission_rates(
    delta: f64,
    frame: &ComovingFrame,
    gbar: f64,
    gamma_p: f64,
) -> Result<RatePair, EmissionError> {
    if !(gamma_p > 0.0) {
        return Err(EmissionError::NonPositiveBroadening(gamma_p));
    }
    let edge = frame.band.zone_edge();
    let scale = 2.0 * PI * gbar * gbar;
    let left = lorentzian_weight(delta, frame, gamma_p, -edge, 0.0, 1e-8)?;
    let right = lorentzian_weight(delta, frame, gamma_p, 0.0, edge, 1e-8)?;
    Ok(RatePair {
        gamma_l: scale * left,
        gamma_r: scale * right,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Directionality {
    /// `(Γ_L - Γ_R)/(Γ_L + Γ_R)`; positive means emission against `+z`.
    Value(f64),
    /// Both rates negligible: the atom does not radiate.
    OffBand,
}

impl Directionality {
    pub fn value(&self) -> Option<f64> {
        match self {
            Directionality::Value(d) => Some(*d),
            Directionality::OffBand => None,
        }
    }
}

pub fn directionality_from_rates(rates: &RatePair, hopping: f64) -> Directionality {
    let floor = OFF_BAND_RATE * hopping;
    if rates.gamma_l < floor && rates.gamma_r < floor {
        Directionality::OffBand
    } else {
        Directionality::Value((rates.gamma_l - rates.gamma_r) / rates.total())
    }
}

pub fn directionality(
    delta: f64,
    frame: &ComovingFrame,
    gbar: f64,
    gamma_p: f64,
) -> Result<Directionality, EmissionError> {
    let rates = emission_rates(delta, frame, gbar, gamma_p)?;
    Ok(directionality_from_rates(&rates, frame.band.hopping()))
}

/// Smallest `|v|` (in units of `c̄`) for which `Ω = 2π|v|/a` exceeds
/// `max_k |(δ + 2J cos ka) / (1 - ak/2π)|` on the zone grid.
pub fn validity_min_velocity(delta: f64, band: &BandParams) -> f64 {
    let a = band.lattice_constant();
    let j = band.hopping();
    let edge = band.zone_edge();
    let h = 2.0 * edge / ZONE_SCAN_POINTS as f64;
    let worst = (1..=ZONE_SCAN_POINTS)
        .map(|i| {
            let k = -edge + h * i as f64;
            ((delta + 2.0 * j * (k * a).cos()) / (1.0 - a * k / (2.0 * PI))).abs()
        })
        .fold(0.0, f64::max);
    worst * a / (2.0 * PI) / band.cbar()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sideband {
    pub n: i32,
    pub frequency: f64,
    pub in_band: bool,
    /// `2π ḡ² |u_n/u_0|² ρ(δ + nΩ)`; the weight is 1 without a Wannier profile.
    pub rate_estimate: f64,
    pub weight: f64,
}

/// Fourier weight `|u_n/u_0|²` of the periodic coupling profile seen by a
/// moving atom, by quadrature of the Gaussian Wannier function.
pub fn sideband_weight(n: i32, z0: f64, lattice_constant: f64) -> Result<f64, EmissionError> {
    let q = 2.0 * PI * n as f64 / lattice_constant;
    let reach = WANNIER_CUTOFF * z0;
    let tol = Tolerance::new(1e-15, 1e-12);
    let un = quad::integrate(
        |x: f64| wannier_profile(x, z0, lattice_constant) * (q * x).cos(),
        -reach,
        reach,
        tol,
    )
    .map_err(BandError::from)?
    .value;
    let u0 = quad::integrate(|x: f64| wannier_profile(x, z0, lattice_constant), -reach, reach, tol)
        .map_err(BandError::from)?
        .value;
    Ok((un / u0).powi(2))
}

/// Sideband channels `δ + nΩ` for `|n| ≤ n_max`, `n = 0` included.
pub fn sideband_classifier(
    delta: f64,
    frame: &ComovingFrame,
    gbar: f64,
    gamma_p: f64,
    coupling: Option<&CouplingSpec>,
    n_max: u32,
) -> Result<Vec<Sideband>, EmissionError> {
    if !(gamma_p > 0.0) {
        return Err(EmissionError::NonPositiveBroadening(gamma_p));
    }
    let (lo, hi) = frame.extremes();
    let omega = frame.modulation_frequency();
    let a = frame.band.lattice_constant();
    let n_max = n_max as i32;
    (-n_max..=n_max)
        .map(|n| {
            let frequency = delta + n as f64 * omega;
            let weight = match coupling {
                Some(CouplingSpec::Full { z0, .. }) => sideband_weight(n, *z0, a)?,
                _ => 1.0,
            };
            let dos = dos_comoving(frequency, frame, gamma_p)?;
            Ok(Sideband {
                n,
                frequency,
                in_band: frequency >= lo && frequency <= hi,
                rate_estimate: 2.0 * PI * gbar * gbar * weight * dos,
                weight,
            })
        })
        .collect()
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => values[i],
        Err(0) => values[0],
        Err(i) if i >= times.len() => values[times.len() - 1],
        Err(i) => {
            let (t0, t1) = (times[i - 1], times[i]);
            let w = (t - t0) / (t1 - t0);
            values[i - 1] * (1.0 - w) + values[i] * w
        }
    }
}

/// `max_{t ≤ t_f, i} |p_e^eff(t) - p_e^full(t)|`, resampling the second run
/// onto the first run's times when the grids differ.
pub fn discrepancy(eff: &SimOutput, full: &SimOutput, t_f: f64) -> Result<f64, EmissionError> {
    if eff.atom_count() != full.atom_count() {
        return Err(EmissionError::AtomCountMismatch {
            eff: eff.atom_count(),
            full: full.atom_count(),
        });
    }
    let slack = 1e-9 * t_f.abs().max(1.0);
    for out in [eff, full] {
        let last = out.times.last().copied().unwrap_or(0.0);
        if t_f > last + slack {
            return Err(EmissionError::BeyondSeries {
                t_f,
                available: last,
            });
        }
    }
    let same_grid = eff.times.len() == full.times.len()
        && eff.times.iter().zip(&full.times).all(|(a, b)| a == b);
    let mut d: f64 = 0.0;
    for i in 0..eff.atom_count() {
        for (n, &t) in eff.times.iter().enumerate() {
            if t > t_f + slack {
                break;
            }
            let other = if same_grid {
                full.populations[i][n]
            } else {
                interpolate(&full.times, &full.populations[i], t)
            };
            d = d.max((eff.populations[i][n] - other).abs());
        }
    }
    Ok(d)
}
