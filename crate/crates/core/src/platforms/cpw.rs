//! Coplanar-waveguide resonator field from the conformal-map solution and the
//! resulting atom–photon coupling.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{PlatformError, EPSILON_0, HBAR};
use crate::quad::{self, Tolerance};

/// Height of the numerically integrated strip in units of `l2`; the rest of
/// the half plane is added from the `l1 l2 / t²` asymptote.
pub const MODE_INTEGRAL_HEIGHT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpwParams {
    /// Half-width of the central electrode (m).
    pub l1: f64,
    /// Half-distance between the ground planes (m).
    pub l2: f64,
    /// Resonator length `L_x` (m).
    pub length: f64,
    /// Mode frequency `ω0` (rad/s).
    pub omega0: f64,
    /// Atom height above the surface (m).
    pub atom_height: f64,
    /// Transition dipole moment (C m).
    pub dipole: f64,
    /// Resonator spacing (m).
    pub lattice_constant: f64,
    /// Depth of the ground plate; only recorded, its volume is neglected.
    #[serde(default)]
    pub ground_depth: Option<f64>,
}

impl CpwParams {
    pub fn validate(&self) -> Result<(), PlatformError> {
        for (name, value) in [
            ("l1", self.l1),
            ("l2", self.l2),
            ("Lx", self.length),
            ("omega0", self.omega0),
            ("y_a", self.atom_height),
            ("dipole", self.dipole),
            ("a", self.lattice_constant),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PlatformError::InvalidParameter { name, value });
            }
        }
        if self.l1 >= self.l2 {
            return Err(PlatformError::InvalidParameter {
                name: "l1",
                value: self.l1,
            });
        }
        Ok(())
    }
}

fn field_at(t: Complex64, l1: f64, l2: f64) -> Complex64 {
    // Product of principal roots: continuous in the upper half plane and
    // tending to t²/(l1 l2) at large |t|.
    let d = (t - l1).sqrt() * (t + l1).sqrt() * (t - l2).sqrt() * (t + l2).sqrt() / (l1 * l2);
    1.0 / d
}

/// `(E_z, E_y)` in units of `E0` at `t = z + iy`.
pub fn cpw_field(z: f64, y: f64, params: &CpwParams) -> Result<(f64, f64), PlatformError> {
    if !(y > 0.0) {
        return Err(PlatformError::BelowSurface(y));
    }
    let t = Complex64::new(z, y);
    for edge in [params.l1, params.l2] {
        if (t - edge).norm() < 1e-12 * edge || (t + edge).norm() < 1e-12 * edge {
            return Err(PlatformError::OnElectrodeEdge { z });
        }
    }
    let e = field_at(t, params.l1, params.l2);
    Ok((e.im, e.re))
}

fn intensity(z: f64, y: f64, l1: f64, l2: f64) -> f64 {
    field_at(Complex64::new(z, y), l1, l2).norm_sqr()
}

/// `∬ |E/E0|² dz dy` over all `z` and `0 < y ≤ y_max` (m²).
pub fn cpw_mode_integral(params: &CpwParams, y_max: f64) -> Result<f64, PlatformError> {
    params.validate()?;
    let (l1, l2) = (params.l1, params.l2);
    let inner_tol = Tolerance::new(1e-12 * l1 * l2, 1e-9).with_max_intervals(20_000);
    let mut failure = None;
    // |E|² is even in z.
    let row = |y: f64| -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let span = l2 + 50.0 * y.max(l2);
        let breaks = [l1, l2];
        let near = quad::integrate_with_breaks(|z: f64| intensity(z, y, l1, l2), 0.0, span, &breaks, inner_tol);
        let far = quad::integrate_to_infinity(|z: f64| intensity(z, y, l1, l2), span, inner_tol);
        match (near, far) {
            (Ok(a), Ok(b)) => 2.0 * (a.value + b.value),
            (Err(e), _) | (_, Err(e)) => {
                failure = Some(e);
                f64::NAN
            }
        }
    };
    let mut breaks: Vec<f64> = (1..=12).map(|m| l1 * 10f64.powi(-m)).collect();
    breaks.extend([l1, l2, 2.0 * l2, 5.0 * l2]);
    let outer = quad::integrate_with_breaks(
        row,
        0.0,
        y_max,
        &breaks,
        Tolerance::new(1e-10 * l1 * l2, 1e-7).with_max_intervals(20_000),
    );
    if let Some(e) = failure {
        return Err(PlatformError::Quadrature(e));
    }
    Ok(outer?.value)
}

/// Analytic contribution of `y > y_max` from `|E/E0|² ≈ (l1 l2)² / |t|⁴`.
fn mode_tail(params: &CpwParams, y_max: f64) -> f64 {
    PI * (params.l1 * params.l2).powi(2) / (4.0 * y_max * y_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpwCoupling {
    /// Mode volume `V_r` (m³).
    pub mode_volume: f64,
    /// Field per photon `E0` (V/m).
    pub e0: f64,
    /// Peak coupling `g0` above the centre of the electrode (rad/s).
    pub g0: f64,
    /// Cell-averaged coupling `ḡ` (rad/s).
    pub gbar: f64,
}

/// Mode volume from `ε0 (L_x/2) ∬ |E|² = ħω0/2` above the chip.
pub fn cpw_mode_volume(params: &CpwParams) -> Result<f64, PlatformError> {
    let y_max = MODE_INTEGRAL_HEIGHT * params.l2;
    let area = cpw_mode_integral(params, y_max)? + mode_tail(params, y_max);
    Ok(0.5 * params.length * area)
}

/// `E0`, `g0 = d E0 |E(i y_a)| / ħ`, and `ḡ = d E0 ⟨|E(z + i y_a)|⟩_cell / ħ`.
pub fn cpw_coupling(params: &CpwParams) -> Result<CpwCoupling, PlatformError> {
    params.validate()?;
    let mode_volume = cpw_mode_volume(params)?;
    coupling_with_volume(params, mode_volume)
}

pub(crate) fn coupling_with_volume(params: &CpwParams, mode_volume: f64) -> Result<CpwCoupling, PlatformError> {
    let e0 = (HBAR * params.omega0 / (2.0 * EPSILON_0 * mode_volume)).sqrt();
    let (l1, l2, y) = (params.l1, params.l2, params.atom_height);
    let peak = field_at(Complex64::new(0.0, y), l1, l2).norm();
    let half = 0.5 * params.lattice_constant;
    let mean = quad::integrate_with_breaks(
        |z: f64| field_at(Complex64::new(z, y), l1, l2).norm(),
        0.0,
        half,
        &[l1, l2, y],
        Tolerance::new(1e-14, 1e-10),
    )?
    .value
        / half;
    let scale = params.dipole * e0 / HBAR;
    Ok(CpwCoupling {
        mode_volume,
        e0,
        g0: scale * peak,
        gbar: scale * mean,
    })
}

/// Coupling as a function of atom height; the mode volume is computed once.
pub fn cpw_coupling_profile(params: &CpwParams, heights: &[f64]) -> Result<Vec<(f64, CpwCoupling)>, PlatformError> {
    params.validate()?;
    let volume = cpw_mode_volume(params)?;
    heights
        .iter()
        .map(|&h| {
            let p = CpwParams { atom_height: h, ..*params };
            p.validate()?;
            Ok((h, coupling_with_volume(&p, volume)?))
        })
        .collect()
}
