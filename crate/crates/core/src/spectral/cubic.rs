//! Exactly cubic dispersion `ω̃_k = -J(ak)³/3` around the critical point,
//! with `k` shifted so the inflection sits at `k = 0` and frequencies
//! measured from it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::SpectralError;
use crate::quad::{self, Tolerance};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Largest truncated spectral weight accepted by [`cubic_decay`].
pub const TAIL_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicModelParams {
    pub hopping: f64,
    pub lattice_constant: f64,
    pub gbar: f64,
    /// Atomic frequency measured from the critical frequency.
    pub delta: f64,
}

impl CubicModelParams {
    pub fn new(hopping: f64, lattice_constant: f64, gbar: f64, delta: f64) -> Result<Self, SpectralError> {
        if !(gbar > 0.0 && gbar.is_finite()) {
            return Err(SpectralError::InvalidCoupling(gbar));
        }
        if !(hopping > 0.0 && lattice_constant > 0.0) {
            return Err(SpectralError::InvalidBand {
                hopping,
                lattice_constant,
            });
        }
        Ok(Self {
            hopping,
            lattice_constant,
            gbar,
            delta,
        })
    }

    /// Unit band, resonant atom.
    pub fn unit(gbar: f64) -> Result<Self, SpectralError> {
        Self::new(1.0, 1.0, gbar, 0.0)
    }

    pub fn dispersion(&self, k: f64) -> f64 {
        -self.hopping * (self.lattice_constant * k).powi(3) / 3.0
    }

    /// Default quadrature cutoff `50 (ḡ²/J)^{1/3} / a`.
    pub fn default_cutoff(&self) -> f64 {
        50.0 * (self.gbar * self.gbar / self.hopping).cbrt() / self.lattice_constant
    }

    /// Spectral weight beyond `|k| > cutoff`, from the `k⁻⁶` tail of `|c_e^k|²`.
    pub fn tail_weight(&self, cutoff: f64) -> f64 {
        let (j, a, g) = (self.hopping, self.lattice_constant, self.gbar);
        // |c_e^k|² → (a/2π) 9 ḡ² / (J² a⁶ k⁶) on both sides.
        2.0 * a / (2.0 * PI) * 9.0 * g * g / (j * j * a.powi(6)) / (5.0 * cutoff.powi(5))
    }
}

/// `I_z(k) = (a/2π) ∫ dk' e^{ik'z} / (ω̃_k - ω̃_{k'} + i0)` in closed form.
///
/// ```text
/// I_z = [c e^{-ikz/2 - (√3/2)|kz|} + θ(-z) i (e^{-ikz/2 - (√3/2)|kz|} - e^{ikz})] / (J a² k²)
/// c   = -(sgn(k) √3 + i) / 2
/// ```
pub fn cubic_i(z: f64, k: f64, params: &CubicModelParams) -> Result<Complex64, SpectralError> {
    if k == 0.0 || !k.is_finite() {
        return Err(SpectralError::ZeroWavevector);
    }
    let c = Complex64::new(-0.5 * k.signum() * SQRT3, -0.5);
    let damped = Complex64::new(-0.5 * SQRT3 * (k * z).abs(), -0.5 * k * z).exp();
    let mut value = c * damped;
    if z < 0.0 {
        value += Complex64::i() * (damped - Complex64::new(0.0, k * z).exp());
    }
    Ok(value / (params.hopping * params.lattice_constant.powi(2) * k * k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringState {
    /// Atomic amplitude `c_e^k`.
    pub atom: Complex64,
    /// Scattering strength `γ_k`.
    pub gamma: Complex64,
    /// `ψ_k(z)` on the requested grid.
    pub psi: Vec<Complex64>,
}

fn atom_amplitude(k: f64, params: &CubicModelParams) -> Result<(Complex64, Complex64, Complex64), SpectralError> {
    let i0 = cubic_i(0.0, k, params)?;
    let g2 = params.gbar * params.gbar;
    let denom = params.dispersion(k) - params.delta - g2 * i0;
    let atom = (params.lattice_constant / (2.0 * PI)).sqrt() * params.gbar / denom;
    let gamma = g2 * i0 / denom;
    Ok((atom, gamma, i0))
}

/// Scattering eigenstate with incoming wavevector `k`:
/// `ψ_k(z) = (1/√2π) [e^{ikz} + γ_k I_z / I_0]`.
pub fn cubic_scattering_state(
    k: f64,
    params: &CubicModelParams,
    z_grid: &[f64],
) -> Result<ScatteringState, SpectralError> {
    let (atom, gamma, i0) = atom_amplitude(k, params)?;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let psi = z_grid
        .iter()
        .map(|&z| {
            let iz = cubic_i(z, k, params)?;
            Ok(norm * (Complex64::new(0.0, k * z).exp() + gamma * iz / i0))
        })
        .collect::<Result<Vec<_>, SpectralError>>()?;
    Ok(ScatteringState { atom, gamma, psi })
}

/// `|c_e^k|²`, continuous through `k = 0` where it vanishes.
pub fn spectral_weight(k: f64, params: &CubicModelParams) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    atom_amplitude(k, params).map(|(c, _, _)| c.norm_sqr()).unwrap_or(0.0)
}

fn weight_breaks(params: &CubicModelParams, cutoff: f64) -> Vec<f64> {
    // Resonance scale where ḡ²/(Ja²k²) ~ J(ak)³.
    let r = (params.gbar * params.gbar / (params.hopping * params.hopping)).powf(0.2) / params.lattice_constant;
    let mut b = vec![0.0];
    for m in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        if m * r < cutoff {
            b.push(m * r);
            b.push(-m * r);
        }
    }
    b
}

/// Cutoff grown from the default until the analytic tail is below [`TAIL_WEIGHT`].
pub fn decay_cutoff(params: &CubicModelParams) -> f64 {
    let mut cutoff = params.default_cutoff();
    while params.tail_weight(cutoff) > TAIL_WEIGHT {
        cutoff *= 2.0;
    }
    cutoff
}

/// `∫ dk |c_e^k|²` over the truncated range; equals 1 by completeness.
pub fn sum_rule(params: &CubicModelParams) -> Result<f64, SpectralError> {
    let cutoff = decay_cutoff(params);
    let tol = Tolerance::new(1e-12, 1e-10).with_max_intervals(200_000);
    let est = quad::integrate_with_breaks(
        |k: f64| spectral_weight(k, params),
        -cutoff,
        cutoff,
        &weight_breaks(params, cutoff),
        tol,
    )?;
    Ok(est.value + params.tail_weight(cutoff))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicDecay {
    pub times: Vec<f64>,
    pub populations: Vec<f64>,
    pub cutoff: f64,
}

/// `p_e(t) = |∫ dk |c_e^k|² e^{-iω̃_k t}|²` on `t = 0, dt, …, t_max`.
pub fn cubic_decay(params: &CubicModelParams, t_max: f64, dt: f64) -> Result<CubicDecay, SpectralError> {
    if !(t_max >= 0.0 && dt > 0.0) {
        return Err(SpectralError::InvalidTimes { t_max, dt });
    }
    let cutoff = decay_cutoff(params);
    let breaks = weight_breaks(params, cutoff);
    let steps = (t_max / dt).round() as usize;
    let tol = Tolerance::new(1e-9, 1e-9).with_max_intervals(400_000);
    let mut times = Vec::with_capacity(steps + 1);
    let mut populations = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let t = n as f64 * dt;
        let est = quad::integrate_with_breaks(
            |k: f64| {
                let w = spectral_weight(k, params);
                Complex64::from_polar(w, -params.dispersion(k) * t)
            },
            -cutoff,
            cutoff,
            &breaks,
            tol,
        )?;
        times.push(t);
        populations.push(est.value.norm_sqr());
    }
    Ok(CubicDecay {
        times,
        populations,
        cutoff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRates {
    pub omega_c: f64,
    pub gamma_c: f64,
}

/// `Ω_c = √(5+√5)/(2√2) R`, `Γ_c = (√5-1)/2 R` with `R = (ḡ⁶/9J)^{1/5}`.
pub fn critical_rates(gbar: f64, hopping: f64) -> Result<CriticalRates, SpectralError> {
    if !(gbar > 0.0 && gbar.is_finite()) {
        return Err(SpectralError::InvalidCoupling(gbar));
    }
    let r = (gbar.powi(6) / (9.0 * hopping)).powf(0.2);
    let s5 = 5f64.sqrt();
    Ok(CriticalRates {
        omega_c: (5.0 + s5).sqrt() / (2.0 * 2f64.sqrt()) * r,
        gamma_c: 0.5 * (s5 - 1.0) * r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(g: f64) -> CubicModelParams {
        CubicModelParams::unit(g).unwrap()
    }

    #[test]
    fn i_at_origin() {
        let p = params(0.2);
        for k in [0.7, -1.3] {
            let v = cubic_i(0.0, k, &p).unwrap();
            let expected = -Complex64::new(SQRT3 * f64::signum(k), 1.0) / (2.0 * k * k);
            assert_abs_diff_eq!((v - expected).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn i_is_continuous_at_origin() {
        let p = params(0.2);
        for k in [0.4, -2.0] {
            let left = cubic_i(-1e-9, k, &p).unwrap();
            let right = cubic_i(1e-9, k, &p).unwrap();
            assert!((left - right).norm() < 1e-7 / (k * k));
        }
    }

    #[test]
    fn i_rejects_zero_k() {
        assert_eq!(cubic_i(1.0, 0.0, &params(0.2)), Err(SpectralError::ZeroWavevector));
    }

    #[test]
    fn i_decays_downstream() {
        let p = params(0.2);
        assert!(cubic_i(40.0, 1.0, &p).unwrap().norm() < 1e-14);
    }

    #[test]
    fn free_limit() {
        let p = params(1e-9);
        let zs = [-2.0, 0.5, 3.0];
        let s = cubic_scattering_state(0.8, &p, &zs).unwrap();
        assert!(s.gamma.norm() < 1e-15);
        for (z, psi) in zs.iter().zip(&s.psi) {
            let free = Complex64::new(0.0, 0.8 * z).exp() / (2.0 * PI).sqrt();
            assert!((psi - free).norm() < 1e-12);
        }
    }

    #[test]
    fn scattering_state_solves_cubic_equation_off_atom() {
        // ω̃_k ψ = -(J a³/3) i ψ''' away from z = 0.
        let p = params(0.3);
        let k = 0.9;
        let h = 1e-2;
        for z0 in [-4.0, -1.5, 1.0, 3.0] {
            let zs: Vec<f64> = (-3..=3).map(|m| z0 + m as f64 * h).collect();
            let psi = cubic_scattering_state(k, &p, &zs).unwrap().psi;
            // Fourth-order central third derivative.
            let d3 = (-(psi[6] - psi[0]) / 8.0 + (psi[5] - psi[1]) - 13.0 / 8.0 * (psi[4] - psi[2])) / h.powi(3);
            let lhs = p.dispersion(k) * psi[3];
            let rhs = -Complex64::i() * d3 / 3.0;
            assert!((lhs - rhs).norm() < 1e-4 * lhs.norm(), "z0 = {z0}");
        }
    }

    #[test]
    fn completeness() {
        let s = sum_rule(&params(0.2)).unwrap();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn decay_starts_at_one() {
        let d = cubic_decay(&params(0.2), 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(d.populations[0], 1.0, epsilon = 2e-6);
        assert_eq!(d.times.len(), 3);
    }

    #[test]
    fn critical_rates_values() {
        let r = critical_rates(0.2, 1.0).unwrap();
        // Frozen from a 30-digit evaluation.
        assert_abs_diff_eq!(r.omega_c, 0.088_836_986_566_870_6, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gamma_c, 0.057_729_773_379_108_76, epsilon = 1e-15);
        let ratio = (5.0 + 5f64.sqrt()).sqrt() / (2f64.sqrt() * (5f64.sqrt() - 1.0));
        assert_relative_eq!(r.omega_c / r.gamma_c, ratio, max_relative = 1e-14);
        let r2 = critical_rates(0.4, 1.0).unwrap();
        assert_relative_eq!(r2.gamma_c / r.gamma_c, 2f64.powf(1.2), max_relative = 1e-12);
    }
}
