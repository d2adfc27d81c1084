use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use super::SpectralError;
use crate::band::ComovingFrame;
use crate::dynamics::{to_position, LatticeGrid};
use crate::quad::{self, Tolerance};

/// Largest grid accepted by [`diagonalize_comoving`].
pub const MAX_ORACLE_SITES: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub omega: f64,
    /// `|ω - δ - Σ(ω)|` at the returned root.
    pub residual: f64,
    /// Atomic population `|c_e|²` of the normalized state.
    pub atom_weight: f64,
    pub photon_fraction: f64,
    /// `1/κ` for the complex resonance `ω̃(k) = ω` closest to the real axis.
    pub localization_length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundStateResult {
    pub upper: Option<BoundState>,
    pub lower: Option<BoundState>,
}

impl BoundStateResult {
    pub fn omega_plus(&self) -> Option<f64> {
        self.upper.map(|s| s.omega)
    }

    pub fn omega_minus(&self) -> Option<f64> {
        self.lower.map(|s| s.omega)
    }
}

struct SelfEnergy<'a> {
    frame: &'a ComovingFrame,
    prefactor: f64,
    extremes: [f64; 2],
    edge: f64,
}

impl<'a> SelfEnergy<'a> {
    fn new(frame: &'a ComovingFrame, gbar: f64) -> Self {
        let ((kmin, _), (kmax, _)) = frame.extreme_points();
        Self {
            frame,
            prefactor: gbar * gbar * frame.band.lattice_constant() / (2.0 * PI),
            extremes: [kmin, kmax],
            edge: frame.band.zone_edge(),
        }
    }

    /// Geometric breaks around both band extrema, down to a scale set by the
    /// distance of ω from the band. The peak of the integrand is that narrow
    /// when the extremum sits on the zone boundary and the band is linear there.
    fn breaks(&self, omega: f64) -> Vec<f64> {
        let (lo, hi) = self.frame.extremes();
        let scale = self.frame.band.hopping();
        let gap = ((omega - hi).abs().min((omega - lo).abs()) / scale).max(1e-300);
        let floor = (1e-3 * gap).min(1e-10);
        let mut breaks = Vec::new();
        for k in self.extremes {
            breaks.push(k);
            let mut d = 1.0;
            while d >= floor {
                breaks.push(k - d * self.edge);
                breaks.push(k + d * self.edge);
                d *= 0.1;
            }
        }
        breaks
    }

    /// `(ḡ² a / 2π) ∫ dk (ω - ω̃_k)^{-p}`, valid outside the band.
    fn moment(&self, omega: f64, power: i32) -> Result<f64, SpectralError> {
        // The p = 2 moment grows like gap^{-3/2} near a quadratic edge, so its
        // relative target sits above the roundoff floor.
        let rel = if power == 1 { 1e-12 } else { 1e-10 };
        let tol = Tolerance::new(1e-15, rel).with_max_intervals(100_000);
        let est = quad::integrate_with_breaks(
            |k: f64| (omega - self.frame.tilted_unchecked(k)).powi(-power),
            -self.edge,
            self.edge,
            &self.breaks(omega),
            tol,
        )?;
        Ok(self.prefactor * est.value)
    }
}

/// Roots of `ω - δ = (ḡ² a/2π) ∫ dk / (ω - ω̃_k)` above and below the tilted band.
///
/// A state closer than about `1e-9 J` to the band edge is not resolved and is
/// reported as absent. This only happens for `|v| > 2J a` at weak coupling,
/// where the binding energy is exponentially small in `1/ḡ²`.
pub fn bound_state_frequencies(
    delta: f64,
    frame: &ComovingFrame,
    gbar: f64,
) -> Result<BoundStateResult, SpectralError> {
    if !(gbar > 0.0 && gbar.is_finite()) {
        return Err(SpectralError::InvalidCoupling(gbar));
    }
    let sigma = SelfEnergy::new(frame, gbar);
    let (lo, hi) = frame.extremes();
    let j = frame.band.hopping();
    let reach = 4.0 * j + 10.0 * gbar;
    let f = |w: f64| -> Result<f64, SpectralError> { Ok(w - delta - sigma.moment(w, 1)?) };

    let upper = {
        let far = hi + reach;
        search(&f, far, |eps| hi + eps * j, true)?
    };
    let lower = {
        let far = lo - reach;
        search(&f, far, |eps| lo - eps * j, false)?
    };
    let dress = |root: Option<(f64, f64)>| -> Result<Option<BoundState>, SpectralError> {
        let Some((omega, residual)) = root else {
            return Ok(None);
        };
        let norm = sigma.moment(omega, 2)?;
        let atom_weight = 1.0 / (1.0 + norm);
        Ok(Some(BoundState {
            omega,
            residual,
            atom_weight,
            photon_fraction: 1.0 - atom_weight,
            localization_length: localization_length(frame, omega),
        }))
    };
    Ok(BoundStateResult {
        upper: dress(upper)?,
        lower: dress(lower)?,
    })
}

/// Bisection between the far end of the bracket and a point approached
/// towards the band edge. `above` selects the sign pattern.
fn search(
    f: &impl Fn(f64) -> Result<f64, SpectralError>,
    far: f64,
    near: impl Fn(f64) -> f64,
    above: bool,
) -> Result<Option<(f64, f64)>, SpectralError> {
    // Above the band f goes from negative (edge) to positive (far); below the
    // band the pattern is mirrored.
    let want_far_positive = above;
    let f_far = f(far)?;
    if (f_far > 0.0) != want_far_positive || f_far == 0.0 {
        return Ok(None);
    }
    let mut near_point = None;
    for m in [3, 5, 7, 9, 11] {
        let x = near(10f64.powi(-m));
        // Closer to a linear band edge the integrand is dominated by roundoff
        // in ω - ω̃; a state bound that weakly is reported as absent.
        let fx = match f(x) {
            Ok(fx) => fx,
            Err(SpectralError::Quadrature(_)) if m > 3 => break,
            Err(e) => return Err(e),
        };
        if (fx > 0.0) != want_far_positive && fx != 0.0 {
            near_point = Some((x, fx));
            break;
        }
    }
    let Some((mut a, _)) = near_point else {
        return Ok(None);
    };
    let mut b = far;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b || (b - a).abs() <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
        let fm = f(mid)?;
        if (fm > 0.0) == want_far_positive {
            b = mid;
        } else {
            a = mid;
        }
    }
    let root = 0.5 * (a + b);
    Ok(Some((root, f(root)?.abs())))
}

/// `1/min|Im k|` over complex roots of `-2J cos(ka) - vk = ω` with real part
/// in the zone, found by Newton iteration from a seed lattice.
fn localization_length(frame: &ComovingFrame, omega: f64) -> Option<f64> {
    let j = frame.band.hopping();
    let a = frame.band.lattice_constant();
    let v = frame.velocity;
    let edge = frame.band.zone_edge();
    let f = |k: Complex64| -2.0 * j * (k * a).cos() - v * k - omega;
    let df = |k: Complex64| 2.0 * j * a * (k * a).sin() - v;
    let mut best: Option<f64> = None;
    for re in 0..=32 {
        for im in [0.02, 0.2, 1.0, 3.0, -0.02, -0.2, -1.0, -3.0] {
            let mut k = Complex64::new(-edge + 2.0 * edge * re as f64 / 32.0, im / a);
            for _ in 0..100 {
                let d = df(k);
                if d.norm() == 0.0 {
                    break;
                }
                let step = f(k) / d;
                k -= step;
                if step.norm() < 1e-14 * (1.0 + k.norm()) {
                    break;
                }
            }
            if f(k).norm() < 1e-10 * j && k.im.abs() > 1e-9 / a && k.re.abs() <= edge * (1.0 + 1e-12) {
                let kappa = k.im.abs();
                best = Some(best.map_or(kappa, |b: f64| b.min(kappa)));
            }
        }
    }
    best.map(|kappa| 1.0 / kappa)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEigenstate {
    pub eigenvalue: f64,
    pub atom_weight: f64,
    /// Inverse participation ratio of the normalized photonic part on sites.
    pub photon_ipr: f64,
    /// Photon amplitude on sites `z_n = n a`, atom at `z = 0`.
    pub photon: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComovingSpectrum {
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues outside the range of the discrete mode energies, ascending.
    pub bound_states: Vec<BoundEigenstate>,
}

/// Exact diagonalization of the single-excitation co-moving Hamiltonian:
/// diagonal `{δ} ∪ {ω̃_{k_j}}`, atom–mode couplings `ḡ √(a/L)`.
pub fn diagonalize_comoving(
    delta: f64,
    frame: &ComovingFrame,
    gbar: f64,
    n_sites: usize,
) -> Result<ComovingSpectrum, SpectralError> {
    if n_sites < 2 || !n_sites.is_multiple_of(2) || n_sites > MAX_ORACLE_SITES {
        return Err(SpectralError::GridSize(n_sites));
    }
    let grid = LatticeGrid::new(n_sites, frame.band.lattice_constant())
        .map_err(|_| SpectralError::GridSize(n_sites))?;
    let modes: Vec<f64> = grid
        .wavevectors()
        .iter()
        .map(|&k| frame.tilted_unchecked(k))
        .collect();
    let g = gbar * (grid.lattice_constant / grid.length()).sqrt();
    let dim = n_sites + 1;
    let h = Mat::<f64>::from_fn(dim, dim, |i, j| match (i, j) {
        (0, 0) => delta,
        (i, j) if i == j => modes[i - 1],
        (0, _) | (_, 0) => g,
        _ => 0.0,
    });
    let mut eigenvalues = h.selfadjoint_eigenvalues(Side::Lower);
    eigenvalues.sort_by(f64::total_cmp);

    let lo = modes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = modes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = 1e-12 * frame.band.hopping();
    let bound_states = eigenvalues
        .iter()
        .filter(|&&e| g > 0.0 && (e > hi + margin || e < lo - margin))
        .map(|&e| arrow_eigenstate(refine(e, delta, g, &modes), delta, g, &modes, &grid))
        .collect();
    Ok(ComovingSpectrum {
        eigenvalues,
        bound_states,
    })
}

/// Newton polish of `λ - δ - Σ_j g²/(λ - ω̃_j) = 0`.
fn refine(mut lambda: f64, delta: f64, g: f64, modes: &[f64]) -> f64 {
    for _ in 0..50 {
        let (mut s, mut ds) = (0.0, 0.0);
        for &w in modes {
            let d = lambda - w;
            s += g * g / d;
            ds += g * g / (d * d);
        }
        let step = (lambda - delta - s) / (1.0 + ds);
        lambda -= step;
        if step.abs() < 1e-15 * lambda.abs().max(1.0) {
            break;
        }
    }
    lambda
}

fn arrow_eigenstate(lambda: f64, _delta: f64, g: f64, modes: &[f64], grid: &LatticeGrid) -> BoundEigenstate {
    // (λ - ω̃_j) x_j = g x_0 for every mode.
    let mut photon_k: Vec<Complex64> = modes
        .iter()
        .map(|&w| Complex64::new(g / (lambda - w), 0.0))
        .collect();
    let photon_norm: f64 = photon_k.iter().map(|c| c.norm_sqr()).sum();
    let total = 1.0 + photon_norm;
    let scale = 1.0 / total.sqrt();
    photon_k.iter_mut().for_each(|c| *c *= scale);
    let photon = to_position(&photon_k, grid);
    let p2: f64 = photon.iter().map(|c| c.norm_sqr()).sum();
    let p4: f64 = photon.iter().map(|c| c.norm_sqr().powi(2)).sum();
    BoundEigenstate {
        eigenvalue: lambda,
        atom_weight: 1.0 / total,
        photon_ipr: if p2 > 0.0 { p4 / (p2 * p2) } else { 0.0 },
        photon,
    }
}
