//! Cosine tight-binding band, the co-moving (tilted) frame, resonance search
//! and the broadened density of states.
//!
//! Frequencies are measured from the band center, so the band is
//! `-2J cos(ka)` and occupies `[-2J, 2J]` for a static observer.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quad::{self, QuadError, Tolerance};

/// Number of grid points used for scans over the Brillouin zone.
pub const ZONE_SCAN_POINTS: usize = 4096;

/// Residual below which a scanned root is accepted.
pub const ROOT_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("wavevector {k} lies outside the Brillouin zone (-{edge}, {edge}]")]
    OutOfZone { k: f64, edge: f64 },
    #[error("invalid band parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("broadening must be positive, got {0}")]
    NonPositiveBroadening(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandParams {
    hopping: f64,
    lattice_constant: f64,
    photon_loss: f64,
}

impl BandParams {
    pub fn new(hopping: f64, lattice_constant: f64, photon_loss: f64) -> Result<Self, BandError> {
        if !(hopping > 0.0 && hopping.is_finite()) {
            return Err(BandError::InvalidParameter {
                name: "J",
                value: hopping,
            });
        }
        if !(lattice_constant > 0.0 && lattice_constant.is_finite()) {
            return Err(BandError::InvalidParameter {
                name: "a",
                value: lattice_constant,
            });
        }
        if !(photon_loss >= 0.0 && photon_loss.is_finite()) {
            return Err(BandError::InvalidParameter {
                name: "gamma_p",
                value: photon_loss,
            });
        }
        Ok(Self {
            hopping,
            lattice_constant,
            photon_loss,
        })
    }

    /// J = a = 1, lossless.
    pub fn unit() -> Self {
        Self {
            hopping: 1.0,
            lattice_constant: 1.0,
            photon_loss: 0.0,
        }
    }

    pub fn with_photon_loss(self, photon_loss: f64) -> Result<Self, BandError> {
        Self::new(self.hopping, self.lattice_constant, photon_loss)
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn lattice_constant(&self) -> f64 {
        self.lattice_constant
    }

    pub fn photon_loss(&self) -> f64 {
        self.photon_loss
    }

    /// Maximal group velocity of the band, `2Ja`.
    pub fn cbar(&self) -> f64 {
        2.0 * self.hopping * self.lattice_constant
    }

    pub fn zone_edge(&self) -> f64 {
        PI / self.lattice_constant
    }

    pub fn check_zone(&self, k: f64) -> Result<(), BandError> {
        let edge = self.zone_edge();
        if k > -edge && k <= edge * (1.0 + 4.0 * f64::EPSILON) {
            Ok(())
        } else {
            Err(BandError::OutOfZone { k, edge })
        }
    }

    pub(crate) fn omega_unchecked(&self, k: f64) -> f64 {
        -2.0 * self.hopping * (k * self.lattice_constant).cos()
    }

    pub(crate) fn group_velocity_unchecked(&self, k: f64) -> f64 {
        2.0 * self.hopping * self.lattice_constant * (k * self.lattice_constant).sin()
    }
}

/// The band seen from a frame moving with velocity `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComovingFrame {
    pub band: BandParams,
    pub velocity: f64,
}

impl ComovingFrame {
    pub fn new(band: BandParams, velocity: f64) -> Self {
        Self { band, velocity }
    }

    /// Coupling modulation frequency `2π|v|/a`.
    pub fn modulation_frequency(&self) -> f64 {
        2.0 * PI * self.velocity.abs() / self.band.lattice_constant
    }

    pub(crate) fn tilted_unchecked(&self, k: f64) -> f64 {
        self.band.omega_unchecked(k) - self.velocity * k
    }

    pub(crate) fn comoving_velocity_unchecked(&self, k: f64) -> f64 {
        self.band.group_velocity_unchecked(k) - self.velocity
    }

    /// `(ω̃_min, ω̃_max)` over the closed zone `[-π/a, π/a]`.
    pub fn extremes(&self) -> (f64, f64) {
        let ((_, lo), (_, hi)) = self.extreme_points();
        (lo, hi)
    }

    /// `((k_min, ω̃_min), (k_max, ω̃_max))`: grid scan refined by golden section.
    pub fn extreme_points(&self) -> ((f64, f64), (f64, f64)) {
        let edge = self.band.zone_edge();
        let n = ZONE_SCAN_POINTS;
        let h = 2.0 * edge / n as f64;
        let grid = |j: usize| -edge + h * j as f64;
        let (mut jmin, mut jmax) = (0, 0);
        let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..=n {
            let f = self.tilted_unchecked(grid(j));
            if f < fmin {
                fmin = f;
                jmin = j;
            }
            if f > fmax {
                fmax = f;
                jmax = j;
            }
        }
        let bracket = |j: usize| {
            let lo = grid(j.saturating_sub(1));
            let hi = grid((j + 1).min(n));
            (lo, hi)
        };
        let (lo, hi) = bracket(jmin);
        let kmin = golden_section(|k| self.tilted_unchecked(k), lo, hi);
        let (lo, hi) = bracket(jmax);
        let kmax = golden_section(|k| -self.tilted_unchecked(k), lo, hi);
        let min = if self.tilted_unchecked(kmin) < fmin {
            (kmin, self.tilted_unchecked(kmin))
        } else {
            (grid(jmin), fmin)
        };
        let max = if self.tilted_unchecked(kmax) > fmax {
            (kmax, self.tilted_unchecked(kmax))
        } else {
            (grid(jmax), fmax)
        };
        (min, max)
    }

    pub fn contains(&self, omega: f64) -> bool {
        let (lo, hi) = self.extremes();
        omega >= lo && omega <= hi
    }
}

/// Minimizes a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

pub fn dispersion(k: f64, band: &BandParams) -> Result<f64, BandError> {
    band.check_zone(k)?;
    Ok(band.omega_unchecked(k))
}

pub fn group_velocity(k: f64, band: &BandParams) -> Result<f64, BandError> {
    band.check_zone(k)?;
    Ok(band.group_velocity_unchecked(k))
}

pub fn tilted_dispersion(k: f64, frame: &ComovingFrame) -> Result<f64, BandError> {
    frame.band.check_zone(k)?;
    Ok(frame.tilted_unchecked(k))
}

/// A solution of `ω̃_k = δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub k: f64,
    /// Group velocity in the co-moving frame, `v_g(k) - v`.
    pub comoving_velocity: f64,
    /// 1 for a simple crossing, 2 at a band-edge tangency, 3 at the
    /// inflection point where the dispersion is locally cubic.
    pub multiplicity: u8,
}

/// All wavevectors in the zone with `ω̃_k = δ`, ordered by `k`.
pub fn resonant_wavevectors(delta: f64, frame: &ComovingFrame) -> Vec<Resonance> {
    let band = &frame.band;
    let edge = band.zone_edge();
    let n = ZONE_SCAN_POINTS;
    let h = 2.0 * edge / n as f64;
    let tol = ROOT_RESIDUAL * band.hopping();
    let f = |k: f64| frame.tilted_unchecked(k) - delta;
    let ks: Vec<f64> = (0..=n).map(|j| -edge + h * j as f64).collect();
    let fs: Vec<f64> = ks.iter().map(|&k| f(k)).collect();

    let mut roots: Vec<f64> = Vec::new();
    for j in 0..n {
        let (fa, fb) = (fs[j], fs[j + 1]);
        if fb == 0.0 {
            roots.push(ks[j + 1]);
        } else if fa != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(&f, ks[j], ks[j + 1], fa));
        }
    }

    // Tangential touches do not change sign; catch them as local minima of |f|.
    for j in 1..n {
        let (a, b, c) = (fs[j - 1].abs(), fs[j].abs(), fs[j + 1].abs());
        if b <= a && b <= c && fs[j - 1].signum() == fs[j + 1].signum() && b < 1e-3 * band.hopping() {
            if roots.iter().any(|&r| (r - ks[j]).abs() < 2.0 * h) {
                continue;
            }
            let k = golden_section(|k| f(k).abs(), ks[j - 1], ks[j + 1]);
            if f(k).abs() < tol && k > -edge {
                roots.push(k);
            }
        }
    }

    roots.sort_by(f64::total_cmp);
    roots
        .into_iter()
        .map(|k| {
            let comoving_velocity = frame.comoving_velocity_unchecked(k);
            let multiplicity = if comoving_velocity.abs() < 1e-6 * band.cbar() {
                let curvature = 2.0
                    * band.hopping()
                    * band.lattice_constant().powi(2)
                    * (k * band.lattice_constant()).cos();
                if curvature.abs() < 1e-3 * 2.0 * band.hopping() * band.lattice_constant().powi(2) {
                    3
                } else {
                    2
                }
            } else {
                1
            };
            Resonance {
                k,
                comoving_velocity,
                multiplicity,
            }
        })
        .collect()
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(a/2π) ∫ dk L(ω - ω̃_k)` over `[k_lo, k_hi]`, `L` a unit-area Lorentzian
/// of full width `broadening`.
pub(crate) fn lorentzian_weight(
    omega: f64,
    frame: &ComovingFrame,
    broadening: f64,
    k_lo: f64,
    k_hi: f64,
    rel_tol: f64,
) -> Result<f64, BandError> {
    if !(broadening > 0.0) {
        return Err(BandError::NonPositiveBroadening(broadening));
    }
    let half = 0.5 * broadening;
    let a = frame.band.lattice_constant();
    let mut breaks = Vec::new();
    for r in resonant_wavevectors(omega, frame) {
        breaks.push(r.k);
        // Width of the peak in k; the cube root covers the cubic inflection.
        let slope = r.comoving_velocity.abs().max((half * 1e-12).cbrt());
        let width = half / slope;
        for m in [1.0, 10.0, 100.0] {
            breaks.push(r.k - m * width);
            breaks.push(r.k + m * width);
        }
    }
    let integrand = |k: f64| {
        let x = omega - frame.tilted_unchecked(k);
        (half / PI) / (x * x + half * half)
    };
    let tol = Tolerance::new(1e-300, rel_tol).with_max_intervals(50_000);
    let est = quad::integrate_with_breaks(integrand, k_lo, k_hi, &breaks, tol)?;
    Ok(a / (2.0 * PI) * est.value)
}

/// Lorentzian-broadened density of states per unit cell in the co-moving frame.
pub fn dos_comoving(omega: f64, frame: &ComovingFrame, broadening: f64) -> Result<f64, BandError> {
    let edge = frame.band.zone_edge();
    lorentzian_weight(omega, frame, broadening, -edge, edge, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> BandParams {
        BandParams::unit()
    }

    #[test]
    fn dispersion_landmarks() {
        let b = unit();
        assert_abs_diff_eq!(dispersion(0.0, &b).unwrap(), -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dispersion(PI, &b).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dispersion(PI / 2.0, &b).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zone_is_half_open() {
        let b = unit();
        assert!(dispersion(PI, &b).is_ok());
        assert!(matches!(dispersion(-PI, &b), Err(BandError::OutOfZone { .. })));
        assert!(dispersion(3.5, &b).is_err());
        assert!(group_velocity(-4.0, &b).is_err());
    }

    #[test]
    fn group_velocity_bounded_by_cbar() {
        let b = BandParams::new(1.3, 0.7, 0.0).unwrap();
        assert_abs_diff_eq!(group_velocity(PI / (2.0 * 0.7), &b).unwrap(), b.cbar(), epsilon = 1e-14);
        assert_eq!(group_velocity(0.0, &b).unwrap(), 0.0);
        assert_abs_diff_eq!(group_velocity(-PI / (2.0 * 0.7), &b).unwrap(), -b.cbar(), epsilon = 1e-14);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(BandParams::new(0.0, 1.0, 0.0).is_err());
        assert!(BandParams::new(1.0, -1.0, 0.0).is_err());
        assert!(BandParams::new(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn tilted_at_critical_velocity() {
        let frame = ComovingFrame::new(unit(), 2.0);
        assert_abs_diff_eq!(tilted_dispersion(PI / 2.0, &frame).unwrap(), -PI, epsilon = 1e-14);
        let slow = ComovingFrame::new(unit(), 0.37);
        assert_abs_diff_eq!(tilted_dispersion(0.0, &slow).unwrap(), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn band_top_sits_at_zone_edge_for_positive_velocity() {
        for v in [0.5, 1.0, 2.0, 3.0] {
            let frame = ComovingFrame::new(unit(), v);
            let (_, max) = frame.extremes();
            assert_abs_diff_eq!(max, 2.0 + frame.modulation_frequency() / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn static_roots_at_quarter_zone() {
        let roots = resonant_wavevectors(0.0, &ComovingFrame::new(unit(), 0.0));
        assert_eq!(roots.len(), 2);
        assert_abs_diff_eq!(roots[0].k, -PI / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(roots[1].k, PI / 2.0, epsilon = 1e-10);
        assert!(roots.iter().all(|r| r.multiplicity == 1));
    }

    #[test]
    fn critical_triple_root() {
        let roots = resonant_wavevectors(-PI, &ComovingFrame::new(unit(), 2.0));
        assert_eq!(roots.len(), 1);
        assert!((roots[0].k - PI / 2.0).abs() < 1e-4);
        assert_eq!(roots[0].multiplicity, 3);
        assert!(roots[0].comoving_velocity.abs() < 1e-6 * 2.0);
    }

    #[test]
    fn backward_only_window() {
        let roots = resonant_wavevectors(2.0, &ComovingFrame::new(unit(), 1.0));
        assert_eq!(roots.len(), 1);
        assert!(roots[0].k < 0.0);
    }

    #[test]
    fn band_edge_tangency_is_found() {
        // Static band bottom touches δ = -2J at k = 0.
        let roots = resonant_wavevectors(-2.0, &ComovingFrame::new(unit(), 0.0));
        assert_eq!(roots.len(), 1);
        assert!(roots[0].k.abs() < 1e-4);
        assert_eq!(roots[0].multiplicity, 2);
    }

    #[test]
    fn out_of_band_is_empty() {
        let frame = ComovingFrame::new(unit(), 0.3);
        let (lo, hi) = frame.extremes();
        assert!(resonant_wavevectors(hi + 0.1, &frame).is_empty());
        assert!(resonant_wavevectors(lo - 0.1, &frame).is_empty());
    }

    #[test]
    fn dos_static_band_center() {
        let frame = ComovingFrame::new(unit(), 0.0);
        let rho = dos_comoving(0.0, &frame, 1e-4).unwrap();
        let expected = 1.0 / (2.0 * PI);
        assert!((rho / expected - 1.0).abs() < 1e-3, "{rho}");
    }

    #[test]
    fn dos_vanishes_far_outside() {
        let frame = ComovingFrame::new(unit(), 0.0);
        assert!(dos_comoving(10.0, &frame, 1e-6).unwrap() < 1e-7);
        assert!(dos_comoving(-25.0, &frame, 1e-8).unwrap() < 1e-10);
    }

    #[test]
    fn dos_rejects_bad_broadening() {
        let frame = ComovingFrame::new(unit(), 0.0);
        assert!(matches!(dos_comoving(0.0, &frame, 0.0), Err(BandError::NonPositiveBroadening(_))));
    }
}
