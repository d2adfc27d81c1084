//! Single-excitation dynamics of moving two-level atoms coupled to the band.
//!
//! Two propagators share one set of inputs:
//!
//! * [`evolve_effective`] works in k-space with the cell-averaged coupling
//!   `ḡ e^{ikz(t)}`, in the interaction picture with respect to the bare
//!   atom and photon energies.
//! * [`evolve_full`] works in the site basis with the position-resolved
//!   Gaussian Wannier coupling, so the time-periodic modulation seen by a
//!   moving atom is kept.
//!
//! Atoms follow fixed classical trajectories `z(t) = z + vt`; only the field
//! lives on the lattice.

mod effective;
mod full;
mod integrator;
mod output;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::band::BandParams;

pub use effective::evolve_effective;
pub use full::{evolve_full, wannier_profile};
pub use output::{
    density_outside_light_cone, observables, to_position, Observables, PhotonSplit, RunManifest,
    SimOutput, Snapshot,
};

/// Largest time step accepted, in units of 1/J.
pub const MAX_DT: f64 = 0.02;

/// Gaussian Wannier functions are cut off beyond this many widths.
pub const WANNIER_CUTOFF: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("no atoms configured")]
    NoAtoms,
    #[error("n_sites must be even and at least 2, got {0}")]
    OddGrid(usize),
    #[error(
        "light cone wraps around: cbar * t_max = {reach} must stay below L/2 = {half_length}; \
         use at least n_sites = {required}"
    )]
    LightConeWrap {
        reach: f64,
        half_length: f64,
        required: usize,
    },
    #[error("time step {dt} exceeds the maximum {max} (units of 1/J)")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("invalid run parameter {name} = {value}")]
    InvalidRun { name: &'static str, value: f64 },
    #[error("wrong coupling kind: {0} propagator needs a {0} coupling")]
    WrongCoupling(&'static str),
    #[error("Wannier width z0 = {width} must be positive and below a/2 = {limit}")]
    WannierTooWide { width: f64, limit: f64 },
    #[error("invalid coupling {name} = {value}")]
    InvalidCoupling { name: &'static str, value: f64 },
    #[error("disorder realization has {got} sites, grid has {expected}")]
    DisorderLength { got: usize, expected: usize },
    #[error("initial state has {got} atomic amplitudes for {expected} atoms")]
    InitialLength { got: usize, expected: usize },
    #[error("initial state norm {0} exceeds 1")]
    InitialNorm(f64),
    #[error("snapshot time {0} lies outside [0, t_max]")]
    SnapshotOutOfRange(f64),
    #[error("atom index {index} out of range for {count} atoms")]
    AtomIndex { index: usize, count: usize },
    #[error("output has no photon snapshots")]
    MissingSnapshots,
    #[error("invalid atom parameter {name} = {value}")]
    InvalidAtom { name: &'static str, value: f64 },
}

/// One atom: detuning from the band center, initial position, velocity and
/// spontaneous loss into non-guided modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub detuning: f64,
    pub position: f64,
    pub velocity: f64,
    #[serde(default)]
    pub atomic_loss: f64,
}

impl AtomSpec {
    pub fn new(detuning: f64, position: f64, velocity: f64) -> Self {
        Self {
            detuning,
            position,
            velocity,
            atomic_loss: 0.0,
        }
    }

    pub fn with_loss(mut self, atomic_loss: f64) -> Self {
        self.atomic_loss = atomic_loss;
        self
    }

    pub fn trajectory(&self, t: f64) -> f64 {
        self.position + self.velocity * t
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        for (name, value) in [
            ("delta", self.detuning),
            ("z_init", self.position),
            ("v", self.velocity),
        ] {
            if !value.is_finite() {
                return Err(DynamicsError::InvalidAtom { name, value });
            }
        }
        if !(self.atomic_loss >= 0.0 && self.atomic_loss.is_finite()) {
            return Err(DynamicsError::InvalidAtom {
                name: "gamma_a",
                value: self.atomic_loss,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CouplingSpec {
    /// Cell-averaged coupling of the continuum model.
    Effective { gbar: f64 },
    /// Peak coupling `g` with a Gaussian Wannier profile of width `z0`.
    Full { g: f64, z0: f64 },
}

impl CouplingSpec {
    /// `ḡ` of the continuum model; for a Gaussian profile `g √(2 z0/a) π^{1/4}`.
    pub fn gbar_equivalent(&self, lattice_constant: f64) -> f64 {
        match *self {
            CouplingSpec::Effective { gbar } => gbar,
            CouplingSpec::Full { g, z0 } => g * (2.0 * z0 / lattice_constant).sqrt() * PI.powf(0.25),
        }
    }

    pub fn validate(&self, lattice_constant: f64) -> Result<(), DynamicsError> {
        match *self {
            CouplingSpec::Effective { gbar } => {
                if !gbar.is_finite() || gbar < 0.0 {
                    return Err(DynamicsError::InvalidCoupling {
                        name: "gbar",
                        value: gbar,
                    });
                }
            }
            CouplingSpec::Full { g, z0 } => {
                if !g.is_finite() || g < 0.0 {
                    return Err(DynamicsError::InvalidCoupling { name: "g", value: g });
                }
                if !(z0 > 0.0 && z0 < 0.5 * lattice_constant) {
                    return Err(DynamicsError::WannierTooWide {
                        width: z0,
                        limit: 0.5 * lattice_constant,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Periodic lattice of `n_sites` cells holding the photon field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub n_sites: usize,
    pub lattice_constant: f64,
}

impl LatticeGrid {
    pub fn new(n_sites: usize, lattice_constant: f64) -> Result<Self, DynamicsError> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(DynamicsError::OddGrid(n_sites));
        }
        Ok(Self {
            n_sites,
            lattice_constant,
        })
    }

    /// Smallest even site count with `cbar * t_max < L/2`.
    pub fn minimum_sites(band: &BandParams, t_max: f64) -> usize {
        let cells = 2.0 * band.cbar() * t_max / band.lattice_constant();
        let mut n = cells.floor() as usize + 1;
        if n % 2 == 1 {
            n += 1;
        }
        n.max(2)
    }

    /// Power-of-two grid satisfying the light-cone rule (at least 64 sites).
    pub fn for_light_cone(band: &BandParams, t_max: f64) -> Self {
        let n = Self::minimum_sites(band, t_max).next_power_of_two().max(64);
        Self {
            n_sites: n,
            lattice_constant: band.lattice_constant(),
        }
    }

    pub fn length(&self) -> f64 {
        self.n_sites as f64 * self.lattice_constant
    }

    /// `k_j = 2πj/L` for `j = -N/2+1, …, N/2`, ascending.
    pub fn wavevectors(&self) -> Vec<f64> {
        let n = self.n_sites as i64;
        let l = self.length();
        (-n / 2 + 1..=n / 2)
            .map(|j| 2.0 * PI * j as f64 / l)
            .collect()
    }

    pub fn site_positions(&self) -> Vec<f64> {
        (0..self.n_sites)
            .map(|n| n as f64 * self.lattice_constant)
            .collect()
    }

    /// Signed minimal-image displacement `x - y` on the ring.
    pub fn minimal_image(&self, x: f64, y: f64) -> f64 {
        let l = self.length();
        let d = (x - y).rem_euclid(l);
        if d >= 0.5 * l {
            d - l
        } else {
            d
        }
    }

    pub(crate) fn check_light_cone(&self, band: &BandParams, t_max: f64) -> Result<(), DynamicsError> {
        let reach = band.cbar() * t_max;
        let half_length = 0.5 * self.length();
        if reach < half_length {
            Ok(())
        } else {
            Err(DynamicsError::LightConeWrap {
                reach,
                half_length,
                required: Self::minimum_sites(band, t_max),
            })
        }
    }
}

/// On-site disorder drawn uniformly from `[-ε/2, ε/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub epsilon: f64,
    pub seed: u64,
    pub n_realizations: usize,
}

/// On-site frequency offsets for one realization; deterministic in
/// `(seed, realization)`.
pub fn sample_disorder(spec: &DisorderSpec, realization: u64, n_sites: usize) -> Vec<f64> {
    if spec.epsilon == 0.0 {
        return vec![0.0; n_sites];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(realization);
    let half = 0.5 * spec.epsilon.abs();
    let dist = Uniform::new_inclusive(-half, half);
    (0..n_sites).map(|_| dist.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub t_max: f64,
    pub dt: f64,
    /// Record every `stride`-th step (snapshot steps are always recorded).
    pub stride: usize,
    pub snapshot_times: Vec<f64>,
}

impl RunSettings {
    pub fn new(t_max: f64, dt: f64) -> Self {
        Self {
            t_max,
            dt,
            stride: 1,
            snapshot_times: Vec::new(),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub(crate) fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(DynamicsError::InvalidRun {
                name: "t_max",
                value: self.t_max,
            });
        }
        if !(self.dt > 0.0) {
            return Err(DynamicsError::InvalidRun {
                name: "dt",
                value: self.dt,
            });
        }
        if self.dt > MAX_DT * (1.0 + 1e-12) {
            return Err(DynamicsError::StepTooLarge {
                dt: self.dt,
                max: MAX_DT,
            });
        }
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= self.t_max * (1.0 + 1e-12)) {
                return Err(DynamicsError::SnapshotOutOfRange(t));
            }
        }
        Ok(())
    }

    /// Step indices at which snapshots are taken.
    pub(crate) fn snapshot_steps(&self) -> Vec<usize> {
        self.snapshot_times
            .iter()
            .map(|t| (t / self.dt).round() as usize)
            .collect()
    }
}

/// Everything a propagator needs. The band is expressed with `J` as the
/// energy unit, so `dt ≤ 0.02` reads as `dt ≤ 0.02/J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub band: BandParams,
    pub atoms: Vec<AtomSpec>,
    pub coupling: CouplingSpec,
    pub grid: LatticeGrid,
    pub run: RunSettings,
    /// Initial atomic amplitudes; the field starts in vacuum.
    pub initial: Vec<Complex64>,
    /// Optional on-site frequency offsets, one per site.
    pub disorder: Option<Vec<f64>>,
    /// `(seed, realization, epsilon)` recorded in the manifest.
    pub disorder_label: Option<(u64, u64, f64)>,
}

impl Simulation {
    /// Atom 0 excited, all others in the ground state.
    pub fn new(
        band: BandParams,
        atoms: Vec<AtomSpec>,
        coupling: CouplingSpec,
        grid: LatticeGrid,
        run: RunSettings,
    ) -> Self {
        let mut initial = vec![Complex64::new(0.0, 0.0); atoms.len()];
        if let Some(first) = initial.first_mut() {
            *first = Complex64::new(1.0, 0.0);
        }
        Self {
            band,
            atoms,
            coupling,
            grid,
            run,
            initial,
            disorder: None,
            disorder_label: None,
        }
    }

    pub fn with_initial(mut self, initial: Vec<Complex64>) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_disorder(mut self, offsets: Vec<f64>) -> Self {
        self.disorder = Some(offsets);
        self
    }

    /// Draws realization `realization` of `spec` onto this grid.
    pub fn with_disorder_realization(mut self, spec: &DisorderSpec, realization: u64) -> Self {
        self.disorder = Some(sample_disorder(spec, realization, self.grid.n_sites));
        self.disorder_label = Some((spec.seed, realization, spec.epsilon));
        self
    }

    pub(crate) fn validate(&self) -> Result<(), DynamicsError> {
        if self.atoms.is_empty() {
            return Err(DynamicsError::NoAtoms);
        }
        for atom in &self.atoms {
            atom.validate()?;
        }
        if self.grid.n_sites < 2 || !self.grid.n_sites.is_multiple_of(2) {
            return Err(DynamicsError::OddGrid(self.grid.n_sites));
        }
        self.run.validate()?;
        // The step bound is stated in units of 1/J.
        if self.run.dt * self.band.hopping() > MAX_DT * (1.0 + 1e-12) {
            return Err(DynamicsError::StepTooLarge {
                dt: self.run.dt,
                max: MAX_DT / self.band.hopping(),
            });
        }
        self.grid.check_light_cone(&self.band, self.run.t_max)?;
        self.coupling.validate(self.grid.lattice_constant)?;
        if self.initial.len() != self.atoms.len() {
            return Err(DynamicsError::InitialLength {
                got: self.initial.len(),
                expected: self.atoms.len(),
            });
        }
        let norm: f64 = self.initial.iter().map(|c| c.norm_sqr()).sum();
        if norm > 1.0 + 1e-12 {
            return Err(DynamicsError::InitialNorm(norm));
        }
        if let Some(d) = &self.disorder {
            if d.len() != self.grid.n_sites {
                return Err(DynamicsError::DisorderLength {
                    got: d.len(),
                    expected: self.grid.n_sites,
                });
            }
        }
        Ok(())
    }
}

/// Runs whichever propagator matches the configured coupling.
pub fn evolve(sim: &Simulation) -> Result<SimOutput, DynamicsError> {
    match sim.coupling {
        CouplingSpec::Effective { .. } => evolve_effective(sim),
        CouplingSpec::Full { .. } => evolve_full(sim),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gbar_of_gaussian_profile() {
        let c = CouplingSpec::Full { g: 0.2, z0: 0.1 };
        let ratio = c.gbar_equivalent(1.0) / 2.0;
        assert_abs_diff_eq!(ratio, 0.0595, epsilon = 5e-5);
    }

    #[test]
    fn gbar_equals_cell_average_of_profile() {
        // Sum of the profile over all cells, by quadrature over its support.
        let z0 = 0.13;
        let avg = crate::quad::integrate(
            |x: f64| wannier_profile(x, z0, 1.0),
            -WANNIER_CUTOFF * z0,
            WANNIER_CUTOFF * z0,
            crate::quad::Tolerance::new(1e-14, 1e-13),
        )
        .unwrap()
        .value;
        let c = CouplingSpec::Full { g: 1.0, z0 };
        assert_abs_diff_eq!(c.gbar_equivalent(1.0), avg, epsilon = 1e-8);
    }

    #[test]
    fn wide_wannier_rejected() {
        assert!(CouplingSpec::Full { g: 0.1, z0: 0.6 }.validate(1.0).is_err());
        assert!(CouplingSpec::Full { g: 0.1, z0: 0.1 }.validate(1.0).is_ok());
    }

    #[test]
    fn grid_layout() {
        let g = LatticeGrid::new(8, 1.0).unwrap();
        let ks = g.wavevectors();
        assert_eq!(ks.len(), 8);
        assert_abs_diff_eq!(ks[0], -3.0 * 2.0 * PI / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ks[7], PI, epsilon = 1e-15);
        assert!(LatticeGrid::new(7, 1.0).is_err());
        assert_abs_diff_eq!(g.minimal_image(7.0, 0.0), -1.0);
        assert_abs_diff_eq!(g.minimal_image(0.5, 7.5), 1.0);
    }

    #[test]
    fn light_cone_sizing() {
        let band = BandParams::unit();
        let n = LatticeGrid::minimum_sites(&band, 60.0);
        assert!(n.is_multiple_of(2) && n as f64 > 240.0);
        let g = LatticeGrid::new(n, 1.0).unwrap();
        assert!(g.check_light_cone(&band, 60.0).is_ok());
        let small = LatticeGrid::new(128, 1.0).unwrap();
        match small.check_light_cone(&band, 60.0) {
            Err(DynamicsError::LightConeWrap { required, .. }) => assert_eq!(required, n),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disorder_zero_strength() {
        let spec = DisorderSpec {
            epsilon: 0.0,
            seed: 3,
            n_realizations: 1,
        };
        assert!(sample_disorder(&spec, 0, 16).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn disorder_support_and_moments() {
        let spec = DisorderSpec {
            epsilon: 0.2,
            seed: 11,
            n_realizations: 1,
        };
        let xs = sample_disorder(&spec, 5, 10_000);
        assert!(xs.iter().all(|x| x.abs() <= 0.1));
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expected_var = 0.2f64.powi(2) / 12.0;
        assert!(mean.abs() < 3.0 * (expected_var / n).sqrt(), "mean {mean}");
        assert!((var / expected_var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn disorder_deterministic_per_realization() {
        let spec = DisorderSpec {
            epsilon: 0.5,
            seed: 42,
            n_realizations: 3,
        };
        assert_eq!(sample_disorder(&spec, 1, 32), sample_disorder(&spec, 1, 32));
        assert_ne!(sample_disorder(&spec, 1, 32), sample_disorder(&spec, 2, 32));
    }
}
