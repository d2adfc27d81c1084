use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{AtomSpec, CouplingSpec, DynamicsError, LatticeGrid, RunSettings};
use crate::band::{resonant_wavevectors, BandParams, ComovingFrame};

/// Photon field and atomic amplitudes at one recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    /// Field amplitude on each site `z_n = n a`.
    pub field: Vec<Complex64>,
    /// Lab-frame atomic amplitudes.
    pub atoms: Vec<Complex64>,
}

impl Snapshot {
    pub fn photon_number(&self) -> f64 {
        self.field.iter().map(|c| c.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRecord {
    pub hopping: f64,
    pub lattice_constant: f64,
    pub photon_loss: f64,
}

impl From<&BandParams> for BandRecord {
    fn from(b: &BandParams) -> Self {
        Self {
            hopping: b.hopping(),
            lattice_constant: b.lattice_constant(),
            photon_loss: b.photon_loss(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisorderRecord {
    pub epsilon: f64,
    pub seed: u64,
    pub realization: u64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub model: &'static str,
    pub integrator: &'static str,
    pub band: BandRecord,
    pub atoms: Vec<AtomSpec>,
    pub coupling: CouplingSpec,
    pub gbar_equivalent: f64,
    pub grid: LatticeGrid,
    pub run: RunSettings,
    pub initial: Vec<Complex64>,
    pub disorder: Option<DisorderRecord>,
    /// Disorder supplied directly rather than drawn from a seed.
    pub custom_disorder: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub times: Vec<f64>,
    /// `populations[i][n]` is `p_e` of atom `i` at `times[n]`.
    pub populations: Vec<Vec<f64>>,
    pub norm: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub manifest: RunManifest,
}

impl SimOutput {
    pub fn atom_count(&self) -> usize {
        self.populations.len()
    }

    pub(crate) fn with_capacity(manifest: RunManifest, atoms: usize, steps: usize) -> Self {
        Self {
            times: Vec::with_capacity(steps),
            populations: vec![Vec::with_capacity(steps); atoms],
            norm: Vec::with_capacity(steps),
            snapshots: Vec::new(),
            manifest,
        }
    }

    pub(crate) fn record(&mut self, t: f64, atoms: &[Complex64], field_norm: f64) {
        self.times.push(t);
        let mut norm = field_norm;
        for (series, c) in self.populations.iter_mut().zip(atoms) {
            let p = c.norm_sqr();
            series.push(p);
            norm += p;
        }
        self.norm.push(norm);
    }
}

/// `ψ(z_n) = (1/√N) Σ_j ψ_{k_j} e^{i k_j z_n}` with `psi_k` in ascending-k
/// order as returned by [`LatticeGrid::wavevectors`].
pub fn to_position(psi_k: &[Complex64], grid: &LatticeGrid) -> Vec<Complex64> {
    let n = grid.n_sites;
    assert_eq!(psi_k.len(), n, "k-space state does not match the grid");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (m, &c) in psi_k.iter().enumerate() {
        buf[ascending_to_fft(m, n)] = c;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Position in an FFT-ordered buffer of the `m`-th ascending wavevector.
pub(crate) fn ascending_to_fft(m: usize, n: usize) -> usize {
    let j = m as i64 - (n as i64 / 2 - 1);
    j.rem_euclid(n as i64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonSplit {
    pub time: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub populations: Vec<f64>,
    /// Photon fractions left/right of the atom, one entry per snapshot.
    pub splits: Vec<PhotonSplit>,
    /// `retardation[j]` is the photon travel time from this atom to atom `j`,
    /// `None` for the atom itself or when no resonance carries light that way.
    pub retardation: Vec<Option<f64>>,
}

/// Per-atom observables. Fractions are measured relative to the atom's
/// position at each snapshot time; sites exactly under the atom count half
/// to each side. Sites are unwrapped around the atom's starting point, which
/// the light-cone rule keeps unambiguous even after the atom has moved more
/// than `L/2` away from photons it emitted early.
pub fn observables(out: &SimOutput, atom_index: usize) -> Result<Observables, DynamicsError> {
    let count = out.atom_count();
    if atom_index >= count {
        return Err(DynamicsError::AtomIndex {
            index: atom_index,
            count,
        });
    }
    if out.snapshots.is_empty() {
        return Err(DynamicsError::MissingSnapshots);
    }
    let grid = out.manifest.grid;
    let atom = out.manifest.atoms[atom_index];
    let splits = out
        .snapshots
        .iter()
        .map(|snap| {
            let offset = atom.position - atom.trajectory(snap.time);
            let (mut left, mut right) = (0.0, 0.0);
            for (n, c) in snap.field.iter().enumerate() {
                let d = grid.minimal_image(n as f64 * grid.lattice_constant, atom.position) + offset;
                let w = c.norm_sqr();
                if d < 0.0 {
                    left += w;
                } else if d > 0.0 {
                    right += w;
                } else {
                    left += 0.5 * w;
                    right += 0.5 * w;
                }
            }
            let total = left + right;
            if total > 0.0 {
                left /= total;
                right /= total;
            }
            PhotonSplit {
                time: snap.time,
                left,
                right,
            }
        })
        .collect();

    let b = &out.manifest.band;
    let band = BandParams::new(b.hopping, b.lattice_constant, b.photon_loss)
        .expect("manifest band was validated before the run");
    let retardation = out
        .manifest
        .atoms
        .iter()
        .enumerate()
        .map(|(j, other)| {
            if j == atom_index {
                None
            } else {
                retardation_time(&band, &atom, other.position - atom.position)
            }
        })
        .collect();

    Ok(Observables {
        populations: out.populations[atom_index].clone(),
        splits,
        retardation,
    })
}

/// `|d / (v_g(k) - v)|` for the fastest resonance propagating towards a
/// target at signed separation `d`: `k < 0` for targets on the left, `k > 0`
/// on the right.
pub fn retardation_time(band: &BandParams, atom: &AtomSpec, separation: f64) -> Option<f64> {
    if separation == 0.0 {
        return Some(0.0);
    }
    let frame = ComovingFrame::new(*band, atom.velocity);
    resonant_wavevectors(atom.detuning, &frame)
        .into_iter()
        .filter(|r| if separation < 0.0 { r.k < 0.0 } else { r.k > 0.0 })
        .filter(|r| r.comoving_velocity * separation > 0.0)
        .map(|r| (separation / r.comoving_velocity).abs())
        .min_by(f64::total_cmp)
}

/// Fraction of the photon number farther than `cbar t + 3a` from every
/// point every atom has visited up to the snapshot time.
pub fn density_outside_light_cone(out: &SimOutput, snapshot: usize) -> Option<f64> {
    let snap = out.snapshots.get(snapshot)?;
    let grid = out.manifest.grid;
    let b = &out.manifest.band;
    let l = grid.length();
    let reach = 2.0 * b.hopping * b.lattice_constant * snap.time + 3.0 * grid.lattice_constant;
    let segments: Vec<(f64, f64)> = out
        .manifest
        .atoms
        .iter()
        .map(|a| {
            let (z0, z1) = (a.position, a.trajectory(snap.time));
            // Oriented so the segment runs in the positive direction.
            if z1 >= z0 {
                (z0, z1 - z0)
            } else {
                (z1, z0 - z1)
            }
        })
        .collect();
    let (mut outside, mut total) = (0.0, 0.0);
    for (n, c) in snap.field.iter().enumerate() {
        let x = n as f64 * grid.lattice_constant;
        let w = c.norm_sqr();
        total += w;
        let near = segments.iter().any(|&(start, len)| {
            if len >= l {
                return true;
            }
            let dx = (x - start).rem_euclid(l);
            let dist = if dx <= len { 0.0 } else { (dx - len).min(l - dx) };
            dist <= reach
        });
        if !near {
            outside += w;
        }
    }
    Some(if total > 0.0 { outside / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn direct_dft(psi_k: &[Complex64], grid: &LatticeGrid) -> Vec<Complex64> {
        let ks = grid.wavevectors();
        let n = grid.n_sites;
        (0..n)
            .map(|s| {
                let z = s as f64 * grid.lattice_constant;
                ks.iter()
                    .zip(psi_k)
                    .map(|(&k, &c)| c * Complex64::new(0.0, k * z).exp())
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        let grid = LatticeGrid::new(12, 1.0).unwrap();
        let psi: Vec<Complex64> = (0..12)
            .map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()))
            .collect();
        let fast = to_position(&psi, &grid);
        let slow = direct_dft(&psi, &grid);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_flat() {
        let grid = LatticeGrid::new(16, 1.0).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); 16];
        psi[5] = Complex64::new(1.0, 0.0);
        for c in to_position(&psi, &grid) {
            assert_abs_diff_eq!(c.norm(), 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn zone_edge_mode_alternates() {
        let grid = LatticeGrid::new(8, 1.0).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); 8];
        psi[7] = Complex64::new(1.0, 0.0);
        assert_abs_diff_eq!(grid.wavevectors()[7], PI);
        let z = to_position(&psi, &grid);
        for (n, c) in z.iter().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(c.re, sign / 8f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn split_survives_long_flight() {
        // The earliest photons end up farther than L/2 behind the atom.
        use crate::dynamics::{evolve_effective, CouplingSpec, RunSettings, Simulation};
        let band = BandParams::unit();
        let grid = LatticeGrid::for_light_cone(&band, 100.0);
        let sim = Simulation::new(
            band,
            vec![AtomSpec::new(2.0, 0.0, 1.0)],
            CouplingSpec::Effective { gbar: 0.2 },
            grid,
            RunSettings::new(100.0, 0.01).with_stride(100).with_snapshots(vec![100.0]),
        );
        let out = evolve_effective(&sim).unwrap();
        let split = observables(&out, 0).unwrap().splits[0];
        assert!(split.left > 0.95, "{split:?}");
    }

    #[test]
    fn retardation_picks_direction() {
        let band = BandParams::unit();
        let atom = AtomSpec::new(2.0, 47.0, 1.0);
        let tau = retardation_time(&band, &atom, -45.0).unwrap();
        // Single backward root of -2cos k - k = 2 in the zone.
        let roots = resonant_wavevectors(2.0, &ComovingFrame::new(band, 1.0));
        assert_eq!(roots.len(), 1);
        assert_abs_diff_eq!(tau, 45.0 / roots[0].comoving_velocity.abs(), epsilon = 1e-12);
        assert!(retardation_time(&band, &atom, 45.0).is_none());
    }
}
