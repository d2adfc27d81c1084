use std::f64::consts::PI;

use num_complex::Complex64;

use super::effective::manifest_for;
use super::integrator::Rk4;
use super::output::{SimOutput, Snapshot};
use super::{CouplingSpec, DynamicsError, LatticeGrid, Simulation, WANNIER_CUTOFF};

/// Gaussian Wannier profile `π^{-1/4} √(a/z0) exp(-x²/2z0²)`, zero beyond
/// the cutoff.
pub fn wannier_profile(x: f64, z0: f64, lattice_constant: f64) -> f64 {
    if x.abs() > WANNIER_CUTOFF * z0 {
        return 0.0;
    }
    PI.powf(-0.25) * (lattice_constant / z0).sqrt() * (-0.5 * (x / z0).powi(2)).exp()
}

/// Sites within the Wannier cutoff of `z` and their profile weights.
fn couplings(z: f64, z0: f64, grid: &LatticeGrid, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let a = grid.lattice_constant;
    let n = grid.n_sites as i64;
    let reach = WANNIER_CUTOFF * z0;
    let lo = ((z - reach) / a).ceil() as i64;
    let hi = ((z + reach) / a).floor() as i64;
    for s in lo..=hi {
        let site = s.rem_euclid(n) as usize;
        let x = grid.minimal_image(z, site as f64 * a);
        let w = wannier_profile(x, z0, a);
        if w > 0.0 {
            out.push((site, w));
        }
    }
}

/// Full model in the site basis with the position-resolved coupling.
///
/// ```text
/// dψ_n/dt = -i[δω_n ψ_n - J(ψ_{n+1} + ψ_{n-1})] - (γ_p/2) ψ_n - i g Σ_i w(z_i(t) - z_n) c_i
/// dc_i/dt = -i δ_i c_i - (γ_a/2) c_i - i g Σ_n w(z_i(t) - z_n) ψ_n
/// ```
pub fn evolve_full(sim: &Simulation) -> Result<SimOutput, DynamicsError> {
    let (g, z0) = match sim.coupling {
        CouplingSpec::Full { g, z0 } => (g, z0),
        CouplingSpec::Effective { .. } => return Err(DynamicsError::WrongCoupling("full")),
    };
    sim.validate()?;

    let grid = sim.grid;
    let n = grid.n_sites;
    let m = sim.atoms.len();
    let hop = sim.band.hopping();
    let half_gp = 0.5 * sim.band.photon_loss();
    let onsite: Vec<f64> = sim.disorder.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut taps: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];

    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let (c, psi) = y.split_at(m);
        let (dc, dpsi) = dy.split_at_mut(m);
        let minus_i = Complex64::new(0.0, -1.0);
        for s in 0..n {
            let left = psi[if s == 0 { n - 1 } else { s - 1 }];
            let right = psi[if s + 1 == n { 0 } else { s + 1 }];
            dpsi[s] = minus_i * (onsite[s] * psi[s] - hop * (left + right)) - half_gp * psi[s];
        }
        for (i, atom) in sim.atoms.iter().enumerate() {
            couplings(atom.trajectory(t), z0, &grid, &mut taps[i]);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(s, w) in &taps[i] {
                acc += w * psi[s];
                dpsi[s] += minus_i * (g * w) * c[i];
            }
            dc[i] = minus_i * (atom.detuning * c[i] + g * acc) - 0.5 * atom.atomic_loss * c[i];
        }
    };

    let mut y = vec![Complex64::new(0.0, 0.0); m + n];
    y[..m].copy_from_slice(&sim.initial);

    let manifest = manifest_for(sim, "full", "rk4, lab frame, site basis");
    let steps = sim.run.steps();
    let snap_steps = sim.run.snapshot_steps();
    let mut out = SimOutput::with_capacity(manifest, m, steps / sim.run.stride + 2);
    let dt = sim.run.dt;
    let mut rk = Rk4::new(m + n);
    for step in 0..=steps {
        let t = step as f64 * dt;
        let is_snap = snap_steps.contains(&step);
        if step % sim.run.stride == 0 || step == steps || is_snap {
            let field: f64 = y[m..].iter().map(|c| c.norm_sqr()).sum();
            out.record(t, &y[..m], field);
        }
        if is_snap {
            out.snapshots.push(Snapshot {
                time: t,
                field: y[m..].to_vec(),
                atoms: y[..m].to_vec(),
            });
        }
        if step < steps {
            rk.step(&mut y, t, dt, &mut rhs);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::BandParams;
    use crate::dynamics::{AtomSpec, RunSettings};

    #[test]
    fn profile_is_unit_normalized() {
        // ∫ w² dx = a for the untruncated Gaussian.
        let z0 = 0.1;
        let est = crate::quad::integrate(
            |x: f64| wannier_profile(x, z0, 1.0).powi(2),
            -1.0,
            1.0,
            crate::quad::Tolerance::new(1e-13, 1e-12),
        )
        .unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cutoff_tail_is_negligible() {
        let z0 = 0.2;
        let edge = wannier_profile(WANNIER_CUTOFF * z0 * 0.999_999, z0, 1.0);
        let peak = wannier_profile(0.0, z0, 1.0);
        assert!(edge / peak < 1e-7);
        assert_eq!(wannier_profile(WANNIER_CUTOFF * z0 * 1.001, z0, 1.0), 0.0);
    }

    #[test]
    fn couplings_wrap_around() {
        let grid = LatticeGrid::new(16, 1.0).unwrap();
        let mut taps = Vec::new();
        couplings(15.7, 0.2, &grid, &mut taps);
        let sites: Vec<usize> = taps.iter().map(|t| t.0).collect();
        assert!(sites.contains(&15) && sites.contains(&0), "{sites:?}");
        couplings(0.1, 0.2, &grid, &mut taps);
        let sites: Vec<usize> = taps.iter().map(|t| t.0).collect();
        assert!(sites.contains(&15) && sites.contains(&0) && sites.contains(&1), "{sites:?}");
    }

    #[test]
    fn rejects_effective_coupling() {
        let s = Simulation::new(
            BandParams::unit(),
            vec![AtomSpec::new(0.0, 8.0, 0.0)],
            CouplingSpec::Effective { gbar: 0.1 },
            LatticeGrid::new(64, 1.0).unwrap(),
            RunSettings::new(1.0, 0.01),
        );
        assert_eq!(evolve_full(&s).unwrap_err(), DynamicsError::WrongCoupling("full"));
    }
}
