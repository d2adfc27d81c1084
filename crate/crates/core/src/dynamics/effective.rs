use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::integrator::Rk4;
use super::output::{DisorderRecord, RunManifest, SimOutput, Snapshot};
use super::{CouplingSpec, DynamicsError, Simulation};

/// Phasors `e^{iθ_ik(t)}` for every atom and mode, plus `e^{-iω_k t}` when
/// the disorder term needs to leave the interaction picture.
struct PhaseTable {
    time: f64,
    atoms: Vec<Complex64>,
    band: Vec<Complex64>,
}

struct Phases {
    base: Vec<Complex64>,
    rates: Vec<f64>,
    omegas: Vec<f64>,
    with_band: bool,
    slots: [PhaseTable; 3],
    next: usize,
    tol: f64,
}

impl Phases {
    fn get(&mut self, t: f64) -> usize {
        if let Some(i) = self.slots.iter().position(|s| (s.time - t).abs() <= self.tol) {
            return i;
        }
        let i = self.next;
        self.next = (self.next + 1) % 3;
        let slot = &mut self.slots[i];
        slot.time = t;
        for ((p, b), r) in slot.atoms.iter_mut().zip(&self.base).zip(&self.rates) {
            *p = b * Complex64::from_polar(1.0, r * t);
        }
        if self.with_band {
            for (p, w) in slot.band.iter_mut().zip(&self.omegas) {
                *p = Complex64::from_polar(1.0, -w * t);
            }
        }
        i
    }
}

/// Effective continuum model in k-space.
///
/// Lab-frame equations
///
/// ```text
/// dc_i/dt = -i δ_i c_i - (γ_a/2) c_i - i ḡ √(a/L) Σ_k e^{ik z_i(t)} ψ_k
/// dψ_k/dt = -i ω_k ψ_k - (γ_p/2) ψ_k - i ḡ √(a/L) Σ_i e^{-ik z_i(t)} c_i
/// ```
///
/// are integrated for `C_i = c_i e^{iδ_i t}`, `Φ_k = ψ_k e^{iω_k t}`, so the
/// RK4 step only has to resolve the coupling. Disorder enters as site energies
/// and is applied through an FFT round trip.
pub fn evolve_effective(sim: &Simulation) -> Result<SimOutput, DynamicsError> {
    let gbar = match sim.coupling {
        CouplingSpec::Effective { gbar } => gbar,
        CouplingSpec::Full { .. } => return Err(DynamicsError::WrongCoupling("effective")),
    };
    sim.validate()?;

    let grid = sim.grid;
    let n = grid.n_sites;
    let m = sim.atoms.len();
    let a = grid.lattice_constant;
    let l = grid.length();
    // Wavevectors in FFT order: slot s holds j = s for s ≤ N/2, else s - N.
    let ks: Vec<f64> = (0..n)
        .map(|s| {
            let j = if s <= n / 2 { s as i64 } else { s as i64 - n as i64 };
            2.0 * std::f64::consts::PI * j as f64 / l
        })
        .collect();
    let omegas: Vec<f64> = ks.iter().map(|&k| sim.band.omega_unchecked(k)).collect();
    let coupling = gbar * (a / l).sqrt();
    let half_gp = 0.5 * sim.band.photon_loss();
    let half_ga: Vec<f64> = sim.atoms.iter().map(|x| 0.5 * x.atomic_loss).collect();

    let mut base = Vec::with_capacity(m * n);
    let mut rates = Vec::with_capacity(m * n);
    for atom in &sim.atoms {
        for (&k, &w) in ks.iter().zip(&omegas) {
            base.push(Complex64::from_polar(1.0, k * atom.position));
            rates.push(atom.detuning - w + k * atom.velocity);
        }
    }

    let disorder = sim.disorder.as_ref().filter(|d| d.iter().any(|&x| x != 0.0));
    let needs_band = disorder.is_some();
    let empty_slot = || PhaseTable {
        time: f64::NAN,
        atoms: vec![Complex64::new(0.0, 0.0); m * n],
        band: if needs_band {
            vec![Complex64::new(0.0, 0.0); n]
        } else {
            Vec::new()
        },
    };
    let mut phases = Phases {
        base,
        rates,
        omegas: omegas.clone(),
        with_band: needs_band,
        slots: [empty_slot(), empty_slot(), empty_slot()],
        next: 0,
        tol: 1e-9 * sim.run.dt,
    };

    let mut planner = FftPlanner::new();
    let fft_fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let fft_inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut fft_scratch =
        vec![Complex64::new(0.0, 0.0); fft_fwd.get_inplace_scratch_len().max(fft_inv.get_inplace_scratch_len())];
    let inv_n = 1.0 / n as f64;

    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let slot = phases.get(t);
        let table = &phases.slots[slot];
        let (c, phi) = y.split_at(m);
        let (dc, dphi) = dy.split_at_mut(m);
        for (dp, p) in dphi.iter_mut().zip(phi) {
            *dp = -half_gp * p;
        }
        for i in 0..m {
            let row = &table.atoms[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, f) in row.iter().zip(phi) {
                acc += p * f;
            }
            dc[i] = -half_ga[i] * c[i] + Complex64::new(0.0, -coupling) * acc;
            let src = Complex64::new(0.0, -coupling) * c[i];
            for (dp, p) in dphi.iter_mut().zip(row) {
                *dp += p.conj() * src;
            }
        }
        if let Some(d) = disorder {
            // -i e^{iω t} F[δω ⊙ F⁻¹(e^{-iω t} Φ)]
            for ((s, f), b) in scratch.iter_mut().zip(phi).zip(&table.band) {
                *s = f * b;
            }
            fft_inv.process_with_scratch(&mut scratch, &mut fft_scratch);
            for (s, e) in scratch.iter_mut().zip(d) {
                *s *= e * inv_n;
            }
            fft_fwd.process_with_scratch(&mut scratch, &mut fft_scratch);
            for ((dp, s), b) in dphi.iter_mut().zip(&scratch).zip(&table.band) {
                *dp += Complex64::new(0.0, -1.0) * s * b.conj();
            }
        }
    };

    let mut y = vec![Complex64::new(0.0, 0.0); m + n];
    y[..m].copy_from_slice(&sim.initial);

    let manifest = manifest_for(sim, "effective", "rk4, interaction picture, k-space");
    let steps = sim.run.steps();
    let snap_steps = sim.run.snapshot_steps();
    let mut out = SimOutput::with_capacity(manifest, m, steps / sim.run.stride + 2);
    let dt = sim.run.dt;

    let lab_atoms = |y: &[Complex64], t: f64| -> Vec<Complex64> {
        sim.atoms
            .iter()
            .zip(&y[..m])
            .map(|(atom, c)| c * Complex64::from_polar(1.0, -atom.detuning * t))
            .collect()
    };
    let snapshot = |y: &[Complex64], t: f64| -> Snapshot {
        let mut buf: Vec<Complex64> = y[m..]
            .iter()
            .zip(&omegas)
            .map(|(f, w)| f * Complex64::from_polar(1.0, -w * t))
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(n).process(&mut buf);
        let scale = 1.0 / (n as f64).sqrt();
        buf.iter_mut().for_each(|c| *c *= scale);
        Snapshot {
            time: t,
            field: buf,
            atoms: lab_atoms(y, t),
        }
    };

    let mut rk = Rk4::new(m + n);
    for step in 0..=steps {
        let t = step as f64 * dt;
        let is_snap = snap_steps.contains(&step);
        if step % sim.run.stride == 0 || step == steps || is_snap {
            let field: f64 = y[m..].iter().map(|c| c.norm_sqr()).sum();
            out.record(t, &y[..m], field);
        }
        if is_snap {
            out.snapshots.push(snapshot(&y, t));
        }
        if step < steps {
            rk.step(&mut y, t, dt, &mut rhs);
        }
    }
    Ok(out)
}

pub(crate) fn manifest_for(sim: &Simulation, model: &'static str, integrator: &'static str) -> RunManifest {
    RunManifest {
        model,
        integrator,
        band: (&sim.band).into(),
        atoms: sim.atoms.clone(),
        coupling: sim.coupling,
        gbar_equivalent: sim.coupling.gbar_equivalent(sim.grid.lattice_constant),
        grid: sim.grid,
        run: sim.run.clone(),
        initial: sim.initial.clone(),
        disorder: sim.disorder_label.map(|(seed, realization, epsilon)| DisorderRecord {
            epsilon,
            seed,
            realization,
        }),
        custom_disorder: sim.disorder.is_some() && sim.disorder_label.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::BandParams;
    use crate::dynamics::{AtomSpec, LatticeGrid, RunSettings};

    fn sim(gbar: f64, n: usize, t_max: f64) -> Simulation {
        Simulation::new(
            BandParams::unit(),
            vec![AtomSpec::new(0.0, (n / 2) as f64, 0.0)],
            CouplingSpec::Effective { gbar },
            LatticeGrid::new(n, 1.0).unwrap(),
            RunSettings::new(t_max, 0.01),
        )
    }

    #[test]
    fn decoupled_atom_stays_excited() {
        let out = evolve_effective(&sim(0.0, 64, 10.0)).unwrap();
        assert!(out.populations[0].iter().all(|&p| (p - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_full_coupling() {
        let mut s = sim(0.1, 64, 10.0);
        s.coupling = CouplingSpec::Full { g: 0.1, z0: 0.1 };
        assert_eq!(
            evolve_effective(&s).unwrap_err(),
            DynamicsError::WrongCoupling("effective")
        );
    }

    #[test]
    fn rejects_wrapping_light_cone() {
        let err = evolve_effective(&sim(0.1, 64, 20.0)).unwrap_err();
        assert!(matches!(err, DynamicsError::LightConeWrap { required: 82, .. }), "{err:?}");
    }

    #[test]
    fn rejects_large_step() {
        let mut s = sim(0.1, 64, 10.0);
        s.run.dt = 0.05;
        assert!(matches!(evolve_effective(&s), Err(DynamicsError::StepTooLarge { .. })));
    }

    #[test]
    fn early_decay_is_quadratic() {
        // p_e ≈ 1 - ḡ² t² for t ≪ 1/J (all modes start in phase).
        let out = evolve_effective(&sim(0.2, 64, 0.1)).unwrap();
        let p = *out.populations[0].last().unwrap();
        let t: f64 = 0.1;
        assert!((1.0 - p - 0.04 * t * t).abs() < 1e-5, "{p}");
    }

    #[test]
    fn snapshot_field_matches_norm() {
        let s = sim(0.2, 128, 20.0);
        let s = Simulation {
            run: s.run.clone().with_snapshots(vec![10.0, 20.0]),
            ..s
        };
        let out = evolve_effective(&s).unwrap();
        assert_eq!(out.snapshots.len(), 2);
        let snap = &out.snapshots[1];
        let total = snap.photon_number() + snap.atoms[0].norm_sqr();
        assert!((total - 1.0).abs() < 1e-9);
        assert!((snap.atoms[0].norm_sqr() - out.populations[0].last().unwrap()).abs() < 1e-14);
    }
}
