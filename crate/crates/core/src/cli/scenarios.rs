use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{CouplingConfig, FiberConfig, GridConfig, Scenario, ScenarioConfig};
use super::table::Table;
use super::CliError;
use crate::band::{BandParams, ComovingFrame};
use crate::dynamics::{
    evolve, evolve_effective, evolve_full, observables, AtomSpec, CouplingSpec, DisorderSpec, LatticeGrid,
    RunSettings, SimOutput, Simulation, Snapshot,
};
use crate::emission::{directionality_from_rates, emission_rates, discrepancy, validity_min_velocity};
use crate::platforms::{cpw_coupling_profile, fiber_sweep, CpwParams, FiberParams};
use crate::spectral::{
    bound_state_frequencies, critical_rates, cubic_decay, diagonalize_comoving, sum_rule, CubicModelParams,
};

pub(crate) struct Outcome {
    pub files: Vec<(String, String)>,
    pub summary: Value,
}

fn uses_band(scenario: Scenario) -> bool {
    !matches!(scenario, Scenario::Fiber | Scenario::Cpw)
}

fn band_params(config: &ScenarioConfig) -> Result<BandParams, CliError> {
    let b = config.band.unwrap_or_default();
    Ok(BandParams::new(b.hopping, b.lattice_constant, b.photon_loss)?)
}

/// Fills in every default so the manifest fully determines the run.
pub(crate) fn resolve(
    mut config: ScenarioConfig,
    scenario: Scenario,
    seed: Option<u64>,
) -> Result<ScenarioConfig, CliError> {
    config.scenario = Some(scenario);
    if uses_band(scenario) {
        config.band = Some(config.band.unwrap_or_default());
    }
    if let (Some(run), None) = (&config.run, &config.grid) {
        let band = band_params(&config)?;
        let grid = LatticeGrid::for_light_cone(&band, run.t_max);
        config.grid = Some(GridConfig { n_sites: grid.n_sites });
    }
    if let (Some(s), Some(d)) = (seed, config.disorder.as_mut()) {
        d.seed = s;
    }
    Ok(config)
}

pub(crate) fn execute(scenario: Scenario, config: &ScenarioConfig) -> Result<Outcome, CliError> {
    match scenario {
        Scenario::Emit | Scenario::Transfer => dynamics(config),
        Scenario::DisorderEnsemble => disorder_ensemble(config),
        Scenario::DirectionalityMap => directionality_map(config),
        Scenario::ValidityMap => validity_map(config),
        Scenario::Boundstates => boundstates(config),
        Scenario::Cubic => cubic(config),
        Scenario::Fiber => fiber(config),
        Scenario::Cpw => cpw(config),
    }
}

fn run_settings(config: &ScenarioConfig) -> RunSettings {
    let run = config.run.as_ref().expect("checked by schema");
    RunSettings::new(run.t_max, run.dt)
        .with_stride(run.stride)
        .with_snapshots(run.snapshot_times.clone())
}

fn grid(config: &ScenarioConfig, band: &BandParams) -> Result<LatticeGrid, CliError> {
    let n = config.grid.expect("resolved").n_sites;
    Ok(LatticeGrid::new(n, band.lattice_constant())?)
}

fn simulation(config: &ScenarioConfig) -> Result<Simulation, CliError> {
    let band = band_params(config)?;
    let atoms = config
        .atoms
        .iter()
        .map(|a| AtomSpec::new(a.detuning, a.position, a.velocity).with_loss(a.atomic_loss))
        .collect();
    let coupling: CouplingSpec = config.coupling.expect("checked by schema").into();
    Ok(Simulation::new(band, atoms, coupling, grid(config, &band)?, run_settings(config)))
}

fn pe_table(out: &SimOutput) -> String {
    let mut header = vec!["t".to_string()];
    header.extend((1..=out.atom_count()).map(|i| format!("pe_{i}")));
    header.push("norm".into());
    let mut table = Table::new(&header);
    let mut row = Vec::with_capacity(header.len());
    for (n, &t) in out.times.iter().enumerate() {
        row.clear();
        row.push(t);
        row.extend(out.populations.iter().map(|p| p[n]));
        row.push(out.norm[n]);
        table.row(&row);
    }
    debug_assert_eq!(table.rows(), out.times.len());
    table.finish()
}

/// Sites ordered by signed position relative to `z = 0` on the ring.
fn snapshot_table(snap: &Snapshot, grid: &LatticeGrid) -> String {
    let mut sites: Vec<(f64, usize)> = (0..grid.n_sites)
        .map(|n| (grid.minimal_image(n as f64 * grid.lattice_constant, 0.0), n))
        .collect();
    sites.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut table = Table::new(&["z", "re", "im", "abs2"]);
    for (z, n) in sites {
        let c = snap.field[n];
        table.row(&[z, c.re, c.im, c.norm_sqr()]);
    }
    table.finish()
}

fn dynamics(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let sim = simulation(config)?;
    let out = evolve(&sim)?;
    let mut files = vec![("pe.csv".to_string(), pe_table(&out))];
    for (i, snap) in out.snapshots.iter().enumerate() {
        files.push((format!("psi_t{i}.csv"), snapshot_table(snap, &sim.grid)));
    }
    let snapshots: Vec<Value> = if out.snapshots.is_empty() {
        Vec::new()
    } else {
        let obs = observables(&out, 0)?;
        out.snapshots
            .iter()
            .zip(&obs.splits)
            .map(|(s, split)| {
                json!({
                    "time": s.time,
                    "photon_number": s.photon_number(),
                    "left_of_atom_1": split.left,
                    "right_of_atom_1": split.right,
                })
            })
            .collect()
    };
    let max_pe: Vec<f64> = out
        .populations
        .iter()
        .map(|p| p.iter().copied().fold(0.0, f64::max))
        .collect();
    let mut summary = json!({
        "model": out.manifest.model,
        "gbar_equivalent": out.manifest.gbar_equivalent,
        "rows": out.times.len(),
        "max_pe": max_pe,
        "snapshots": snapshots,
    });
    if config.scenario == Some(Scenario::Transfer) {
        // Atoms keep their config order; atom 1 starts excited. The reference
        // transfer geometry reads "first atom to the right" as z1 > z2 > z3.
        let descending = sim.atoms.windows(2).all(|w| w[0].position > w[1].position);
        summary["atom_ordering"] = json!({
            "excited": 1,
            "reading": "z1 > z2 > z3",
            "config_matches_reading": descending,
        });
    }
    Ok(Outcome { files, summary })
}

fn disorder_ensemble(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let sim = simulation(config)?;
    let d = config.disorder.expect("checked by schema");
    let spec = DisorderSpec {
        epsilon: d.epsilon,
        seed: d.seed,
        n_realizations: d.n_realizations,
    };
    let clean = evolve(&sim)?;
    let runs: Vec<SimOutput> = (0..d.n_realizations as u64)
        .into_par_iter()
        .map(|r| evolve(&sim.clone().with_disorder_realization(&spec, r)))
        .collect::<Result<_, _>>()?;

    let atoms = clean.atom_count();
    let samples = clean.times.len();
    let mut mean = vec![vec![0.0; samples]; atoms];
    let mut table = Table::new(&["realization", "max_abs_dpe"]);
    let mut deviations = Vec::with_capacity(runs.len());
    for (r, run) in runs.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for ((acc, series), reference) in mean.iter_mut().zip(&run.populations).zip(&clean.populations) {
            for ((m, &p), &p0) in acc.iter_mut().zip(series).zip(reference) {
                *m += p / runs.len() as f64;
                worst = worst.max((p - p0).abs());
            }
        }
        deviations.push(worst);
        table.row(&[r as f64, worst]);
    }

    let mut header = vec!["t".to_string()];
    header.extend((1..=atoms).map(|i| format!("pe_{i}")));
    let mut averaged = Table::new(&header);
    for (n, &t) in clean.times.iter().enumerate() {
        let mut row = vec![t];
        row.extend(mean.iter().map(|p| p[n]));
        averaged.row(&row);
    }
    let mean_max = deviations.iter().sum::<f64>() / deviations.len() as f64;
    Ok(Outcome {
        files: vec![
            ("pe.csv".into(), pe_table(&clean)),
            ("pe_disorder.csv".into(), averaged.finish()),
            ("disorder.csv".into(), table.finish()),
        ],
        summary: json!({
            "epsilon": d.epsilon,
            "seed": d.seed,
            "n_realizations": d.n_realizations,
            "mean_max_abs_dpe": mean_max,
        }),
    })
}

/// `(δ, v)` pairs with `δ` as the slow index.
fn grid_points(deltas: &[f64], velocities: &[f64]) -> Vec<(f64, f64)> {
    deltas
        .iter()
        .flat_map(|&d| velocities.iter().map(move |&v| (d, v)))
        .collect()
}

fn directionality_map(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let band = band_params(config)?;
    let map = config.map.as_ref().expect("checked by schema");
    let gbar = map.gbar.expect("checked by schema");
    let points = grid_points(&map.deltas.values(), &map.velocities.values());
    let rows: Vec<[f64; 5]> = points
        .par_iter()
        .map(|&(delta, v)| {
            let frame = ComovingFrame::new(band, v);
            let rates = emission_rates(delta, &frame, gbar, map.gamma_p)?;
            let d = directionality_from_rates(&rates, band.hopping()).value().unwrap_or(f64::NAN);
            Ok([delta, v, rates.gamma_l, rates.gamma_r, d])
        })
        .collect::<Result<_, CliError>>()?;
    let off_band = rows.iter().filter(|r| r[4].is_nan()).count();
    let mut table = Table::new(&["delta", "v", "gamma_L", "gamma_R", "D"]);
    rows.iter().for_each(|r| table.row(r));
    Ok(Outcome {
        files: vec![("dmap.csv".into(), table.finish())],
        summary: json!({ "points": rows.len(), "off_band_points": off_band }),
    })
}

fn validity_map(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let band = band_params(config)?;
    let map = config.map.as_ref().expect("checked by schema");
    let (g, z0) = match config.coupling {
        Some(CouplingConfig::Full { g, z0 }) => (g, z0),
        _ => unreachable!("checked by schema"),
    };
    let full_coupling = CouplingSpec::Full { g, z0 };
    let gbar = full_coupling.gbar_equivalent(band.lattice_constant());
    let lattice = grid(config, &band)?;
    let run = run_settings(config);
    let t_f = run.t_max;
    let deltas = map.deltas.values();
    let points = grid_points(&deltas, &map.velocities.values());
    let rows: Vec<[f64; 3]> = points
        .par_iter()
        .map(|&(delta, v)| {
            let atoms = vec![AtomSpec::new(delta, 0.0, v)];
            let full = Simulation::new(band, atoms.clone(), full_coupling, lattice, run.clone());
            let eff = Simulation::new(band, atoms, CouplingSpec::Effective { gbar }, lattice, run.clone());
            let d = discrepancy(&evolve_effective(&eff)?, &evolve_full(&full)?, t_f)?;
            Ok([delta, v, d])
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new(&["delta", "v", "d"]);
    rows.iter().for_each(|r| table.row(r));
    let mut boundary = Table::new(&["delta", "v_min"]);
    for &delta in &deltas {
        boundary.row(&[delta, validity_min_velocity(delta, &band) * band.cbar()]);
    }
    Ok(Outcome {
        files: vec![
            ("validity.csv".into(), table.finish()),
            ("validity_boundary.csv".into(), boundary.finish()),
        ],
        summary: json!({ "gbar_equivalent": gbar, "t_f": t_f, "points": rows.len() }),
    })
}

fn boundstates(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let band = band_params(config)?;
    let b = config.bound.as_ref().expect("checked by schema");
    let points = grid_points(&b.deltas.values(), &b.velocities.values());
    let mut header = vec![
        "delta",
        "v",
        "omega_plus",
        "omega_minus",
        "atom_weight_plus",
        "atom_weight_minus",
        "xi_plus",
        "xi_minus",
    ];
    if b.oracle_sites.is_some() {
        header.extend(["oracle_plus", "oracle_minus"]);
    }
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&(delta, v)| {
            let frame = ComovingFrame::new(band, v);
            let res = bound_state_frequencies(delta, &frame, b.gbar)?;
            let nan = f64::NAN;
            let mut row = vec![
                delta,
                v,
                res.upper.map_or(nan, |s| s.omega),
                res.lower.map_or(nan, |s| s.omega),
                res.upper.map_or(nan, |s| s.atom_weight),
                res.lower.map_or(nan, |s| s.atom_weight),
                res.upper.and_then(|s| s.localization_length).unwrap_or(nan),
                res.lower.and_then(|s| s.localization_length).unwrap_or(nan),
            ];
            if let Some(n) = b.oracle_sites {
                let spectrum = diagonalize_comoving(delta, &frame, b.gbar, n)?;
                let (lo, hi) = frame.extremes();
                let mid = 0.5 * (lo + hi);
                let eig = spectrum.bound_states.iter().map(|s| s.eigenvalue);
                row.push(eig.clone().filter(|&e| e > mid).fold(nan, f64::max));
                row.push(eig.filter(|&e| e < mid).fold(nan, f64::min));
            }
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new(&header);
    rows.iter().for_each(|r| table.row(r));
    Ok(Outcome {
        files: vec![("bound.csv".into(), table.finish())],
        summary: json!({ "points": rows.len() }),
    })
}

fn cubic(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let band = band_params(config)?;
    let c = config.cubic.expect("checked by schema");
    let params = CubicModelParams::new(band.hopping(), band.lattice_constant(), c.gbar, c.delta)?;
    let decay = cubic_decay(&params, c.t_max, c.dt)?;
    let rates = critical_rates(c.gbar, band.hopping())?;
    let mut table = Table::new(&["t", "pe", "pe_pole"]);
    for (&t, &p) in decay.times.iter().zip(&decay.populations) {
        let pole = (rates.omega_c * t).cos().powi(2) * (-rates.gamma_c * t).exp();
        table.row(&[t, p, pole]);
    }
    Ok(Outcome {
        files: vec![("cubic.csv".into(), table.finish())],
        summary: json!({
            "omega_c": rates.omega_c,
            "gamma_c": rates.gamma_c,
            "cutoff": decay.cutoff,
            "sum_rule": sum_rule(&params)?,
        }),
    })
}

fn fiber(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let f: &FiberConfig = config.fiber.as_ref().expect("checked by schema");
    let base = FiberParams {
        radius: f.radius,
        refractive_index: f.refractive_index,
        cutoff_frequency: f.cutoff_frequency,
        modulation: 0.0,
        period: 1.0,
    };
    base.validate()?;
    let ratios = f.ratios.values();
    let points: Vec<_> = f
        .periods
        .values()
        .par_iter()
        .flat_map_iter(|&a| fiber_sweep(&base, &[a], &ratios))
        .collect();
    let nan = f64::NAN;
    let mut table = Table::new(&["a", "dR_over_R0", "J", "cbar"]);
    for p in &points {
        table.row(&[p.period, p.ratio, p.hopping.unwrap_or(nan), p.cbar.unwrap_or(nan)]);
    }
    let unconverged = points.iter().filter(|p| p.hopping.is_none()).count();
    Ok(Outcome {
        files: vec![("band_fiber.csv".into(), table.finish())],
        summary: json!({
            "effective_mass": base.effective_mass(),
            "azimuthal_order": base.azimuthal_order(),
            "points": points.len(),
            "unconverged_points": unconverged,
        }),
    })
}

fn cpw(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let c = config.cpw.as_ref().expect("checked by schema");
    let heights = c.heights.values();
    let params = CpwParams {
        l1: c.l1,
        l2: c.l2,
        length: c.length,
        omega0: c.omega0,
        atom_height: heights[0],
        dipole: c.dipole,
        lattice_constant: c.lattice_constant,
        ground_depth: c.ground_depth,
    };
    let profile = cpw_coupling_profile(&params, &heights)?;
    let nan = f64::NAN;
    let mut table = Table::new(&["y_a", "g0", "gbar", "gbar_over_J", "gamma_c"]);
    for (y, coupling) in &profile {
        let (ratio, gamma_c) = match c.hopping {
            Some(j) => {
                let ratio = coupling.gbar / j;
                (ratio, critical_rates(ratio, 1.0)?.gamma_c * j)
            }
            None => (nan, nan),
        };
        table.row(&[*y, coupling.g0, coupling.gbar, ratio, gamma_c]);
    }
    let first = profile[0].1;
    Ok(Outcome {
        files: vec![("cpw.csv".into(), table.finish())],
        summary: json!({ "mode_volume": first.mode_volume, "e0": first.e0 }),
    })
}
