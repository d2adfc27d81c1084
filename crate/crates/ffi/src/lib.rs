//! C ABI over `slowlight`.
//!
//! Every fallible call returns an [`SlStatus`]; on failure the message is
//! kept per thread and can be read with [`sl_last_error_message`]. Handles
//! are opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Passing a null handle to a `*_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use slowlight::band::{tilted_dispersion, BandParams, ComovingFrame};
use slowlight::dynamics::{evolve, AtomSpec, CouplingSpec, LatticeGrid, RunSettings, SimOutput, Simulation};
use slowlight::emission::{directionality, emission_rates, validity_min_velocity};
use slowlight::platforms::{fiber_band, FiberParams};
use slowlight::spectral::{bound_state_frequencies, critical_rates};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Band = 3,
    Dynamics = 4,
    Emission = 5,
    Spectral = 6,
    Platform = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlCouplingKind {
    /// Cell-averaged coupling `ḡ` of the continuum model.
    Effective = 0,
    /// Peak coupling `g` with a Gaussian Wannier profile of width `z0`.
    Full = 1,
}

/// Band parameters `J`, `a` and photon loss `γ_p`.
pub struct SlBand(BandParams);

/// A simulation under construction: settings plus the atoms added so far.
pub struct SlSimulation {
    band: BandParams,
    coupling: CouplingSpec,
    n_sites: usize,
    t_max: f64,
    dt: f64,
    stride: usize,
    atoms: Vec<AtomSpec>,
}

/// Time series returned by [`sl_simulation_run`].
pub struct SlResult(SimOutput);

/// Bound states above and below the tilted band. A missing state has
/// `has_* == false` and NaN fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlBoundStates {
    pub has_upper: bool,
    pub omega_upper: f64,
    pub atom_weight_upper: f64,
    pub has_lower: bool,
    pub omega_lower: f64,
    pub atom_weight_lower: f64,
}

/// Modulated-fiber design inputs, SI units, angular frequencies in rad/s.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlFiberParams {
    pub radius: f64,
    pub refractive_index: f64,
    pub cutoff_frequency: f64,
    pub modulation: f64,
    pub period: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlFiberBand {
    /// `J` (rad/s).
    pub hopping: f64,
    /// `c̄ = 2Ja` (m/s).
    pub cbar: f64,
    /// Band-edge shift between plane-wave cutoffs, relative to the bandwidth.
    pub convergence: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: SlStatus, message: impl Display) -> SlStatus {
    set_error(message);
    status
}

/// Runs `body`, clearing the last error first and turning panics into
/// [`SlStatus::Panic`].
fn guard(body: impl FnOnce() -> SlStatus) -> SlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SlStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! deref {
    ($ptr:expr, $name:literal) => {
        match unsafe { $ptr.as_ref() } {
            Some(v) => v,
            None => return fail(SlStatus::NullPointer, concat!("`", $name, "` is null")),
        }
    };
}

macro_rules! write_out {
    ($ptr:expr, $name:literal, $value:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(slot) => *slot = $value,
            None => return fail(SlStatus::NullPointer, concat!("`", $name, "` is null")),
        }
    };
}

/// Message of the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// # Safety
/// `out` must be null or point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn sl_band_new(hopping: f64, lattice_constant: f64, photon_loss: f64, out: *mut *mut SlBand) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullPointer, "`out` is null");
        }
        match BandParams::new(hopping, lattice_constant, photon_loss) {
            Ok(b) => {
                *out = Box::into_raw(Box::new(SlBand(b)));
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::Band, e),
        }
    })
}

/// # Safety
/// `band` must be null or a handle from [`sl_band_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_band_free(band: *mut SlBand) {
    if !band.is_null() {
        drop(Box::from_raw(band));
    }
}

/// `ω̃_k = -2J cos(ka) - v k` for `k` in the zone `(-π/a, π/a]`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_tilted_dispersion(band: *const SlBand, velocity: f64, k: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        let band = deref!(band, "band");
        match tilted_dispersion(k, &ComovingFrame::new(band.0, velocity)) {
            Ok(w) => {
                write_out!(out, "out", w);
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::Band, e),
        }
    })
}

/// Left and right emission rates at detuning `delta` and velocity `velocity`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_emission_rates(
    band: *const SlBand,
    delta: f64,
    velocity: f64,
    gbar: f64,
    broadening: f64,
    gamma_left: *mut f64,
    gamma_right: *mut f64,
) -> SlStatus {
    guard(|| {
        let band = deref!(band, "band");
        match emission_rates(delta, &ComovingFrame::new(band.0, velocity), gbar, broadening) {
            Ok(r) => {
                write_out!(gamma_left, "gamma_left", r.gamma_l);
                write_out!(gamma_right, "gamma_right", r.gamma_r);
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::Emission, e),
        }
    })
}

/// Directionality `D = (Γ_L - Γ_R)/(Γ_L + Γ_R)`. When the atom does not
/// radiate, `*off_band` is set and `*d` is NaN.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_directionality(
    band: *const SlBand,
    delta: f64,
    velocity: f64,
    gbar: f64,
    broadening: f64,
    d: *mut f64,
    off_band: *mut bool,
) -> SlStatus {
    guard(|| {
        let band = deref!(band, "band");
        match directionality(delta, &ComovingFrame::new(band.0, velocity), gbar, broadening) {
            Ok(value) => {
                write_out!(d, "d", value.value().unwrap_or(f64::NAN));
                write_out!(off_band, "off_band", value.value().is_none());
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::Emission, e),
        }
    })
}

/// Smallest `|v|/c̄` for which the continuum model is valid at `delta`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_validity_min_velocity(band: *const SlBand, delta: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        let band = deref!(band, "band");
        if !delta.is_finite() {
            return fail(SlStatus::InvalidArgument, format!("detuning must be finite, got {delta}"));
        }
        write_out!(out, "out", validity_min_velocity(delta, &band.0));
        SlStatus::Ok
    })
}

/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_bound_states(
    band: *const SlBand,
    delta: f64,
    velocity: f64,
    gbar: f64,
    out: *mut SlBoundStates,
) -> SlStatus {
    guard(|| {
        let band = deref!(band, "band");
        match bound_state_frequencies(delta, &ComovingFrame::new(band.0, velocity), gbar) {
            Ok(r) => {
                let (ou, wu) = r.upper.map_or((f64::NAN, f64::NAN), |s| (s.omega, s.atom_weight));
                let (ol, wl) = r.lower.map_or((f64::NAN, f64::NAN), |s| (s.omega, s.atom_weight));
                write_out!(
                    out,
                    "out",
                    SlBoundStates {
                        has_upper: r.upper.is_some(),
                        omega_upper: ou,
                        atom_weight_upper: wu,
                        has_lower: r.lower.is_some(),
                        omega_lower: ol,
                        atom_weight_lower: wl,
                    }
                );
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::Spectral, e),
        }
    })
}

/// `Ω_c` and `Γ_c` at the critical point `v = c̄`, `δ = -πJ`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_critical_rates(gbar: f64, hopping: f64, omega_c: *mut f64, gamma_c: *mut f64) -> SlStatus {
    guard(|| match critical_rates(gbar, hopping) {
        Ok(r) => {
            write_out!(omega_c, "omega_c", r.omega_c);
            write_out!(gamma_c, "gamma_c", r.gamma_c);
            SlStatus::Ok
        }
        Err(e) => fail(SlStatus::Spectral, e),
    })
}

/// Lowest axial band of a modulated fiber.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_fiber_band(params: *const SlFiberParams, out: *mut SlFiberBand) -> SlStatus {
    guard(|| {
        let p = deref!(params, "params");
        let params = FiberParams {
            radius: p.radius,
            refractive_index: p.refractive_index,
            cutoff_frequency: p.cutoff_frequency,
            modulation: p.modulation,
            period: p.period,
        };
        match fiber_band(&params) {
            Ok(b) => {
                write_out!(
                    out,
                    "out",
                    SlFiberBand {
                        hopping: b.hopping,
                        cbar: b.cbar,
                        convergence: b.convergence,
                    }
                );
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::Platform, e),
        }
    })
}

/// Starts a simulation. `strength` is `ḡ` for the effective coupling and
/// `g` for the full one; `z0` is ignored for the effective coupling.
/// `n_sites == 0` sizes the ring from the light cone of `t_max`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_simulation_new(
    band: *const SlBand,
    kind: SlCouplingKind,
    strength: f64,
    z0: f64,
    n_sites: usize,
    t_max: f64,
    dt: f64,
    stride: usize,
    out: *mut *mut SlSimulation,
) -> SlStatus {
    guard(|| {
        let band = deref!(band, "band");
        if out.is_null() {
            return fail(SlStatus::NullPointer, "`out` is null");
        }
        if stride == 0 {
            return fail(SlStatus::InvalidArgument, "stride must be at least 1");
        }
        let coupling = match kind {
            SlCouplingKind::Effective => CouplingSpec::Effective { gbar: strength },
            SlCouplingKind::Full => CouplingSpec::Full { g: strength, z0 },
        };
        *out = Box::into_raw(Box::new(SlSimulation {
            band: band.0,
            coupling,
            n_sites,
            t_max,
            dt,
            stride,
            atoms: Vec::new(),
        }));
        SlStatus::Ok
    })
}

/// Adds an atom moving as `z(t) = position + velocity t`. The first atom
/// added starts in the excited state.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_simulation_add_atom(
    sim: *mut SlSimulation,
    detuning: f64,
    position: f64,
    velocity: f64,
    atomic_loss: f64,
) -> SlStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(SlStatus::NullPointer, "`sim` is null");
        };
        sim.atoms
            .push(AtomSpec::new(detuning, position, velocity).with_loss(atomic_loss));
        SlStatus::Ok
    })
}

/// Runs the simulation; the handle stays usable afterwards.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_simulation_run(sim: *const SlSimulation, out: *mut *mut SlResult) -> SlStatus {
    guard(|| {
        let s = deref!(sim, "sim");
        if out.is_null() {
            return fail(SlStatus::NullPointer, "`out` is null");
        }
        let grid = if s.n_sites == 0 {
            LatticeGrid::for_light_cone(&s.band, s.t_max)
        } else {
            match LatticeGrid::new(s.n_sites, s.band.lattice_constant()) {
                Ok(g) => g,
                Err(e) => return fail(SlStatus::Dynamics, e),
            }
        };
        let run = RunSettings::new(s.t_max, s.dt).with_stride(s.stride);
        let simulation = Simulation::new(s.band, s.atoms.clone(), s.coupling, grid, run);
        match evolve(&simulation) {
            Ok(output) => {
                *out = Box::into_raw(Box::new(SlResult(output)));
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::Dynamics, e),
        }
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_simulation_free(sim: *mut SlSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of time samples and atoms in a result.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_result_shape(result: *const SlResult, samples: *mut usize, atoms: *mut usize) -> SlStatus {
    guard(|| {
        let r = deref!(result, "result");
        write_out!(samples, "samples", r.0.times.len());
        write_out!(atoms, "atoms", r.0.atom_count());
        SlStatus::Ok
    })
}

fn copy_series(src: &[f64], buffer: *mut f64, len: usize) -> SlStatus {
    if buffer.is_null() {
        return fail(SlStatus::NullPointer, "`buffer` is null");
    }
    if len < src.len() {
        return fail(
            SlStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buffer, src.len()) };
    SlStatus::Ok
}

/// Copies the sample times into `buffer` (at least `samples` long).
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sl_result_times(result: *const SlResult, buffer: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let r = deref!(result, "result");
        copy_series(&r.0.times, buffer, len)
    })
}

/// Copies `p_e(t)` of atom `atom` (0-based) into `buffer`.
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sl_result_populations(
    result: *const SlResult,
    atom: usize,
    buffer: *mut f64,
    len: usize,
) -> SlStatus {
    guard(|| {
        let r = deref!(result, "result");
        match r.0.populations.get(atom) {
            Some(p) => copy_series(p, buffer, len),
            None => fail(
                SlStatus::InvalidArgument,
                format!("atom {atom} out of range ({} atoms)", r.0.atom_count()),
            ),
        }
    })
}

/// Copies the total norm series into `buffer`.
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sl_result_norm(result: *const SlResult, buffer: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let r = deref!(result, "result");
        copy_series(&r.0.norm, buffer, len)
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_result_free(result: *mut SlResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
