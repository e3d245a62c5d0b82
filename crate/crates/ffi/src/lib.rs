//! C ABI over `subrad`.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` or
//! `*_sample` functions and released by the matching `*_free`. Every
//! fallible call returns a [`SubradStatus`]; on failure the message is
//! available from [`subrad_last_error`] on the same thread. Frequencies are
//! in Hz at this boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use subrad::config::ScenarioConfig;
use subrad::detection::{predicted_peak_rate_per_power, DetectionChain};
use subrad::ensemble::{effective_atom_number, AtomEnsemble, EnsembleKind, SamplerConfig};
use subrad::multilevel::clebsch_gordan_table;
use subrad::params::{hz_to_rad, rad_to_hz, SystemParams};
use subrad::scattering::{
    detuning_grid, field_amplitude_y, sweep_spectrum, DriveParams, SpectrumResult,
};
use subrad::Error;

pub const SUBRAD_KIND_LATTICE: u32 = 0;
pub const SUBRAD_KIND_COMMENSURATE: u32 = 1;
pub const SUBRAD_KIND_UNIFORM: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubradStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Singular = 3,
    Numerical = 4,
    Config = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque system parameters.
pub struct SubradParams(SystemParams);

/// Opaque atomic configuration.
pub struct SubradEnsemble(AtomEnsemble);

/// Opaque ensemble-averaged spectrum.
pub struct SubradSpectrum(SpectrumResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SubradStatus {
    match err {
        Error::InvalidArgument(_) => SubradStatus::InvalidArgument,
        Error::Singular(_) => SubradStatus::Singular,
        Error::Config { .. } | Error::Json(_) => SubradStatus::Config,
        Error::Io(_) | Error::Csv(_) => SubradStatus::Io,
        _ => SubradStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic for [`subrad_last_error`].
fn guard(f: impl FnOnce() -> Result<(), SubradStatus>) -> SubradStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SubradStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SubradStatus::Panic
        }
    }
}

fn fail(err: Error) -> SubradStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn invalid(msg: &str) -> SubradStatus {
    set_error(msg.into());
    SubradStatus::InvalidArgument
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, SubradStatus> {
    if p.is_null() {
        set_error("null pointer argument".into());
        return Err(SubradStatus::NullPointer);
    }
    Ok(&*p)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), SubradStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(SubradStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

fn kind_from(code: u32) -> Result<EnsembleKind, SubradStatus> {
    match code {
        SUBRAD_KIND_LATTICE => Ok(EnsembleKind::Lattice),
        SUBRAD_KIND_COMMENSURATE => Ok(EnsembleKind::Commensurate),
        SUBRAD_KIND_UNIFORM => Ok(EnsembleKind::Uniform),
        _ => Err(invalid("unknown ensemble kind")),
    }
}

fn sampler(kind: u32, on_axis: bool) -> Result<SamplerConfig, SubradStatus> {
    let s = SamplerConfig::new(kind_from(kind)?);
    Ok(if on_axis { s.on_axis() } else { s })
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn subrad_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn subrad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default system parameters. Release with [`subrad_params_free`].
#[no_mangle]
pub extern "C" fn subrad_params_new() -> *mut SubradParams {
    Box::into_raw(Box::new(SubradParams(SystemParams::default())))
}

/// # Safety
/// `params` must come from [`subrad_params_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn subrad_params_free(params: *mut SubradParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Fixes the coupling used in the amplitude (Hz).
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn subrad_params_set_coupling_hz(
    params: *mut SubradParams,
    coupling_hz: f64,
) -> SubradStatus {
    guard(|| {
        if params.is_null() {
            set_error("null pointer argument".into());
            return Err(SubradStatus::NullPointer);
        }
        let mut p = (*params).0.with_coupling(hz_to_rad(coupling_hz));
        if let Err(e) = p.validate() {
            return Err(fail(e));
        }
        std::mem::swap(&mut (*params).0, &mut p);
        Ok(())
    })
}

/// Coupling in use (Hz).
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subrad_params_coupling_hz(
    params: *const SubradParams,
    out: *mut f64,
) -> SubradStatus {
    guard(|| write_out(out, rad_to_hz(deref(params)?.0.g())))
}

/// Draws one configuration of `n_atoms` atoms.
///
/// # Safety
/// `params` must be a live handle and `out` writable. On success `*out`
/// owns a handle to release with [`subrad_ensemble_free`].
#[no_mangle]
pub unsafe extern "C" fn subrad_ensemble_sample(
    params: *const SubradParams,
    kind: u32,
    on_axis: bool,
    n_atoms: usize,
    seed: u64,
    out: *mut *mut SubradEnsemble,
) -> SubradStatus {
    guard(|| {
        let p = &deref(params)?.0;
        let e = sampler(kind, on_axis)?
            .sample(p, n_atoms, seed)
            .map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(SubradEnsemble(e))))
    })
}

/// # Safety
/// `ensemble` must come from [`subrad_ensemble_sample`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn subrad_ensemble_free(ensemble: *mut SubradEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// Number of atoms, or 0 for NULL.
///
/// # Safety
/// `ensemble` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn subrad_ensemble_len(ensemble: *const SubradEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.0.len())
}

/// Σ w² cos²(kx) of the configuration.
///
/// # Safety
/// `ensemble` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subrad_ensemble_effective_atom_number(
    ensemble: *const SubradEnsemble,
    out: *mut f64,
) -> SubradStatus {
    guard(|| write_out(out, effective_atom_number(&deref(ensemble)?.0)))
}

/// |α_y|² for one configuration at Δ_A = Δ_C = `delta_hz`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subrad_field_intensity(
    ensemble: *const SubradEnsemble,
    params: *const SubradParams,
    eta_hz: f64,
    delta_hz: f64,
    out: *mut f64,
) -> SubradStatus {
    guard(|| {
        let drive = DriveParams::resonant(hz_to_rad(eta_hz), hz_to_rad(delta_hz), 0.0);
        let a = field_amplitude_y(&deref(ensemble)?.0, &deref(params)?.0, &drive).map_err(fail)?;
        write_out(out, a.norm_sqr())
    })
}

/// Monte Carlo y-channel spectrum on a symmetric grid of `points`
/// detunings spanning ±`half_span_hz`.
///
/// # Safety
/// `params` must be a live handle and `out` writable. On success `*out`
/// owns a handle to release with [`subrad_spectrum_free`].
#[no_mangle]
pub unsafe extern "C" fn subrad_sweep_spectrum(
    params: *const SubradParams,
    kind: u32,
    on_axis: bool,
    n_atoms: usize,
    eta_hz: f64,
    half_span_hz: f64,
    points: usize,
    realizations: usize,
    seed: u64,
    out: *mut *mut SubradSpectrum,
) -> SubradStatus {
    guard(|| {
        let p = &deref(params)?.0;
        let grid = detuning_grid(hz_to_rad(half_span_hz), points);
        let drive = DriveParams::resonant(hz_to_rad(eta_hz), 0.0, 0.0);
        let s = sweep_spectrum(p, &drive, n_atoms, &grid, realizations, seed, &sampler(kind, on_axis)?)
            .map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(SubradSpectrum(s))))
    })
}

/// # Safety
/// `spectrum` must come from [`subrad_sweep_spectrum`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn subrad_spectrum_free(spectrum: *mut SubradSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of grid points, or 0 for NULL.
///
/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn subrad_spectrum_len(spectrum: *const SubradSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Copies detunings (Hz), mean intensities and their standard errors into
/// caller buffers of length `len`, which must equal the spectrum length.
/// Any buffer may be NULL to skip it.
///
/// # Safety
/// Non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn subrad_spectrum_copy(
    spectrum: *const SubradSpectrum,
    detunings_hz: *mut f64,
    mean_intensity: *mut f64,
    intensity_sem: *mut f64,
    len: usize,
) -> SubradStatus {
    guard(|| {
        let s = &deref(spectrum)?.0;
        if len != s.len() {
            return Err(invalid("buffer length differs from spectrum length"));
        }
        let sem = s.intensity_sem();
        let columns: [(*mut f64, Vec<f64>); 3] = [
            (detunings_hz, s.detunings.iter().map(|&d| rad_to_hz(d)).collect()),
            (mean_intensity, s.mean_intensity.clone()),
            (intensity_sem, sem),
        ];
        for (buf, values) in columns {
            if !buf.is_null() {
                ptr::copy_nonoverlapping(values.as_ptr(), buf, len);
            }
        }
        Ok(())
    })
}

/// Clebsch–Gordan coefficient ⟨2 m; 1 q | 3 m+q⟩.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subrad_cg_coefficient(m: i32, q: i32, out: *mut f64) -> SubradStatus {
    guard(|| {
        if !(-2..=2).contains(&m) || !(-1..=1).contains(&q) {
            return Err(invalid("m must be in -2..=2 and q in -1..=1"));
        }
        write_out(out, clebsch_gordan_table(1.0).coefficient(m, q))
    })
}

/// Predicted peak count rate per µW of drive for detection efficiency `xi`.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subrad_predicted_peak_rate_per_uw(
    params: *const SubradParams,
    xi: f64,
    out: *mut f64,
) -> SubradStatus {
    guard(|| {
        let chain = DetectionChain {
            xi,
            ..DetectionChain::counting_module()
        };
        chain.validate().map_err(fail)?;
        write_out(out, predicted_peak_rate_per_power(&deref(params)?.0, &chain))
    })
}

/// Runs a scenario from JSON config text, writing into `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn subrad_run_config(
    config_json: *const c_char,
    out_dir: *const c_char,
) -> SubradStatus {
    guard(|| {
        let text = CStr::from_ptr(deref(config_json)?)
            .to_str()
            .map_err(|_| invalid("config is not UTF-8"))?;
        let dir = CStr::from_ptr(deref(out_dir)?)
            .to_str()
            .map_err(|_| invalid("output directory is not UTF-8"))?;
        let cfg = ScenarioConfig::from_json(text).map_err(fail)?;
        subrad::scenario::run_scenario(&cfg, Path::new(dir)).map_err(fail)?;
        Ok(())
    })
}
