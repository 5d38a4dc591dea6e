//! C ABI over `okdrop`. Objects cross the boundary as opaque handles created
//! and released by paired `*_new` / `*_free` calls; every fallible call
//! returns an [`OkdropStatus`] and leaves a message readable through
//! [`okdrop_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use okdrop::energy::{diffuse_energy, sharp_energy};
use okdrop::flow::{minimize, FlowConfig, InitSpec};
use okdrop::limit::{lambda_c_bracket, minimize_e0, LimitParams};
use okdrop::{EnergyReport, Error, Field3, ModelParams, WellPotential};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OkdropStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidField = 2,
    DimensionMismatch = 3,
    InvalidParameter = 4,
    ConstraintViolation = 5,
    NonBinary = 6,
    SingularPoint = 7,
    UnderResolved = 8,
    NegativeDensity = 9,
    NotStarShaped = 10,
    KernelTruncation = 11,
    Overlap = 12,
    Divergence = 13,
    Config = 14,
    Io = 15,
    Json = 16,
    BufferTooSmall = 17,
    Panic = 18,
}

impl From<&Error> for OkdropStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidField(_) => Self::InvalidField,
            Error::DimensionMismatch { .. } => Self::DimensionMismatch,
            Error::InvalidParameter(_) => Self::InvalidParameter,
            Error::ConstraintViolation { .. } => Self::ConstraintViolation,
            Error::NonBinary { .. } => Self::NonBinary,
            Error::SingularPoint => Self::SingularPoint,
            Error::UnderResolved(_) => Self::UnderResolved,
            Error::NegativeDensity { .. } => Self::NegativeDensity,
            Error::NotStarShaped(_) => Self::NotStarShaped,
            Error::KernelTruncation { .. } => Self::KernelTruncation,
            Error::Overlap(_) => Self::Overlap,
            Error::Divergence(_) => Self::Divergence,
            Error::Config(_) => Self::Config,
            Error::Io(_) => Self::Io,
            Error::Json(_) => Self::Json,
        }
    }
}

/// Opaque model parameters.
pub struct OkdropParams(ModelParams);

/// Opaque periodic field.
pub struct OkdropField(Field3);

/// Itemized energy as plain numbers.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OkdropEnergy {
    pub total: f64,
    pub interfacial: f64,
    pub well: f64,
    pub nonlocal: f64,
    /// `total · ε^{-4/3}`.
    pub rescaled: f64,
    pub trivial_reference: f64,
}

impl From<&EnergyReport> for OkdropEnergy {
    fn from(r: &EnergyReport) -> Self {
        Self {
            total: r.total,
            interfacial: r.interfacial,
            well: r.well,
            nonlocal: r.nonlocal,
            rescaled: r.rescaled,
            trivial_reference: r.trivial_reference,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OkdropLimitMinimizer {
    pub mbar: f64,
    pub vbar: f64,
    pub e0min: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OkdropFlowOptions {
    pub n: usize,
    /// Non-positive selects the default `0.1 ε²`.
    pub dt: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub noise_amplitude: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, recording errors and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (OkdropStatus, String)>) -> OkdropStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OkdropStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside okdrop");
            OkdropStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (OkdropStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(what: &str) -> (OkdropStatus, String) {
    (OkdropStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` is null or points to a live `T`.
unsafe fn borrow<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, (OkdropStatus, String)> {
    ptr.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `ptr` is null or valid for a write of `T`.
unsafe fn put<T>(ptr: *mut T, value: T, what: &str) -> Result<(), (OkdropStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    ptr.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn okdrop_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn okdrop_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Quartic-well parameters.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn okdrop_params_new(eps: f64, lambda: f64, ell: f64, out: *mut *mut OkdropParams) -> OkdropStatus {
    guard(|| {
        let p = ModelParams::new(eps, lambda, ell, WellPotential::quartic()).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(OkdropParams(p))), "out")
    })
}

/// # Safety
/// `p` is null or came from [`okdrop_params_new`] and was not freed.
#[no_mangle]
pub unsafe extern "C" fn okdrop_params_free(p: *mut OkdropParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Background state `ū = -1 + λε^{2/3}`.
///
/// # Safety
/// `p` is a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_params_ubar(p: *const OkdropParams, out: *mut f64) -> OkdropStatus {
    guard(|| put(out, borrow(p, "params")?.0.ubar(), "out"))
}

/// Both ends of the `λ_c` bracket for the quartic well.
///
/// # Safety
/// `lower` and `upper` writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_lambda_c_bracket(lower: *mut f64, upper: *mut f64) -> OkdropStatus {
    guard(|| {
        let (lo, hi) = lambda_c_bracket(&WellPotential::quartic());
        put(lower, lo, "lower")?;
        put(upper, hi, "upper")
    })
}

/// Closed-form minimizer of the limit energy.
///
/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_e0_minimizer(
    lambda: f64,
    ell: f64,
    kappa: f64,
    lambda_c: f64,
    out: *mut OkdropLimitMinimizer,
) -> OkdropStatus {
    guard(|| {
        let m = minimize_e0(&LimitParams::new(lambda, ell, kappa, lambda_c).map_err(lib_err)?);
        put(out, OkdropLimitMinimizer { mbar: m.mbar, vbar: m.vbar, e0min: m.e0min }, "out")
    })
}

/// Copies `len = n³` values (x fastest) into a new field.
///
/// # Safety
/// `values` readable for `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_field_new(
    n: usize,
    ell: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut OkdropField,
) -> OkdropStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let data = std::slice::from_raw_parts(values, len).to_vec();
        let f = Field3::new(n, ell, data).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(OkdropField(f))), "out")
    })
}

/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_field_constant(n: usize, ell: f64, value: f64, out: *mut *mut OkdropField) -> OkdropStatus {
    guard(|| {
        let f = Field3::constant(n, ell, value).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(OkdropField(f))), "out")
    })
}

/// # Safety
/// `f` is null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn okdrop_field_free(f: *mut OkdropField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Grid points per axis, or 0 for a null handle.
///
/// # Safety
/// `f` is null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn okdrop_field_n(f: *const OkdropField) -> usize {
    f.as_ref().map_or(0, |f| f.0.n())
}

/// Copies the values out; `len` must be at least `n³`.
///
/// # Safety
/// `f` live, `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn okdrop_field_copy_values(f: *const OkdropField, buf: *mut f64, len: usize) -> OkdropStatus {
    guard(|| {
        let f = &borrow(f, "field")?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < f.len() {
            return Err((OkdropStatus::BufferTooSmall, format!("buffer holds {len} values, field has {}", f.len())));
        }
        std::ptr::copy_nonoverlapping(f.values().as_ptr(), buf, f.len());
        Ok(())
    })
}

/// Diffuse energy of `u`, whose mean must equal `ū`.
///
/// # Safety
/// Handles live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_diffuse_energy(u: *const OkdropField, p: *const OkdropParams, out: *mut OkdropEnergy) -> OkdropStatus {
    guard(|| {
        let r = diffuse_energy(&borrow(u, "field")?.0, &borrow(p, "params")?.0).map_err(lib_err)?;
        put(out, (&r).into(), "out")
    })
}

/// Sharp-interface energy of a 0/1 field.
///
/// # Safety
/// Handles live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_sharp_energy(chi: *const OkdropField, p: *const OkdropParams, out: *mut OkdropEnergy) -> OkdropStatus {
    guard(|| {
        let r = sharp_energy(&borrow(chi, "field")?.0, &borrow(p, "params")?.0, None).map_err(lib_err)?;
        put(out, (&r).into(), "out")
    })
}

/// Gradient flow from `ū` plus noise. On success `out_field` receives a new
/// handle owned by the caller.
///
/// # Safety
/// Handles and option pointer live; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn okdrop_minimize(
    p: *const OkdropParams,
    options: *const OkdropFlowOptions,
    out_field: *mut *mut OkdropField,
    out_energy: *mut OkdropEnergy,
    out_converged: *mut bool,
) -> OkdropStatus {
    guard(|| {
        let p = &borrow(p, "params")?.0;
        let o = borrow(options, "options")?;
        if out_field.is_null() || out_energy.is_null() || out_converged.is_null() {
            return Err(null("output pointer"));
        }
        let cfg = FlowConfig {
            n: o.n,
            dt: (o.dt > 0.0).then_some(o.dt),
            max_steps: o.max_steps,
            grad_tol: o.grad_tol,
            seed: o.seed,
            init: InitSpec::ConstantPlusNoise { amplitude: o.noise_amplitude },
            ..FlowConfig::default()
        };
        let res = minimize(p, &cfg).map_err(lib_err)?;
        put(out_energy, (&res.report).into(), "out_energy")?;
        put(out_converged, res.converged, "out_converged")?;
        put(out_field, Box::into_raw(Box::new(OkdropField(res.u))), "out_field")
    })
}

/// Runs a JSON run config as the command-line tool would.
///
/// # Safety
/// `config_json` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn okdrop_run_json(config_json: *const c_char) -> OkdropStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| (OkdropStatus::Config, format!("config is not UTF-8: {e}")))?;
        let cfg = okdrop::cli::RunConfig::from_json(text).map_err(lib_err)?;
        okdrop::cli::run(&cfg).map(|_| ()).map_err(lib_err)
    })
}
