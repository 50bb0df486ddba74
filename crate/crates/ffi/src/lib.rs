//! C ABI over `nv_polarimetry`.
//!
//! Every fallible function returns an [`NvpStatus`] and writes results
//! through caller-provided pointers. On failure a message is available from
//! [`nvp_last_error`] on the same thread. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nv_polarimetry::config::EmitterConfig;
use nv_polarimetry::dynamics::{self, Averaging, EmissionModel, Weighting};
use nv_polarimetry::inference;
use nv_polarimetry::montecarlo::{self, McConfig, TrajectorySample};
use nv_polarimetry::optics;
use nv_polarimetry::{Branch, Error, RateSet};

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    DegenerateSampling = 3,
    InvalidData = 4,
    Unresolvable = 5,
    Parse = 6,
    Io = 7,
    InvalidArgument = 8,
    Panic = 9,
}

/// Values accepted for `averaging` in [`NvpEmissionModel`].
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvpAveraging {
    AtLifetime = 0,
    Exponential = 1,
}

/// Values accepted for `weighting` in [`NvpEmissionModel`].
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvpWeighting {
    Squared = 0,
    Linear = 1,
}

/// Values accepted wherever a branch is passed as `uint32_t`.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvpBranch {
    X = 0,
    Y = 1,
}

/// Emission model; fields hold [`NvpAveraging`] and [`NvpWeighting`] values.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NvpEmissionModel {
    pub averaging: u32,
    pub weighting: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NvpFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub contrast: f64,
    pub contrast_sigma: f64,
    pub phase_deg: f64,
    pub residual_rms: f64,
}

/// `ci_low`/`ci_high` are NaN when no standard error was supplied.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NvpGammaEstimate {
    pub gamma_per_ns: f64,
    pub gamma_inv_ns: f64,
    pub alpha: f64,
    pub ci_low_ns: f64,
    pub ci_high_ns: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NvpSample {
    pub emission_ns: f64,
    /// An [`NvpBranch`] value.
    pub branch: u32,
    pub n_flips: u32,
}

/// Emitter parameters.
pub struct NvpEmitter {
    config: EmitterConfig,
}

/// Monte Carlo trajectory samples.
pub struct NvpSamples {
    samples: Vec<TrajectorySample>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(NvpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => NvpStatus::Domain,
            Error::DegenerateSampling(_) => NvpStatus::DegenerateSampling,
            Error::InvalidData(_) => NvpStatus::InvalidData,
            Error::Unresolvable { .. } => NvpStatus::Unresolvable,
            Error::Parse { .. } => NvpStatus::Parse,
            Error::Io { .. } => NvpStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(NvpStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(NvpStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> FfiResult) -> NvpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            NvpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            NvpStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> FfiResult<&'a [f64]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| invalid(format!("{what} is not UTF-8: {e}")))
}

fn branch(b: u32) -> FfiResult<Branch> {
    match b {
        0 => Ok(Branch::X),
        1 => Ok(Branch::Y),
        _ => Err(invalid(format!("unknown branch {b}"))),
    }
}

fn model(m: NvpEmissionModel) -> FfiResult<EmissionModel> {
    let averaging = match m.averaging {
        0 => Averaging::AtLifetime,
        1 => Averaging::Exponential,
        a => return Err(invalid(format!("unknown averaging {a}"))),
    };
    let weighting = match m.weighting {
        0 => Weighting::Squared,
        1 => Weighting::Linear,
        w => return Err(invalid(format!("unknown weighting {w}"))),
    };
    Ok(EmissionModel { averaging, weighting })
}

/// Message for the most recent failure on this thread; empty after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nvp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Emission model used when none is specified.
#[no_mangle]
pub extern "C" fn nvp_default_model() -> NvpEmissionModel {
    NvpEmissionModel {
        averaging: NvpAveraging::AtLifetime as u32,
        weighting: NvpWeighting::Squared as u32,
    }
}

/// Creates an emitter with default parameters.
///
/// # Safety
/// `out_emitter` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nvp_emitter_new(out_emitter: *mut *mut NvpEmitter) -> NvpStatus {
    guard(|| {
        let slot = out(out_emitter, "out_emitter")?;
        *slot = Box::into_raw(Box::new(NvpEmitter {
            config: EmitterConfig::default(),
        }));
        Ok(())
    })
}

/// Creates an emitter from `key = value` config text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_emitter` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nvp_emitter_from_config(text: *const c_char, out_emitter: *mut *mut NvpEmitter) -> NvpStatus {
    guard(|| {
        let slot = out(out_emitter, "out_emitter")?;
        let text = string(text, "text")?;
        let config = EmitterConfig::parse(text, "<config>")?;
        config.validate()?;
        *slot = Box::into_raw(Box::new(NvpEmitter { config }));
        Ok(())
    })
}

/// Sets one config key. The emitter is unchanged if the result is invalid.
///
/// # Safety
/// `emitter` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nvp_emitter_set(emitter: *mut NvpEmitter, key: *const c_char, value: *const c_char) -> NvpStatus {
    guard(|| {
        let em = out(emitter, "emitter")?;
        let mut next = em.config.clone();
        next.set(string(key, "key")?.trim(), string(value, "value")?)
            .map_err(|m| Failure(NvpStatus::Parse, m))?;
        next.validate()?;
        em.config = next;
        Ok(())
    })
}

/// # Safety
/// `emitter` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nvp_emitter_free(emitter: *mut NvpEmitter) {
    if !emitter.is_null() {
        drop(Box::from_raw(emitter));
    }
}

/// Polarization contrast for rate `gamma_per_ns` and lifetime `tau_ns`.
///
/// # Safety
/// `out_contrast` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nvp_contrast(gamma_per_ns: f64, tau_ns: f64, model: NvpEmissionModel, out_contrast: *mut f64) -> NvpStatus {
    guard(|| {
        let slot = out(out_contrast, "out_contrast")?;
        *slot = self::model(model)?.contrast(gamma_per_ns, tau_ns)?;
        Ok(())
    })
}

/// Inverts a contrast to a rate. A negative `sigma` skips the interval;
/// otherwise the interval spans `z` standard errors.
///
/// # Safety
/// `out_estimate` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nvp_invert_contrast(
    contrast: f64,
    sigma: f64,
    z: f64,
    tau_ns: f64,
    model: NvpEmissionModel,
    out_estimate: *mut NvpGammaEstimate,
) -> NvpStatus {
    guard(|| {
        let slot = out(out_estimate, "out_estimate")?;
        let m = self::model(model)?;
        let est = if sigma < 0.0 {
            inference::invert_contrast_with(contrast, tau_ns, m)?
        } else {
            inference::estimate_gamma(contrast, sigma, tau_ns, m, z)?
        };
        let (lo, hi) = est.ci.unwrap_or((f64::NAN, f64::NAN));
        *slot = NvpGammaEstimate {
            gamma_per_ns: est.gamma,
            gamma_inv_ns: est.gamma_inv,
            alpha: est.alpha,
            ci_low_ns: lo,
            ci_high_ns: hi,
        };
        Ok(())
    })
}

/// Least-squares fit of `a0 + a1 cos 2θ + a2 sin 2θ`.
///
/// # Safety
/// `angles_deg` and `intensities` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn nvp_fit_cosine(
    angles_deg: *const f64,
    intensities: *const f64,
    n: usize,
    out_fit: *mut NvpFit,
) -> NvpStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        let a = slice(angles_deg, n, "angles_deg")?;
        let y = slice(intensities, n, "intensities")?;
        let data: Vec<(f64, f64)> = a.iter().copied().zip(y.iter().copied()).collect();
        let fit = inference::fit_cosine(&data)?;
        *slot = NvpFit {
            a0: fit.a0,
            a1: fit.a1,
            a2: fit.a2,
            contrast: fit.contrast,
            contrast_sigma: fit.contrast_sigma(),
            phase_deg: fit.phase,
            residual_rms: fit.residual_rms,
        };
        Ok(())
    })
}

/// Contrast and alpha at each `1/gamma` in `gamma_inv_ns`.
///
/// # Safety
/// All arrays must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn nvp_figure4(
    tau_ns: f64,
    model: NvpEmissionModel,
    gamma_inv_ns: *const f64,
    n: usize,
    out_contrast: *mut f64,
    out_alpha: *mut f64,
) -> NvpStatus {
    guard(|| {
        let grid = slice(gamma_inv_ns, n, "gamma_inv_ns")?;
        let c = slice_mut(out_contrast, n, "out_contrast")?;
        let a = slice_mut(out_alpha, n, "out_alpha")?;
        let rows = dynamics::figure4_table_with(tau_ns, grid, self::model(model)?)?;
        for (i, r) in rows.iter().enumerate() {
            c[i] = r.contrast;
            a[i] = r.alpha;
        }
        Ok(())
    })
}

/// Analytic polarizer sweep of the emitter's emission after pumping `branch`.
/// Pass NaN for `qwp_deg` to omit the quarter-wave plate.
///
/// # Safety
/// `emitter` must come from this library; `angles_deg` and
/// `out_intensity` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn nvp_emitter_polarizer_sweep(
    emitter: *const NvpEmitter,
    branch: u32,
    model: NvpEmissionModel,
    qwp_deg: f64,
    angles_deg: *const f64,
    n: usize,
    out_intensity: *mut f64,
) -> NvpStatus {
    guard(|| {
        let em = emitter.as_ref().ok_or_else(|| null("emitter"))?;
        let angles = slice(angles_deg, n, "angles_deg")?;
        let dst = slice_mut(out_intensity, n, "out_intensity")?;
        let m = self::model(model)?;
        let level = em.config.level_model()?;
        let avg = dynamics::averages(em.config.gamma_per_ns, em.config.tau_ns, self::branch(branch)?, m.averaging)?;
        let stokes = optics::mixture_to_stokes(&optics::emission_mixture(&avg, &level, m.weighting)?);
        let qwp = (!qwp_deg.is_nan()).then_some(qwp_deg);
        let sweep = optics::polarizer_sweep(&stokes, qwp, angles)?;
        for (d, (_, i)) in dst.iter_mut().zip(sweep) {
            *d = i;
        }
        Ok(())
    })
}

/// Simulates `n` emitted photons with the emitter's symmetric rate.
///
/// # Safety
/// `emitter` must come from this library; `out_samples` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nvp_mc_simulate(
    emitter: *const NvpEmitter,
    branch: u32,
    n: usize,
    seed: u64,
    out_samples: *mut *mut NvpSamples,
) -> NvpStatus {
    guard(|| {
        let em = emitter.as_ref().ok_or_else(|| null("emitter"))?;
        let slot = out(out_samples, "out_samples")?;
        let rates = RateSet::symmetric(em.config.gamma_per_ns)?;
        let cfg = McConfig::new(n, seed, rates, em.config.tau_ns, self::branch(branch)?)?;
        *slot = Box::into_raw(Box::new(NvpSamples {
            samples: montecarlo::simulate(&cfg),
        }));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `samples` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nvp_samples_len(samples: *const NvpSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.samples.len())
}

/// # Safety
/// `samples` must come from this library; `out_sample` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nvp_samples_get(samples: *const NvpSamples, index: usize, out_sample: *mut NvpSample) -> NvpStatus {
    guard(|| {
        let s = samples.as_ref().ok_or_else(|| null("samples"))?;
        let slot = out(out_sample, "out_sample")?;
        let t = s
            .samples
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range for {} samples", s.samples.len())))?;
        *slot = NvpSample {
            emission_ns: t.emission_time,
            branch: match t.branch_at_emission {
                Branch::X => NvpBranch::X as u32,
                Branch::Y => NvpBranch::Y as u32,
            },
            n_flips: t.n_flips,
        };
        Ok(())
    })
}

/// Fraction of samples emitted from `branch`.
///
/// # Safety
/// `samples` must come from this library; `out_fraction` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nvp_samples_branch_fraction(samples: *const NvpSamples, branch: u32, out_fraction: *mut f64) -> NvpStatus {
    guard(|| {
        let s = samples.as_ref().ok_or_else(|| null("samples"))?;
        let slot = out(out_fraction, "out_fraction")?;
        *slot = montecarlo::branch_fraction(&s.samples, self::branch(branch)?);
        Ok(())
    })
}

/// # Safety
/// `samples` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nvp_samples_free(samples: *mut NvpSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}
