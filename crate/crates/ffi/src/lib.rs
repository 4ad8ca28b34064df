//! C ABI over the simulator.
//!
//! Every fallible call returns an [`HlStatus`]; on failure the message is kept
//! per thread and can be copied out with [`hl_last_error`]. Models are opaque
//! handles created by [`hl_model_new`] and released with [`hl_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heisenberg_laser::analytics;
use heisenberg_laser::correlations;
use heisenberg_laser::filter::{reference_config, seed_ensemble};
use heisenberg_laser::steady::negativity_diagnostic;
use heisenberg_laser::{Error, Family, LaserModel, Liouvillian, Variant};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Degenerate = 3,
    Numeric = 4,
    Integration = 5,
    Breakdown = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlFamily {
    /// `param` is λ.
    Plambda = 0,
    /// `param` is q.
    Pq = 1,
    /// `param` is ignored.
    Pfamily = 2,
}

/// A realized generator together with its steady state.
pub struct HlModel {
    liou: Liouvillian,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HlStatus {
    match e {
        Error::Domain(_) => HlStatus::Domain,
        Error::Degenerate(_) => HlStatus::Degenerate,
        Error::Numeric { .. } => HlStatus::Numeric,
        Error::Integration { .. } => HlStatus::Integration,
        Error::Breakdown(_) => HlStatus::Breakdown,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Short { need: usize, have: usize },
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            HlStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            HlStatus::NullPointer
        }
        Ok(Err(Fail::Short { need, have })) => {
            set_error(format!("buffer holds {have} values, {need} needed"));
            HlStatus::BufferTooSmall
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            HlStatus::Panic
        }
    }
}

fn family(kind: HlFamily, param: f64) -> Family {
    match kind {
        HlFamily::Plambda => Family::PLambda { lambda: param },
        HlFamily::Pq => Family::PQ { q: param },
        HlFamily::Pfamily => Family::PFamily,
    }
}

unsafe fn model_ref<'a>(m: *const HlModel) -> Result<&'a HlModel, Fail> {
    m.as_ref().ok_or(Fail::Null("model"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null("output"))
}

unsafe fn input<'a>(p: *const f64, n: usize) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null("input array"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn output<'a>(p: *mut f64, n: usize) -> Result<&'a mut [f64], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null("output array"));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// Builds a model of dimension `dim` (at least 3). `linearized` selects
/// the linearized coefficients. On success `*out` owns a new handle.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hl_model_new(
    kind: HlFamily,
    param: f64,
    dim: usize,
    p: f64,
    flux: f64,
    linearized: c_int,
    out: *mut *mut HlModel,
) -> HlStatus {
    guard(|| {
        let out = out_ref(out)?;
        let variant = if linearized != 0 {
            Variant::Linearized
        } else {
            Variant::Exact
        };
        let model = LaserModel::new(family(kind, param), dim, p, flux)?;
        let liou = Liouvillian::new(model, variant)?;
        *out = Box::into_raw(Box::new(HlModel { liou }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from `hl_model_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hl_model_free(model: *mut HlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hl_model_dim(model: *const HlModel, out: *mut usize) -> HlStatus {
    guard(|| {
        *out_ref(out)? = model_ref(model)?.liou.dim();
        Ok(())
    })
}

/// Flux normalization r of the realized generator.
///
/// # Safety
/// `model` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hl_normalization_r(model: *const HlModel, out: *mut f64) -> HlStatus {
    guard(|| {
        *out_ref(out)? = model_ref(model)?.liou.normalization_r();
        Ok(())
    })
}

/// Copies the D stationary populations into `out`.
///
/// # Safety
/// `model` must be a live handle; `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hl_steady_state(model: *const HlModel, out: *mut f64, len: usize) -> HlStatus {
    guard(|| {
        let w = model_ref(model)?.liou.steady_state().weights();
        if len < w.len() {
            return Err(Fail::Short {
                need: w.len(),
                have: len,
            });
        }
        output(out, len)?[..w.len()].copy_from_slice(w);
        Ok(())
    })
}

/// |Σ negative populations| of the stationary state.
///
/// # Safety
/// `model` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hl_negativity(model: *const HlModel, out: *mut f64) -> HlStatus {
    guard(|| {
        *out_ref(out)? = negativity_diagnostic(model_ref(model)?.liou.steady_state());
        Ok(())
    })
}

type SeriesFn = fn(&Liouvillian, &[f64]) -> heisenberg_laser::Result<correlations::CorrelationSeries>;

unsafe fn series(model: *const HlModel, grid: *const f64, n: usize, out: *mut f64, f: SeriesFn) -> HlStatus {
    guard(|| {
        let m = model_ref(model)?;
        let grid = input(grid, n)?;
        let out = output(out, n)?;
        let s = f(&m.liou, grid)?;
        out.copy_from_slice(&s.values);
        Ok(())
    })
}

/// G¹(t) on an increasing grid of `n` times.
///
/// # Safety
/// `model` must be a live handle; `grid` and `out` valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn hl_g1(model: *const HlModel, grid: *const f64, n: usize, out: *mut f64) -> HlStatus {
    series(model, grid, n, out, correlations::g1)
}

/// g²(t) on an increasing grid of `n` times.
///
/// # Safety
/// `model` must be a live handle; `grid` and `out` valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn hl_g2(model: *const HlModel, grid: *const f64, n: usize, out: *mut f64) -> HlStatus {
    series(model, grid, n, out, correlations::g2)
}

/// S_I(ω) on an increasing grid of `n` frequencies. Points whose solve
/// failed are NaN.
///
/// # Safety
/// `model` must be a live handle; `omegas` and `out` valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn hl_intensity_spectrum(
    model: *const HlModel,
    omegas: *const f64,
    n: usize,
    out: *mut f64,
) -> HlStatus {
    series(model, omegas, n, out, correlations::intensity_spectrum)
}

/// Mandel-Q over a counting window `t`.
///
/// # Safety
/// `model` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hl_mandel_q(model: *const HlModel, t: f64, out: *mut f64) -> HlStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out_ref(out)? = correlations::mandel_q(&m.liou, t)?;
        Ok(())
    })
}

/// Beam coherence 𝔠.
///
/// # Safety
/// `model` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hl_coherence(model: *const HlModel, out: *mut f64) -> HlStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out_ref(out)? = correlations::coherence(&m.liou)?;
        Ok(())
    })
}

/// Linearized coherence of a family at (p, μ).
#[no_mangle]
pub extern "C" fn hl_coherence_lin(kind: HlFamily, param: f64, p: f64, mu: f64) -> f64 {
    analytics::coherence_lin(family(kind, param), p, mu)
}

/// Linearized phase diffusion rate ℓ.
#[no_mangle]
pub extern "C" fn hl_diffusion_rate(kind: HlFamily, param: f64, p: f64, mu: f64, flux: f64) -> f64 {
    analytics::diffusion_rate(family(kind, param), p, mu, flux)
}

/// Upper bound on the coherence at mean excitation μ.
#[no_mangle]
pub extern "C" fn hl_heisenberg_bound(mu: f64) -> f64 {
    analytics::heisenberg_bound(mu)
}

/// Seed-averaged filter MSE for a beam of coherence `coherence`, run for
/// `tau_multiple` filter times per seed over seeds `seed..seed+seeds`.
/// Writes the mean and its standard error.
///
/// # Safety
/// `mean` and `std_error` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hl_filter_mse(
    coherence: f64,
    flux: f64,
    tau_multiple: f64,
    seed: u64,
    seeds: usize,
    mean: *mut f64,
    std_error: *mut f64,
) -> HlStatus {
    guard(|| {
        let mean = out_ref(mean)?;
        let std_error = out_ref(std_error)?;
        let base = reference_config(coherence, flux, tau_multiple, seed);
        let list: Vec<u64> = (0..seeds as u64).map(|i| seed.wrapping_add(i)).collect();
        let s = seed_ensemble(&base, &list)?;
        *mean = s.mean_mse;
        *std_error = s.std_error;
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL terminated and
/// truncated to fit, into `buf`. Returns the full message length excluding
/// the terminator, so a caller can size a second attempt. Empty after a
/// successful call.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
