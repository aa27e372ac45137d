//! C ABI surface for the specmode library.
//!
//! Conventions:
//!
//! * Grids and spectral functions are opaque handles created and released by
//!   this library (`specmode_*_new` / `specmode_*_free`; `free` accepts
//!   null).
//! * Every fallible call returns a [`SpecmodeStatus`]; results travel through
//!   out-pointers that are written only on `Ok`.
//! * On failure, a human-readable message is stored per thread and can be
//!   read with [`specmode_last_error`] until the next failing call on the
//!   same thread.
//! * No call unwinds across the boundary: panics are caught and reported as
//!   [`SpecmodeStatus::Panic`].
//! * Null pointers are detected and reported as
//!   [`SpecmodeStatus::NullArgument`]; beyond that, callers must pass
//!   pointers that are valid for the access each function documents, exactly
//!   as with any C library.
//!
//! The matching C header is generated by cbindgen at build time into
//! `include/specmode.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use specmode::experiments::{exact_overlap_pair, four_photon_interference, hom_separable};
use specmode::optics::detector_statistics;
use specmode::sdf::JointSDF;
use specmode::states::normalization_factor;
use specmode::{
    gaussian_pulse, inner_product, overlap_gamma, rect_window, Error, FrequencyGrid,
    SpectralFunction,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecmodeStatus {
    /// Success; out-parameters are valid.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Invalid parameters or API misuse; see `specmode_last_error`.
    InvalidArgument = 2,
    /// A declared numerical budget (tensor size, photon count) was exceeded.
    BudgetExceeded = 3,
    /// A numerical condition failed (unnormalizable state, zero-probability
    /// condition, ...).
    NumericalFailure = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Frequency grid handle.
pub struct SpecmodeGrid(FrequencyGrid);

/// Single-photon spectral function handle.
pub struct SpecmodeFunction(SpectralFunction);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(error: &Error) -> SpecmodeStatus {
    match error {
        Error::Budget(_) | Error::Truncation { .. } => SpecmodeStatus::BudgetExceeded,
        Error::Unnormalizable | Error::ZeroProbability(_) | Error::NotFock { .. } => {
            SpecmodeStatus::NumericalFailure
        }
        _ => SpecmodeStatus::InvalidArgument,
    }
}

/// Runs a fallible body under panic protection and converts the outcome.
fn guarded<F>(body: F) -> SpecmodeStatus
where
    F: FnOnce() -> Result<(), Error>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SpecmodeStatus::Ok,
        Ok(Err(error)) => {
            set_last_error(&error.to_string());
            status_of(&error)
        }
        Err(_) => {
            set_last_error("internal panic");
            SpecmodeStatus::Panic
        }
    }
}

macro_rules! require {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(reference) => reference,
            None => {
                set_last_error(concat!("null argument: ", stringify!($ptr)));
                return SpecmodeStatus::NullArgument;
            }
        }
    };
}

macro_rules! require_out {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(reference) => reference,
            None => {
                set_last_error(concat!("null argument: ", stringify!($ptr)));
                return SpecmodeStatus::NullArgument;
            }
        }
    };
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; the string is empty
/// when nothing has failed yet.
#[no_mangle]
pub extern "C" fn specmode_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// ---------------------------------------------------------------------------
// Grid

/// Creates a uniform frequency grid over [omega_min, omega_max] with the
/// given number of nodes.
///
/// # Safety
///
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn specmode_grid_new(
    omega_min: f64,
    omega_max: f64,
    points: usize,
    out: *mut *mut SpecmodeGrid,
) -> SpecmodeStatus {
    let out = require_out!(out);
    guarded(|| {
        let grid = FrequencyGrid::new(omega_min, omega_max, points)?;
        *out = Box::into_raw(Box::new(SpecmodeGrid(grid)));
        Ok(())
    })
}

/// Releases a grid handle; null is ignored.
///
/// # Safety
///
/// `grid` must be null or a pointer returned by `specmode_grid_new` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn specmode_grid_free(grid: *mut SpecmodeGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

// ---------------------------------------------------------------------------
// Spectral functions

/// Normalized Gaussian pulse: amplitude exp(−((ω−center)/2·width)²) with a
/// delay phase exp(−iωτ).
///
/// # Safety
///
/// `grid` must be null or a live grid handle; `out` must be null or valid
/// for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn specmode_gaussian_pulse(
    grid: *const SpecmodeGrid,
    center: f64,
    width: f64,
    delay: f64,
    out: *mut *mut SpecmodeFunction,
) -> SpecmodeStatus {
    let grid = require!(grid);
    let out = require_out!(out);
    guarded(|| {
        let pulse = gaussian_pulse(grid.0, center, width, delay)?;
        *out = Box::into_raw(Box::new(SpecmodeFunction(pulse)));
        Ok(())
    })
}

/// Normalized flat window over [omega_lo, omega_hi].
///
/// # Safety
///
/// `grid` must be null or a live grid handle; `out` must be null or valid
/// for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn specmode_rect_window(
    grid: *const SpecmodeGrid,
    omega_lo: f64,
    omega_hi: f64,
    out: *mut *mut SpecmodeFunction,
) -> SpecmodeStatus {
    let grid = require!(grid);
    let out = require_out!(out);
    guarded(|| {
        let window = rect_window(grid.0, omega_lo, omega_hi)?;
        *out = Box::into_raw(Box::new(SpecmodeFunction(window)));
        Ok(())
    })
}

/// Releases a spectral-function handle; null is ignored.
///
/// # Safety
///
/// `function` must be null or a pointer returned by a `specmode_*` function
/// constructor that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn specmode_function_free(function: *mut SpecmodeFunction) {
    if !function.is_null() {
        drop(unsafe { Box::from_raw(function) });
    }
}

/// Quadrature inner product ⟨f, g⟩ (conjugation on `f`).
///
/// # Safety
///
/// `f` and `g` must be null or live function handles; `out_re` and `out_im`
/// must be null or valid for writing one double each.
#[no_mangle]
pub unsafe extern "C" fn specmode_inner_product(
    f: *const SpecmodeFunction,
    g: *const SpecmodeFunction,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SpecmodeStatus {
    let f = require!(f);
    let g = require!(g);
    let out_re = require_out!(out_re);
    let out_im = require_out!(out_im);
    guarded(|| {
        let value = inner_product(&f.0, &g.0)?;
        *out_re = value.re;
        *out_im = value.im;
        Ok(())
    })
}

/// Squared overlap γ = |⟨f, g⟩|² of two normalized functions.
///
/// # Safety
///
/// `f` and `g` must be null or live function handles; `out_gamma` must be
/// null or valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn specmode_overlap_gamma(
    f: *const SpecmodeFunction,
    g: *const SpecmodeFunction,
    out_gamma: *mut f64,
) -> SpecmodeStatus {
    let f = require!(f);
    let g = require!(g);
    let out_gamma = require_out!(out_gamma);
    guarded(|| {
        *out_gamma = overlap_gamma(&f.0, &g.0)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Experiments

/// Hong–Ou–Mandel coincidence probability of one photon in `phi` meeting
/// one photon in `chi` on a balanced beamsplitter. Writes the squared
/// overlap γ and the simulated coincidence probability ½(1−γ).
///
/// # Safety
///
/// `phi` and `chi` must be null or live function handles; `out_gamma` and
/// `out_p_c` must be null or valid for writing one double each.
#[no_mangle]
pub unsafe extern "C" fn specmode_hom_coincidence(
    phi: *const SpecmodeFunction,
    chi: *const SpecmodeFunction,
    out_gamma: *mut f64,
    out_p_c: *mut f64,
) -> SpecmodeStatus {
    let phi = require!(phi);
    let chi = require!(chi);
    let out_gamma = require_out!(out_gamma);
    let out_p_c = require_out!(out_p_c);
    guarded(|| {
        let result = hom_separable(&phi.0, &chi.0)?;
        *out_gamma = result.gamma;
        *out_p_c = result.p_c();
        Ok(())
    })
}

/// Four-photon interference (two identical pairs of pairwise overlap γ on a
/// balanced beamsplitter, all four photons postselected at one port).
/// Writes the simulated probability and the two- and four-photon
/// normalization factors of the underlying states.
///
/// # Safety
///
/// `grid` must be null or a live grid handle; `out_p_4a`, `out_n2` and
/// `out_n4` must be null or valid for writing one double each.
#[no_mangle]
pub unsafe extern "C" fn specmode_four_photon(
    grid: *const SpecmodeGrid,
    gamma: f64,
    out_p_4a: *mut f64,
    out_n2: *mut f64,
    out_n4: *mut f64,
) -> SpecmodeStatus {
    let grid = require!(grid);
    let out_p_4a = require_out!(out_p_4a);
    let out_n2 = require_out!(out_n2);
    let out_n4 = require_out!(out_n4);
    guarded(|| {
        let (phi1, phi2) = exact_overlap_pair(grid.0, gamma)?;
        let result = four_photon_interference(&phi1, &phi2)?;
        *out_p_4a = result.p_4a;
        *out_n2 = result.n2;
        *out_n4 = result.n4;
        Ok(())
    })
}

/// Photon-number statistics behind a two-mode split with amplitude λ₁ on
/// the observed mode: writes the n+1 binomial probabilities P_0 … P_n into
/// `out_probabilities`, which must hold at least n+1 doubles.
///
/// # Safety
///
/// `out_probabilities` must be null or valid for writing n+1 doubles.
#[no_mangle]
pub unsafe extern "C" fn specmode_detector_statistics(
    n: usize,
    lambda1_re: f64,
    lambda1_im: f64,
    out_probabilities: *mut f64,
) -> SpecmodeStatus {
    if out_probabilities.is_null() {
        set_last_error("null argument: out_probabilities");
        return SpecmodeStatus::NullArgument;
    }
    guarded(|| {
        let stats = detector_statistics(n, Complex64::new(lambda1_re, lambda1_im))?;
        let slice = unsafe { std::slice::from_raw_parts_mut(out_probabilities, n + 1) };
        slice.copy_from_slice(stats.probabilities());
        Ok(())
    })
}

/// Exchange-symmetry normalization factor 𝒩 of the product state placing
/// one photon in each of the `count` factor functions, all in one spatial
/// mode. `factors` must point to `count` non-null function handles.
///
/// # Safety
///
/// `factors` must be null or valid for reading `count` pointers, each null
/// or a live function handle; `out_value` must be null or valid for writing
/// one double.
#[no_mangle]
pub unsafe extern "C" fn specmode_normalization_product(
    factors: *const *const SpecmodeFunction,
    count: usize,
    out_value: *mut f64,
) -> SpecmodeStatus {
    if factors.is_null() {
        set_last_error("null argument: factors");
        return SpecmodeStatus::NullArgument;
    }
    let out_value = require_out!(out_value);
    let handles = unsafe { std::slice::from_raw_parts(factors, count) };
    let mut functions = Vec::with_capacity(count);
    for (i, handle) in handles.iter().enumerate() {
        match unsafe { handle.as_ref() } {
            Some(function) => functions.push(function.0.clone()),
            None => {
                set_last_error(&format!("null argument: factors[{i}]"));
                return SpecmodeStatus::NullArgument;
            }
        }
    }
    guarded(|| {
        let sdf = JointSDF::product(functions, vec![count])?;
        *out_value = normalization_factor(&sdf)?.value;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    fn last_error_text() -> String {
        unsafe { CStr::from_ptr(specmode_last_error()) }.to_string_lossy().into_owned()
    }

    fn make_grid() -> *mut SpecmodeGrid {
        let mut grid = ptr::null_mut();
        assert_eq!(unsafe { specmode_grid_new(-8.0, 8.0, 65, &mut grid) }, SpecmodeStatus::Ok);
        assert!(!grid.is_null());
        grid
    }

    fn make_pulse(grid: *const SpecmodeGrid, delay: f64) -> *mut SpecmodeFunction {
        let mut pulse = ptr::null_mut();
        assert_eq!(
            unsafe { specmode_gaussian_pulse(grid, 0.0, 1.0, delay, &mut pulse) },
            SpecmodeStatus::Ok
        );
        pulse
    }

    #[test]
    fn grid_rejects_bad_bounds_with_message() {
        let mut grid = ptr::null_mut();
        let status = unsafe { specmode_grid_new(3.0, -3.0, 65, &mut grid) };
        assert_eq!(status, SpecmodeStatus::InvalidArgument);
        assert!(grid.is_null());
        assert!(!last_error_text().is_empty());
    }

    #[test]
    fn null_arguments_are_reported() {
        let mut out = 0.0;
        assert_eq!(
            unsafe { specmode_overlap_gamma(ptr::null(), ptr::null(), &mut out) },
            SpecmodeStatus::NullArgument
        );
        let grid = make_grid();
        assert_eq!(
            unsafe { specmode_gaussian_pulse(grid, 0.0, 1.0, 0.0, ptr::null_mut()) },
            SpecmodeStatus::NullArgument
        );
        unsafe { specmode_grid_free(grid) };
    }

    #[test]
    fn frees_ignore_null() {
        unsafe {
            specmode_grid_free(ptr::null_mut());
            specmode_function_free(ptr::null_mut());
        }
    }

    #[test]
    fn self_inner_product_is_one() {
        let grid = make_grid();
        let pulse = make_pulse(grid, 0.0);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(
            unsafe { specmode_inner_product(pulse, pulse, &mut re, &mut im) },
            SpecmodeStatus::Ok
        );
        assert!((re - 1.0).abs() < 1e-12);
        assert!(im.abs() < 1e-12);
        unsafe {
            specmode_function_free(pulse);
            specmode_grid_free(grid);
        }
    }

    #[test]
    fn delayed_overlap_follows_the_gaussian_law() {
        let grid = make_grid();
        let a = make_pulse(grid, 0.0);
        let b = make_pulse(grid, 0.7);
        let mut gamma = 0.0;
        assert_eq!(unsafe { specmode_overlap_gamma(a, b, &mut gamma) }, SpecmodeStatus::Ok);
        assert!((gamma - (-0.49f64).exp()).abs() < 1e-9);
        unsafe {
            specmode_function_free(a);
            specmode_function_free(b);
            specmode_grid_free(grid);
        }
    }

    #[test]
    fn hom_limits_through_the_c_surface() {
        let grid = make_grid();
        let a = make_pulse(grid, 0.0);
        let b = make_pulse(grid, 0.0);
        let (mut gamma, mut p_c) = (0.0, 0.0);
        assert_eq!(
            unsafe { specmode_hom_coincidence(a, b, &mut gamma, &mut p_c) },
            SpecmodeStatus::Ok
        );
        assert!((gamma - 1.0).abs() < 1e-9);
        assert!(p_c.abs() < 1e-9);

        let mut far = ptr::null_mut();
        assert_eq!(unsafe { specmode_rect_window(grid, 2.0, 5.0, &mut far) }, SpecmodeStatus::Ok);
        let mut near = ptr::null_mut();
        assert_eq!(
            unsafe { specmode_rect_window(grid, -5.0, -2.0, &mut near) },
            SpecmodeStatus::Ok
        );
        assert_eq!(
            unsafe { specmode_hom_coincidence(far, near, &mut gamma, &mut p_c) },
            SpecmodeStatus::Ok
        );
        assert!(gamma.abs() < 1e-12);
        assert!((p_c - 0.5).abs() < 1e-9);
        for f in [a, b, far, near] {
            unsafe { specmode_function_free(f) };
        }
        unsafe { specmode_grid_free(grid) };
    }

    #[test]
    fn four_photon_endpoints() {
        let grid = make_grid();
        let (mut p, mut n2, mut n4) = (0.0, 0.0, 0.0);
        assert_eq!(
            unsafe { specmode_four_photon(grid, 1.0, &mut p, &mut n2, &mut n4) },
            SpecmodeStatus::Ok
        );
        assert!((p - 0.375).abs() < 1e-9);
        assert!((n2 - 2.0).abs() < 1e-9);
        assert!((n4 - 24.0).abs() < 1e-6);
        assert_eq!(
            unsafe { specmode_four_photon(grid, 0.0, &mut p, &mut n2, &mut n4) },
            SpecmodeStatus::Ok
        );
        assert!((p - 0.25).abs() < 1e-9);
        unsafe { specmode_grid_free(grid) };
    }

    #[test]
    fn detector_statistics_binomial_case() {
        let mut probabilities = [0.0; 3];
        assert_eq!(
            unsafe {
                specmode_detector_statistics(2, 0.5f64.sqrt(), 0.0, probabilities.as_mut_ptr())
            },
            SpecmodeStatus::Ok
        );
        for (value, expected) in probabilities.iter().zip([0.25, 0.5, 0.25]) {
            assert!((value - expected).abs() < 1e-12);
        }
        assert_eq!(
            unsafe { specmode_detector_statistics(2, 2.0, 0.0, probabilities.as_mut_ptr()) },
            SpecmodeStatus::InvalidArgument
        );
    }

    #[test]
    fn normalization_of_identical_pair_is_two() {
        let grid = make_grid();
        let a = make_pulse(grid, 0.0);
        let b = make_pulse(grid, 0.0);
        let handles = [a as *const SpecmodeFunction, b as *const SpecmodeFunction];
        let mut value = 0.0;
        assert_eq!(
            unsafe { specmode_normalization_product(handles.as_ptr(), 2, &mut value) },
            SpecmodeStatus::Ok
        );
        assert!((value - 2.0).abs() < 1e-9);
        unsafe {
            specmode_function_free(a);
            specmode_function_free(b);
            specmode_grid_free(grid);
        }
    }

    #[test]
    fn budget_violations_map_to_their_own_status() {
        let grid = make_grid();
        let pulse = make_pulse(grid, 0.0);
        let handles = [pulse as *const SpecmodeFunction; 9];
        let mut value = 0.0;
        assert_eq!(
            unsafe { specmode_normalization_product(handles.as_ptr(), 9, &mut value) },
            SpecmodeStatus::BudgetExceeded
        );
        unsafe {
            specmode_function_free(pulse);
            specmode_grid_free(grid);
        }
    }
}
