//! C ABI for dfkit.
//!
//! Nonlinearities and plants live behind opaque handles created by the
//! `*_new` functions and released by the matching `*_free`. Every fallible
//! call returns a [`DfkStatus`]; on failure [`dfk_last_error`] describes the
//! problem until the next failing call on the same thread. Strings returned
//! by the library are freed with [`dfk_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dfkit::analysis::{analyze, describing_function, AnalysisOptions};
use dfkit::cycles::{classify, default_contour, find_intersections};
use dfkit::descfun::{df_exact, df_oracle_curve};
use dfkit::qualdf::df_qualitative;
use dfkit::{Error, LinearPlant, PiecewiseNonlinearity, Stability};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidNonlinearity = 3,
    InvalidPlant = 4,
    Domain = 5,
    Numerical = 6,
    Ambiguous = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfkStability {
    Stable = 0,
    Unstable = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfkCrossover {
    pub omega: f64,
    pub gain_margin: f64,
}

/// Opaque nonlinearity handle.
pub struct DfkNonlinearity(PiecewiseNonlinearity);

/// Opaque plant handle.
pub struct DfkPlant(LinearPlant);

pub const DFK_ANALYZE_QUALITATIVE: c_int = 1;
pub const DFK_ANALYZE_SIMULATE: c_int = 2;
pub const DFK_ANALYZE_UNSTABLE_ELLIPSES: c_int = 4;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> DfkStatus {
    match e {
        Error::InvalidNonlinearity(_) | Error::Descriptor(_) => DfkStatus::InvalidNonlinearity,
        Error::InvalidPlant(_) => DfkStatus::InvalidPlant,
        Error::InvalidGrid(_) | Error::InvalidSimulation(_) | Error::AlgebraicLoop(_) => {
            DfkStatus::InvalidArgument
        }
        Error::Domain(_) | Error::PoleOnAxis(_) => DfkStatus::Domain,
        Error::AmbiguousClassification { .. } => DfkStatus::Ambiguous,
        Error::QuadratureNonConvergence { .. }
        | Error::SymmetryViolation { .. }
        | Error::SingularMatrix(_) => DfkStatus::Numerical,
    }
}

struct Fail(DfkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DfkStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DfkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DfkStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DfkStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn nl_ref<'a>(p: *const DfkNonlinearity) -> Result<&'a PiecewiseNonlinearity, Fail> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("nonlinearity"))
}

unsafe fn plant_ref<'a>(p: *const DfkPlant) -> Result<&'a LinearPlant, Fail> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("plant"))
}

/// Message of the last failure on this thread; empty if none. Owned by the library.
#[no_mangle]
pub extern "C" fn dfk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Nonlinearity through the points `(x[i], y[i])`, `i < n`.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_nonlinearity_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut *mut DfkNonlinearity,
) -> DfkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let nl =
            PiecewiseNonlinearity::new(slice(x, n, "x")?.to_vec(), slice(y, n, "y")?.to_vec())?;
        *out = Box::into_raw(Box::new(DfkNonlinearity(nl)));
        Ok(())
    })
}

/// Nonlinearity from its JSON descriptor `{"x": [..], "y": [..]}`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_nonlinearity_from_json(
    json: *const c_char,
    out: *mut *mut DfkNonlinearity,
) -> DfkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(DfkStatus::InvalidArgument, e.to_string()))?;
        let nl = dfkit::io::parse_descriptor(text, "json")?;
        *out = Box::into_raw(Box::new(DfkNonlinearity(nl)));
        Ok(())
    })
}

/// # Safety
/// `nl` must come from a `dfk_nonlinearity_*` constructor and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dfk_nonlinearity_free(nl: *mut DfkNonlinearity) {
    if !nl.is_null() {
        drop(Box::from_raw(nl));
    }
}

/// `y(x)`.
///
/// # Safety
/// `nl` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_nonlinearity_eval(
    nl: *const DfkNonlinearity,
    x: f64,
    out: *mut f64,
) -> DfkStatus {
    guard(|| {
        *out_ref(out, "out")? = nl_ref(nl)?.evaluate(x);
        Ok(())
    })
}

enum Curve {
    Exact,
    Qualitative,
    Oracle,
}

unsafe fn curve(
    nl: *const DfkNonlinearity,
    grid: *const f64,
    n: usize,
    out: *mut f64,
    kind: Curve,
) -> DfkStatus {
    guard(|| {
        let nl = nl_ref(nl)?;
        let grid = slice(grid, n, "grid")?;
        if n > 0 && out.is_null() {
            return Err(null("out"));
        }
        let c = match kind {
            Curve::Exact => df_exact(nl, grid)?,
            Curve::Qualitative => df_qualitative(nl, grid)?,
            Curve::Oracle => df_oracle_curve(nl, grid)?,
        };
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(c.values());
        Ok(())
    })
}

/// Exact describing function on `grid[0..n]` (strictly increasing) into `out[0..n]`.
///
/// # Safety
/// `nl` must be a live handle; `grid` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn dfk_df_exact(
    nl: *const DfkNonlinearity,
    grid: *const f64,
    n: usize,
    out: *mut f64,
) -> DfkStatus {
    curve(nl, grid, n, out, Curve::Exact)
}

/// Qualitative describing function; same contract as `dfk_df_exact`.
///
/// # Safety
/// As `dfk_df_exact`.
#[no_mangle]
pub unsafe extern "C" fn dfk_df_qualitative(
    nl: *const DfkNonlinearity,
    grid: *const f64,
    n: usize,
    out: *mut f64,
) -> DfkStatus {
    curve(nl, grid, n, out, Curve::Qualitative)
}

/// Describing function by numerical quadrature; same contract as `dfk_df_exact`.
///
/// # Safety
/// As `dfk_df_exact`.
#[no_mangle]
pub unsafe extern "C" fn dfk_df_oracle(
    nl: *const DfkNonlinearity,
    grid: *const f64,
    n: usize,
    out: *mut f64,
) -> DfkStatus {
    curve(nl, grid, n, out, Curve::Oracle)
}

/// `G(s) = k num(s) / den(s)`, coefficients in descending powers.
///
/// # Safety
/// `num` and `den` must hold `num_len` and `den_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_plant_new(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    k: f64,
    out: *mut *mut DfkPlant,
) -> DfkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let p = LinearPlant::new(
            slice(num, num_len, "num")?.to_vec(),
            slice(den, den_len, "den")?.to_vec(),
            k,
        )?;
        *out = Box::into_raw(Box::new(DfkPlant(p)));
        Ok(())
    })
}

/// # Safety
/// `plant` must come from `dfk_plant_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dfk_plant_free(plant: *mut DfkPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// `G(j omega)`.
///
/// # Safety
/// `plant` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_plant_freq_response(
    plant: *const DfkPlant,
    omega: f64,
    re: *mut f64,
    im: *mut f64,
) -> DfkStatus {
    guard(|| {
        let (re, im) = (out_ref(re, "re")?, out_ref(im, "im")?);
        let g = plant_ref(plant)?.freq_response(omega)?;
        (*re, *im) = (g.re, g.im);
        Ok(())
    })
}

unsafe fn write_list<T: Copy>(
    items: &[T],
    out: *mut T,
    cap: usize,
    count: *mut usize,
) -> Result<(), Fail> {
    *out_ref(count, "count")? = items.len();
    if items.len() > cap {
        return Err(Fail(
            DfkStatus::BufferTooSmall,
            format!("need room for {} entries, have {cap}", items.len()),
        ));
    }
    if !items.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, items.len()).copy_from_slice(items);
    }
    Ok(())
}

/// Negative-real-axis crossings in `[omega_min, omega_max]`.
///
/// `*count` receives the number found; on `DFK_STATUS_BUFFER_TOO_SMALL` nothing
/// else is written and the call can be repeated with `cap >= *count`.
///
/// # Safety
/// `plant` must be a live handle; `out` must hold `cap` entries; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_phase_crossovers(
    plant: *const DfkPlant,
    omega_min: f64,
    omega_max: f64,
    out: *mut DfkCrossover,
    cap: usize,
    count: *mut usize,
) -> DfkStatus {
    guard(|| {
        let c = plant_ref(plant)?.phase_crossovers(omega_min, omega_max)?;
        let items: Vec<DfkCrossover> = c
            .iter()
            .map(|c| DfkCrossover {
                omega: c.omega,
                gain_margin: c.gain_margin,
            })
            .collect();
        write_list(&items, out, cap, count)
    })
}

/// Amplitudes `X` with `F(X) = kbar`, ascending. `qualitative != 0` selects the
/// qualitative curve. Buffer protocol as `dfk_phase_crossovers`.
///
/// # Safety
/// `nl` must be a live handle; `out` must hold `cap` doubles; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_find_intersections(
    nl: *const DfkNonlinearity,
    qualitative: c_int,
    kbar: f64,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
) -> DfkStatus {
    guard(|| {
        let df = describing_function(nl_ref(nl)?, qualitative != 0)?;
        let roots = find_intersections(df.as_ref(), kbar)?;
        write_list(&roots, out, cap, count)
    })
}

/// Stability of the cycle at `amplitude` on the crossover `omega`.
///
/// # Safety
/// `plant` and `nl` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_classify(
    plant: *const DfkPlant,
    nl: *const DfkNonlinearity,
    qualitative: c_int,
    amplitude: f64,
    omega: f64,
    out: *mut DfkStability,
) -> DfkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let df = describing_function(nl_ref(nl)?, qualitative != 0)?;
        let contour = default_contour(plant_ref(plant)?, &[omega])?;
        *out = match classify(&contour, df.as_ref(), amplitude)? {
            Stability::Stable => DfkStability::Stable,
            Stability::Unstable => DfkStability::Unstable,
        };
        Ok(())
    })
}

/// Full analysis report as JSON, the same document `dfkit analyze` writes.
/// `flags` combines the `DFK_ANALYZE_*` bits. Free `*out_json` with `dfk_string_free`.
///
/// # Safety
/// `nl` and `plant` must be live handles; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfk_analyze_json(
    nl: *const DfkNonlinearity,
    plant: *const DfkPlant,
    flags: c_int,
    out_json: *mut *mut c_char,
) -> DfkStatus {
    guard(|| {
        let out = out_ref(out_json, "out_json")?;
        *out = ptr::null_mut();
        let opts = AnalysisOptions {
            qualitative: flags & DFK_ANALYZE_QUALITATIVE != 0,
            simulate: flags & DFK_ANALYZE_SIMULATE != 0,
            unstable_ellipses: flags & DFK_ANALYZE_UNSTABLE_ELLIPSES != 0,
            ..Default::default()
        };
        let report = analyze(nl_ref(nl)?, plant_ref(plant)?, &opts)?;
        *out = CString::new(report.to_json())
            .expect("JSON has no nul bytes")
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dfk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
