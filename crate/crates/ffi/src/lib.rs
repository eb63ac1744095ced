//! C ABI over the core library.
//!
//! Every call returns a [`CpStatus`]; on failure a message is kept per thread and read back with
//! [`cp_last_error`]. Handles are opaque and released with their `_free` function.
//!
//! Pointer arguments must be null or valid for the reads and writes each function documents;
//! handles must come from this library and not be used after they are freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use coherent_projection::coherent::{overlap_closed, CoherentLabel};
use coherent_projection::examples::su2_projected_kernel;
use coherent_projection::experiments::{self, Report};
use coherent_projection::fock::OperatorMatrix;
use coherent_projection::projector::{spectral_interval, ConstraintSpec, Projector};
use coherent_projection::Error;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Usage = 3,
    Numeric = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for CpComplex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<CpComplex> for C64 {
    fn from(z: CpComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

/// One result row. `quantity` points into the owning report.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpRow {
    pub quantity: *const c_char,
    pub value: CpComplex,
    pub tolerance: f64,
    pub residual: f64,
    pub pass: bool,
}

pub struct CpProjector(Projector);

pub struct CpReport {
    report: Report,
    quantities: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (CpStatus, String);

fn status_of(e: &Error) -> CpStatus {
    match e {
        Error::Usage(_) | Error::Config(_) => CpStatus::Usage,
        Error::Domain(_) | Error::Contract(_) | Error::Precondition(_) => CpStatus::InvalidArgument,
        _ => CpStatus::Numeric,
    }
}

fn lib(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> Failure {
    (CpStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CpStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (CpStatus::Ok, None),
        Ok(Err((s, m))) => (s, Some(m)),
        Err(_) => (CpStatus::Panic, Some("panic inside the library".to_string())),
    };
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = message.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes removed"));
    });
    status
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(ptr: *const T) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null("handle"))
}

/// Message for the last failed call on this thread, or null after a successful one. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Closed-form overlap `<p2,q2|p1,q1>` of single-mode ground-state coherent states.
#[no_mangle]
pub unsafe extern "C" fn cp_overlap_closed(p2: f64, q2: f64, p1: f64, q1: f64, result: *mut CpComplex) -> CpStatus {
    guard(|| {
        let v = overlap_closed(&CoherentLabel::pq(p2, q2), &CoherentLabel::pq(p1, q1)).map_err(lib)?;
        *out(result, "result")? = v.into();
        Ok(())
    })
}

/// Spin-`two_s / 2` projected two-mode kernel between `z2[0..2]` and `z1[0..2]`.
#[no_mangle]
pub unsafe extern "C" fn cp_su2_projected_kernel(
    z2: *const CpComplex,
    z1: *const CpComplex,
    two_s: f64,
    result: *mut CpComplex,
) -> CpStatus {
    guard(|| {
        if z2.is_null() || z1.is_null() {
            return Err(null("label"));
        }
        let pair = |z: *const CpComplex| {
            let s = std::slice::from_raw_parts(z, 2);
            [C64::from(s[0]), C64::from(s[1])]
        };
        let v = su2_projected_kernel(&pair(z2), &pair(z1), two_s).map_err(lib)?;
        *out(result, "result")? = v.into();
        Ok(())
    })
}

/// Projector onto `Phi^2 <= delta^2` for the hermitian `dim x dim` matrix given as row-major real
/// and imaginary parts. `imag` may be null for a real matrix.
#[no_mangle]
pub unsafe extern "C" fn cp_projector_spectral(
    real: *const f64,
    imag: *const f64,
    dim: usize,
    delta: f64,
    projector: *mut *mut CpProjector,
) -> CpStatus {
    guard(|| {
        let slot = out(projector, "projector")?;
        if real.is_null() {
            return Err(null("real"));
        }
        if dim == 0 {
            return Err((CpStatus::InvalidArgument, "dim must be positive".into()));
        }
        let re = std::slice::from_raw_parts(real, dim * dim);
        let im = (!imag.is_null()).then(|| std::slice::from_raw_parts(imag, dim * dim));
        let m = DMatrix::from_fn(dim, dim, |i, j| C64::new(re[i * dim + j], im.map_or(0.0, |v| v[i * dim + j])));
        let phi = OperatorMatrix::hermitian(m).map_err(lib)?;
        let e = spectral_interval(&ConstraintSpec::single(phi, delta).map_err(lib)?).map_err(lib)?;
        *slot = Box::into_raw(Box::new(CpProjector(e)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_projector_rank(projector: *const CpProjector, rank: *mut usize) -> CpStatus {
    guard(|| {
        *out(rank, "rank")? = handle(projector)?.0.rank();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_projector_entry(projector: *const CpProjector, row: usize, col: usize, entry: *mut CpComplex) -> CpStatus {
    guard(|| {
        let e = &handle(projector)?.0;
        if row >= e.dim() || col >= e.dim() {
            return Err((CpStatus::InvalidArgument, format!("({row}, {col}) outside a {0}x{0} projector", e.dim())));
        }
        *out(entry, "entry")? = e.matrix().entries()[(row, col)].into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_projector_free(projector: *mut CpProjector) {
    if !projector.is_null() {
        drop(Box::from_raw(projector));
    }
}

fn experiment_names() -> &'static [CString] {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    NAMES.get_or_init(|| experiments::registry().iter().map(|e| CString::new(e.name).expect("ascii name")).collect())
}

#[no_mangle]
pub extern "C" fn cp_experiment_count() -> usize {
    experiments::registry().len()
}

/// Static name of the experiment at `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn cp_experiment_name(index: usize) -> *const c_char {
    experiment_names().get(index).map_or(std::ptr::null(), |s| s.as_ptr())
}

/// Runs a registered experiment at its defaults.
#[no_mangle]
pub unsafe extern "C" fn cp_experiment_run(name: *const c_char, seed: u64, report: *mut *mut CpReport) -> CpStatus {
    guard(|| {
        let slot = out(report, "report")?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_str().map_err(|_| (CpStatus::Usage, "name is not UTF-8".to_string()))?;
        let r = experiments::find(name).and_then(|e| e.run(&Default::default(), seed)).map_err(lib)?;
        let quantities = r.rows.iter().map(|row| CString::new(row.quantity.replace('\0', " ")).expect("nul bytes removed")).collect();
        *slot = Box::into_raw(Box::new(CpReport { report: r, quantities }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_report_passed(report: *const CpReport, passed: *mut bool) -> CpStatus {
    guard(|| {
        *out(passed, "passed")? = handle(report)?.report.passed();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_report_row_count(report: *const CpReport, count: *mut usize) -> CpStatus {
    guard(|| {
        *out(count, "count")? = handle(report)?.report.rows.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_report_row(report: *const CpReport, index: usize, row: *mut CpRow) -> CpStatus {
    guard(|| {
        let h = handle(report)?;
        let r = h
            .report
            .rows
            .get(index)
            .ok_or_else(|| (CpStatus::InvalidArgument, format!("row {index} of {}", h.report.rows.len())))?;
        *out(row, "row")? = CpRow {
            quantity: h.quantities[index].as_ptr(),
            value: CpComplex { re: r.re, im: r.im },
            tolerance: r.tolerance,
            residual: r.residual,
            pass: r.pass,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_report_free(report: *mut CpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
