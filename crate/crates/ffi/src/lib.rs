//! C interface to `dcnmf`.
//!
//! Matrices and fits are opaque heap handles owned by the caller and released
//! with their `_free` functions. Every fallible call returns a [`DcnmfStatus`];
//! the message of the most recent failure on the calling thread is available
//! from [`dcnmf_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dcnmf::algorithms::{self, Fit, SolverOptions, SparsitySchedule};
use dcnmf::divergence::{d_beta_matrix, BetaParams};
use dcnmf::{io, Error, Matrix};

/// Status codes; the nonzero values match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcnmfStatus {
    Ok = 0,
    /// Bad argument, domain, dimension or constraint problem.
    Invalid = 2,
    /// A multiplier solve failed.
    Solver = 3,
    /// File or parse error.
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

/// Solver settings. Obtain defaults from [`dcnmf_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcnmfOptions {
    pub max_iters: usize,
    pub beta: f64,
    pub seed: u64,
    pub tol_residual: f64,
    pub floor_eps: f64,
    pub objective_every: usize,
}

impl From<&DcnmfOptions> for SolverOptions {
    fn from(o: &DcnmfOptions) -> Self {
        SolverOptions {
            max_iters: o.max_iters,
            beta: o.beta,
            seed: o.seed,
            tol_residual: o.tol_residual,
            floor_eps: o.floor_eps,
            objective_every: o.objective_every,
            ..SolverOptions::default()
        }
    }
}

pub struct DcnmfMatrix {
    inner: Matrix,
}

pub struct DcnmfFit {
    w: DcnmfMatrix,
    h: DcnmfMatrix,
    fit: Fit,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> DcnmfStatus {
    match e.exit_code() {
        3 => DcnmfStatus::Solver,
        4 => DcnmfStatus::Io,
        _ => DcnmfStatus::Invalid,
    }
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DcnmfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcnmfStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as {name}"));
            DcnmfStatus::Invalid
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            DcnmfStatus::Invalid
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            DcnmfStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out_slot<'a, T>(p: *mut *mut T, name: &'static str) -> Result<&'a mut *mut T, Failure> {
    let slot = p.as_mut().ok_or(Failure::Null(name))?;
    *slot = ptr::null_mut();
    Ok(slot)
}

unsafe fn c_str<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg(format!("{name} is not valid UTF-8")))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn dcnmf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn dcnmf_options_default() -> DcnmfOptions {
    let d = SolverOptions::default();
    DcnmfOptions {
        max_iters: d.max_iters,
        beta: d.beta,
        seed: d.seed,
        tol_residual: d.tol_residual,
        floor_eps: d.floor_eps,
        objective_every: d.objective_every,
    }
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut DcnmfMatrix,
) -> DcnmfStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::Arg(format!("{rows} x {cols} overflows")))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let inner = Matrix::from_shape_vec((rows, cols), values).map_err(|e| Failure::Arg(e.to_string()))?;
        *slot = boxed(DcnmfMatrix { inner });
        Ok(())
    })
}

/// Reads a CSV or MatrixMarket file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_matrix_load(path: *const c_char, out: *mut *mut DcnmfMatrix) -> DcnmfStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let path = c_str(path, "path")?;
        *slot = boxed(DcnmfMatrix {
            inner: io::load_matrix(path)?,
        });
        Ok(())
    })
}

/// # Safety
/// `m` and `path` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_matrix_save(m: *const DcnmfMatrix, path: *const c_char) -> DcnmfStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        io::save_matrix(&m.inner, Path::new(c_str(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_matrix_free(m: *mut DcnmfMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_matrix_rows(m: *const DcnmfMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.nrows())
}

/// # Safety
/// `m` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_matrix_cols(m: *const DcnmfMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.ncols())
}

/// Writes the entries row-major into `dst`, which holds `len` doubles.
///
/// # Safety
/// `dst` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_matrix_copy(m: *const DcnmfMatrix, dst: *mut f64, len: usize) -> DcnmfStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        if dst.is_null() {
            return Err(Failure::Null("dst"));
        }
        if len != m.inner.len() {
            return Err(Failure::Arg(format!("buffer holds {len} values, matrix has {}", m.inner.len())));
        }
        let dst = std::slice::from_raw_parts_mut(dst, len);
        for (d, s) in dst.iter_mut().zip(m.inner.iter()) {
            *d = *s;
        }
        Ok(())
    })
}

/// `D_β(V | WH)`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_beta_divergence(
    v: *const DcnmfMatrix,
    w: *const DcnmfMatrix,
    h: *const DcnmfMatrix,
    beta: f64,
    out: *mut f64,
) -> DcnmfStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        let (v, w, h) = (borrow(v, "v")?, borrow(w, "w")?, borrow(h, "h")?);
        if w.inner.ncols() != h.inner.nrows() || (w.inner.nrows(), h.inner.ncols()) != v.inner.dim() {
            return Err(Failure::Lib(Error::Dimension(format!(
                "V is {:?}, W is {:?}, H is {:?}",
                v.inner.dim(),
                w.inner.dim(),
                h.inner.dim()
            ))));
        }
        *out = d_beta_matrix(&v.inner, &w.inner, &h.inner, &BetaParams::new(beta)?)?;
        Ok(())
    })
}

unsafe fn fit_with(
    v: *const DcnmfMatrix,
    opts: *const DcnmfOptions,
    out: *mut *mut DcnmfFit,
    run: impl FnOnce(&Matrix, &SolverOptions) -> Result<Fit, Failure>,
) -> DcnmfStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let v = borrow(v, "v")?;
        let opts = SolverOptions::from(borrow(opts, "options")?);
        let fit = run(&v.inner, &opts)?;
        *slot = boxed(DcnmfFit {
            w: DcnmfMatrix { inner: fit.w.clone() },
            h: DcnmfMatrix { inner: fit.h.clone() },
            fit,
        });
        Ok(())
    })
}

/// Unconstrained multiplicative updates.
///
/// # Safety
/// `v`, `opts` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_baseline(
    v: *const DcnmfMatrix,
    rank: usize,
    opts: *const DcnmfOptions,
    out: *mut *mut DcnmfFit,
) -> DcnmfStatus {
    fit_with(v, opts, out, |v, o| Ok(algorithms::fit_baseline(v, rank, o)?))
}

/// Columns of H on the unit simplex.
///
/// # Safety
/// `v`, `opts` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_ssnmf(
    v: *const DcnmfMatrix,
    rank: usize,
    opts: *const DcnmfOptions,
    out: *mut *mut DcnmfFit,
) -> DcnmfStatus {
    fit_with(v, opts, out, |v, o| Ok(algorithms::fit_ssnmf(v, rank, o)?))
}

/// Constraints given in the text format of the command-line tool.
///
/// # Safety
/// `v`, `constraints`, `opts` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_constrained(
    v: *const DcnmfMatrix,
    rank: usize,
    constraints: *const c_char,
    opts: *const DcnmfOptions,
    out: *mut *mut DcnmfFit,
) -> DcnmfStatus {
    fit_with(v, opts, out, |v, o| {
        let text = c_str(constraints, "constraints")?;
        let cf = io::parse_constraints(text, Path::new("<constraints>"))?;
        Ok(algorithms::fit_constrained(v, rank, &cf.w, &cf.h, o)?)
    })
}

/// KL fit with column-stochastic W and a log-det volume penalty of weight `lambda`.
///
/// # Safety
/// `v`, `opts` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_minvol(
    v: *const DcnmfMatrix,
    rank: usize,
    lambda: f64,
    delta: f64,
    opts: *const DcnmfOptions,
    out: *mut *mut DcnmfFit,
) -> DcnmfStatus {
    fit_with(v, opts, out, |v, o| Ok(algorithms::fit_minvol_kl(v, rank, lambda, delta, o)?))
}

/// KL fit with an ℓ1 penalty of weight `lambda` on every row of H and columns of W
/// on the sphere of squared radius `rho`.
///
/// # Safety
/// `v`, `opts` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_sparse_sphere(
    v: *const DcnmfMatrix,
    rank: usize,
    lambda: f64,
    rho: f64,
    opts: *const DcnmfOptions,
    out: *mut *mut DcnmfFit,
) -> DcnmfStatus {
    fit_with(v, opts, out, |v, o| {
        let schedule = SparsitySchedule::fixed(vec![lambda; rank]);
        Ok(algorithms::fit_sparse_sphere_kl(v, rank, &schedule, rho, o)?)
    })
}

/// # Safety
/// `fit` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_free(fit: *mut DcnmfFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Borrowed view of W, valid while `fit` lives.
///
/// # Safety
/// `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_w(fit: *const DcnmfFit) -> *const DcnmfMatrix {
    fit.as_ref().map_or(ptr::null(), |f| &f.w)
}

/// Borrowed view of H, valid while `fit` lives.
///
/// # Safety
/// `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_h(fit: *const DcnmfFit) -> *const DcnmfMatrix {
    fit.as_ref().map_or(ptr::null(), |f| &f.h)
}

/// Number of recorded trace rows, including the starting point.
///
/// # Safety
/// `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_trace_len(fit: *const DcnmfFit) -> usize {
    fit.as_ref().map_or(0, |f| f.fit.trace.rows.len())
}

/// Objective at trace row `index`, or NaN when out of range.
///
/// # Safety
/// `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_objective(fit: *const DcnmfFit, index: usize) -> f64 {
    fit.as_ref()
        .and_then(|f| f.fit.trace.rows.get(index))
        .map_or(f64::NAN, |r| r.objective)
}

/// Largest constraint residual over the trace.
///
/// # Safety
/// `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_max_residual(fit: *const DcnmfFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.fit.trace.max_residual())
}

/// Count of sphere updates that fell back to rescaling.
///
/// # Safety
/// `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcnmf_fit_fallbacks(fit: *const DcnmfFit) -> usize {
    fit.as_ref().map_or(0, |f| f.fit.trace.fallback_total())
}
