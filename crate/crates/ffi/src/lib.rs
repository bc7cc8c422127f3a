//! C ABI for `skspline`.
//!
//! Every object is an opaque handle created by a `*_new` function and
//! released by the matching `*_free`. Every fallible function returns an
//! [`SkStatus`]; on failure a description is available from
//! [`sk_last_error_message`] on the same thread. Matrices are passed
//! row-major as `dim * dim` doubles. Panics never cross the boundary.

use skspline::{
    interpolate, CardinalCoefficients, FundamentalSpline, GaussianKernel, Interpolant, Kernel, Lattice, LatticeSamples, SkError,
    SymbolFunction,
};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

/// Result codes. `SK_STATUS_OK` is zero; every other value is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    SingularMatrix = 4,
    SizeOverflow = 5,
    DegenerateSymbol = 6,
    ReconstructionFailure = 7,
    IllConditioned = 8,
    Panic = 9,
}

impl From<&SkError> for SkStatus {
    fn from(e: &SkError) -> Self {
        match e {
            SkError::SingularMatrix { .. } => SkStatus::SingularMatrix,
            SkError::DimensionMismatch { .. } => SkStatus::DimensionMismatch,
            SkError::SizeOverflow { .. } => SkStatus::SizeOverflow,
            SkError::DegenerateSymbol { .. } => SkStatus::DegenerateSymbol,
            SkError::ReconstructionFailure { .. } => SkStatus::ReconstructionFailure,
            SkError::IllConditioned { .. } => SkStatus::IllConditioned,
            SkError::InvalidInput(_) => SkStatus::InvalidInput,
        }
    }
}

/// A lattice `A Z^n`.
pub struct SkLattice(Lattice);

/// A Gaussian kernel `exp(-|B x|^2)`.
pub struct SkKernel(Arc<GaussianKernel>);

/// The periodized symbol of a kernel on a lattice.
pub struct SkSymbol(SymbolFunction);

/// A fundamental spline with its coefficient table.
pub struct SkFundamental(Arc<FundamentalSpline>);

/// An interpolant of lattice samples.
pub struct SkInterpolant(Interpolant);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SkStatus, String);

impl From<SkError> for Failure {
    fn from(e: SkError) -> Self {
        Failure(SkStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SkStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SkStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SkStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn rows(data: *const f64, dim: usize, what: &str) -> Result<Vec<Vec<f64>>, Failure> {
    if dim == 0 {
        return Err(Failure(SkStatus::InvalidInput, format!("{what}: dimension must be positive")));
    }
    let flat =
        slice(data, dim.checked_mul(dim).ok_or_else(|| Failure(SkStatus::SizeOverflow, "dimension too large".into()))?, what)?;
    Ok(flat.chunks_exact(dim).map(|r| r.to_vec()).collect())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        // a panic in Drop must not unwind into C
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(p))));
    }
}

/// Description of the most recent failure on this thread, or null if the
/// last call succeeded. Valid until the next call into this library.
#[no_mangle]
pub extern "C" fn sk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `generator` must point to `dim * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_new(dim: usize, generator: *const f64, out: *mut *mut SkLattice) -> SkStatus {
    guard(|| {
        let lattice = Lattice::from_rows(&rows(generator, dim, "generator")?)?;
        write(out, boxed(SkLattice(lattice)), "out")
    })
}

/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_free(lattice: *mut SkLattice) {
    free(lattice)
}

/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_abs_det(lattice: *const SkLattice, out: *mut f64) -> SkStatus {
    guard(|| write(out, handle(lattice, "lattice")?.0.abs_det(), "out"))
}

/// # Safety
/// `shape` must point to `dim * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_gaussian_new(dim: usize, shape: *const f64, out: *mut *mut SkKernel) -> SkStatus {
    guard(|| {
        let kernel = GaussianKernel::from_rows(&rows(shape, dim, "shape")?)?;
        write(out, boxed(SkKernel(Arc::new(kernel))), "out")
    })
}

/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_free(kernel: *mut SkKernel) {
    free(kernel)
}

/// `K(x)`.
///
/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_eval(kernel: *const SkKernel, x: *const f64, len: usize, out: *mut f64) -> SkStatus {
    guard(|| write(out, handle(kernel, "kernel")?.0.try_eval(slice(x, len, "x")?)?, "out"))
}

/// `F(K)(z) = ∫ exp(-i⟨x, z⟩) K(x) dx`.
///
/// # Safety
/// `z` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_kernel_fourier(kernel: *const SkKernel, z: *const f64, len: usize, out: *mut f64) -> SkStatus {
    guard(|| write(out, handle(kernel, "kernel")?.0.try_fourier(slice(z, len, "z")?)?, "out"))
}

/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_symbol_new(lattice: *const SkLattice, kernel: *const SkKernel, out: *mut *mut SkSymbol) -> SkStatus {
    guard(|| {
        let lattice = handle(lattice, "lattice")?.0.clone();
        let kernel: Arc<dyn Kernel> = handle(kernel, "kernel")?.0.clone();
        write(out, boxed(SkSymbol(SymbolFunction::new(lattice, kernel)?)), "out")
    })
}

/// # Safety
/// `symbol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_symbol_free(symbol: *mut SkSymbol) {
    free(symbol)
}

/// The inverse symbol summed over dual-lattice shifts of the transform.
///
/// # Safety
/// `z` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_symbol_inverse_frequency(
    symbol: *const SkSymbol,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> SkStatus {
    guard(|| write(out, handle(symbol, "symbol")?.0.symbol_inverse_frequency(slice(z, len, "z")?)?, "out"))
}

/// The inverse symbol as a lattice series; real and imaginary parts.
///
/// # Safety
/// `z` must point to `len` doubles; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_symbol_inverse_spatial(
    symbol: *const SkSymbol,
    z: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> SkStatus {
    guard(|| {
        let v = handle(symbol, "symbol")?.0.symbol_inverse_spatial(slice(z, len, "z")?)?;
        write(re, v.re, "re")?;
        write(im, v.im, "im")
    })
}

/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_fundamental_new(
    lattice: *const SkLattice,
    kernel: *const SkKernel,
    grid_size: usize,
    out: *mut *mut SkFundamental,
) -> SkStatus {
    guard(|| {
        let lattice = handle(lattice, "lattice")?;
        let kernel: Arc<dyn Kernel> = handle(kernel, "kernel")?.0.clone();
        let symbol = SymbolFunction::new(lattice.0.clone(), kernel.clone())?;
        let table = CardinalCoefficients::compute(&symbol, grid_size)?;
        let spline = FundamentalSpline::new(table, kernel)?;
        write(out, boxed(SkFundamental(Arc::new(spline))), "out")
    })
}

/// # Safety
/// `fundamental` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_fundamental_free(fundamental: *mut SkFundamental) {
    free(fundamental)
}

/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_fundamental_eval(
    fundamental: *const SkFundamental,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> SkStatus {
    guard(|| write(out, handle(fundamental, "fundamental")?.0.eval(slice(x, len, "x")?)?, "out"))
}

/// Max deviation from 1 at the origin and 0 at the other lattice points with `|m|_∞ <= radius`.
///
/// # Safety
/// `fundamental` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_fundamental_cardinality_residual(
    fundamental: *const SkFundamental,
    radius: usize,
    out: *mut f64,
) -> SkStatus {
    guard(|| write(out, handle(fundamental, "fundamental")?.0.cardinality_residual(radius)?, "out"))
}

/// Largest `|s|_∞` held in the coefficient table.
///
/// # Safety
/// `fundamental` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_fundamental_table_radius(fundamental: *const SkFundamental, out: *mut usize) -> SkStatus {
    guard(|| write(out, handle(fundamental, "fundamental")?.0.coefficients().radius(), "out"))
}

/// The coefficient `α_s`; `InvalidInput` if `s` is outside the table.
///
/// # Safety
/// `s` must point to `len` integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_fundamental_coefficient(
    fundamental: *const SkFundamental,
    s: *const i64,
    len: usize,
    out: *mut f64,
) -> SkStatus {
    guard(|| {
        let f = &handle(fundamental, "fundamental")?.0;
        let s = slice(s, len, "s")?;
        let dim = f.lattice().dim();
        if s.len() != dim {
            return Err(SkError::DimensionMismatch { expected: dim, got: s.len() }.into());
        }
        let a = f
            .coefficients()
            .get(s)
            .ok_or_else(|| Failure(SkStatus::InvalidInput, format!("index {s:?} outside the coefficient table")))?;
        write(out, a, "out")
    })
}

/// The coefficient table as JSON; release with [`sk_string_free`].
///
/// # Safety
/// `fundamental` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_fundamental_coefficients_json(fundamental: *const SkFundamental, out: *mut *mut c_char) -> SkStatus {
    guard(|| {
        let json = handle(fundamental, "fundamental")?.0.coefficients().to_json();
        let c = CString::new(json).map_err(|e| Failure(SkStatus::InvalidInput, e.to_string()))?;
        write(out, c.into_raw(), "out")
    })
}

/// Interpolates `values`, given in lexicographic order of the index box
/// `|s|_∞ <= radius` (last coordinate fastest).
///
/// # Safety
/// `values` must point to `count` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_interpolant_new(
    fundamental: *const SkFundamental,
    radius: usize,
    values: *const f64,
    count: usize,
    out: *mut *mut SkInterpolant,
) -> SkStatus {
    guard(|| {
        let f = handle(fundamental, "fundamental")?.0.clone();
        let samples = LatticeSamples::new(f.lattice().clone(), radius, slice(values, count, "values")?.to_vec())?;
        write(out, boxed(SkInterpolant(interpolate(samples, f)?)), "out")
    })
}

/// # Safety
/// `interpolant` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_interpolant_free(interpolant: *mut SkInterpolant) {
    free(interpolant)
}

/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_interpolant_eval(
    interpolant: *const SkInterpolant,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> SkStatus {
    guard(|| write(out, handle(interpolant, "interpolant")?.0.eval(slice(x, len, "x")?)?, "out"))
}
