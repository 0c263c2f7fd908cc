//! C ABI over the `covariants` crate.
//!
//! Every function returns a [`CovStatus`]; outputs go through pointers.
//! On failure a message is kept per thread, see [`cov_last_error`].
//! Handles are opaque and released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use covariants::catalog::{basis, Catalog};
use covariants::diophantine::{companion, expansion_count, hilbert_basis, DiophSystem, MinimalSolution};
use covariants::hilbert::{bound_table, lambda_bound, quotient_dim, springer_dim};
use covariants::scalar_forms::{is_prime, HomPoly};
use num_traits::ToPrimitive;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    /// The result does not fit the output type.
    Overflow = 4,
    /// A caller buffer is too small; the needed size was written.
    BufferTooSmall = 5,
    Internal = 6,
}

/// A parsed generator basis.
pub struct CovCatalog {
    inner: Catalog,
}

/// Minimal solutions of a two-equation Diophantine system.
pub struct CovDioph {
    solutions: Vec<MinimalSolution>,
    s: Vec<usize>,
    t: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CovStatus, String);

fn fail<T>(status: CovStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> CovStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CovStatus::Internal, "panic"));
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CovStatus::Ok
        }
        Err(Failure(status, msg)) => {
            let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
            LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
            status
        }
    }
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().map_or_else(|| fail(CovStatus::NullPointer, "null output pointer"), Ok)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    match (p.is_null(), len) {
        (_, 0) => Ok(&[]),
        (true, _) => fail(CovStatus::NullPointer, "null input array"),
        (false, _) => Ok(std::slice::from_raw_parts(p, len)),
    }
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn cov_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn cov_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// `dim Cov_{d,m}(S_n)`.
///
/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_springer_dim(n: usize, d: usize, m: usize, result: *mut u64) -> CovStatus {
    run(|| {
        let r = out(result)?;
        *r = springer_dim(n, d, m).to_u64().map_or_else(|| fail(CovStatus::Overflow, "exceeds 64 bits"), Ok)?;
        Ok(())
    })
}

/// Dimension of the `(d, m)` component modulo a regular sequence of
/// invariants of the given degrees.
///
/// # Safety
/// `degrees` must point to `len` values (or be null with `len == 0`);
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_quotient_dim(
    n: usize,
    d: usize,
    m: usize,
    degrees: *const usize,
    len: usize,
    result: *mut i64,
) -> CovStatus {
    run(|| {
        let degs = slice(degrees, len)?;
        if degs.contains(&0) {
            return fail(CovStatus::InvalidArgument, "degrees must be positive");
        }
        let r = out(result)?;
        *r = quotient_dim(n, d, m, degs).to_i64().map_or_else(|| fail(CovStatus::Overflow, "exceeds 64 bits"), Ok)?;
        Ok(())
    })
}

/// Maximal order of a generator of `Cov(S_n)`.
///
/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_lambda_bound(n: usize, result: *mut usize) -> CovStatus {
    run(|| {
        if n == 0 {
            return fail(CovStatus::InvalidArgument, "n must be positive");
        }
        *out(result)? = lambda_bound(n);
        Ok(())
    })
}

/// Degree bound for generators of order `m` (n = 9 or 10).
///
/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_bound_max_degree(n: usize, m: usize, result: *mut usize) -> CovStatus {
    run(|| {
        let table = bound_table(n).or_else(|e| fail(CovStatus::Unsupported, e.to_string()))?;
        let r = out(result)?;
        *r = table
            .max_degree(m)
            .map_or_else(|| fail(CovStatus::InvalidArgument, format!("no bound for order {m}")), Ok)?;
        Ok(())
    })
}

/// Load the shipped basis of `Cov(S_n)`.
///
/// # Safety
/// `handle` must be valid for writes; release the result with
/// [`cov_catalog_free`].
#[no_mangle]
pub unsafe extern "C" fn cov_catalog_load(n: usize, handle: *mut *mut CovCatalog) -> CovStatus {
    run(|| {
        let h = out(handle)?;
        let inner = basis(n).or_else(|e| fail(CovStatus::Unsupported, e.to_string()))?;
        *h = Box::into_raw(Box::new(CovCatalog { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`cov_catalog_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cov_catalog_free(handle: *mut CovCatalog) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

unsafe fn catalog<'a>(h: *const CovCatalog) -> Result<&'a Catalog, Failure> {
    h.as_ref().map(|c| &c.inner).map_or_else(|| fail(CovStatus::NullPointer, "null catalog"), Ok)
}

fn entry(cat: &Catalog, index: usize) -> Result<&covariants::catalog::CatalogEntry, Failure> {
    cat.entries.get(index).map_or_else(|| fail(CovStatus::InvalidArgument, format!("index {index} out of range")), Ok)
}

/// # Safety
/// `handle` must be live; `len` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_catalog_len(handle: *const CovCatalog, len: *mut usize) -> CovStatus {
    run(|| {
        *out(len)? = catalog(handle)?.len();
        Ok(())
    })
}

/// Degree and order of entry `index`.
///
/// # Safety
/// `handle` must be live; `degree` and `order` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_catalog_bidegree(
    handle: *const CovCatalog,
    index: usize,
    degree: *mut usize,
    order: *mut usize,
) -> CovStatus {
    run(|| {
        let cat = catalog(handle)?;
        let (d, m) = cat.program.bidegree(entry(cat, index)?.node);
        *out(degree)? = d;
        *out(order)? = m;
        Ok(())
    })
}

/// Copy the nul-terminated label of entry `index` into `buf`. `needed`
/// receives the size including the terminator, also on `BufferTooSmall`.
///
/// # Safety
/// `handle` must be live; `buf` must hold `cap` bytes; `needed` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_catalog_label(
    handle: *const CovCatalog,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> CovStatus {
    run(|| {
        let label = &entry(catalog(handle)?, index)?.label;
        let size = label.len() + 1;
        *out(needed)? = size;
        if cap < size {
            return fail(CovStatus::BufferTooSmall, format!("label needs {size} bytes"));
        }
        if buf.is_null() {
            return fail(CovStatus::NullPointer, "null buffer");
        }
        std::ptr::copy_nonoverlapping(label.as_ptr().cast::<c_char>(), buf, label.len());
        *buf.add(label.len()) = 0;
        Ok(())
    })
}

/// Evaluate entry `index` at the form with coefficients `coeffs` (`n + 1`
/// values, `x^n` first) over `F_p`. Writes the `order + 1` coefficients of
/// the covariant into `result`; `written` receives that count, also on
/// `BufferTooSmall`.
///
/// # Safety
/// `handle` must be live; `coeffs` must hold `ncoeffs` values; `result`
/// must hold `cap` values; `written` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_catalog_evaluate(
    handle: *const CovCatalog,
    index: usize,
    p: u32,
    coeffs: *const u32,
    ncoeffs: usize,
    result: *mut u32,
    cap: usize,
    written: *mut usize,
) -> CovStatus {
    run(|| {
        let cat = catalog(handle)?;
        let node = entry(cat, index)?.node;
        if !is_prime(p) || (p as usize) <= cat.n {
            return fail(CovStatus::InvalidArgument, format!("{p} is not a prime above {}", cat.n));
        }
        let values = slice(coeffs, ncoeffs)?;
        if values.len() != cat.n + 1 {
            return fail(CovStatus::InvalidArgument, format!("expected {} coefficients", cat.n + 1));
        }
        let reduced: Vec<u32> = values.iter().map(|v| v % p).collect();
        let form = HomPoly::from_mod_p(p, reduced).or_else(|e| fail(CovStatus::InvalidArgument, e.to_string()))?;
        let value =
            cat.program.evaluate_nodes(&form, &[node]).or_else(|e| fail(CovStatus::Internal, e.to_string()))?.remove(0);
        let coeffs = value.mod_p_values().map_or_else(|| fail(CovStatus::Internal, "not a mod p value"), Ok)?;
        *out(written)? = coeffs.len();
        if cap < coeffs.len() {
            return fail(CovStatus::BufferTooSmall, format!("result needs {} values", coeffs.len()));
        }
        if result.is_null() {
            return fail(CovStatus::NullPointer, "null result buffer");
        }
        std::ptr::copy_nonoverlapping(coeffs.as_ptr(), result, coeffs.len());
        Ok(())
    })
}

/// Minimal solutions of `sum lhs1_i a_i = u + r`, `sum lhs2_j b_j = v + r`
/// through the injective companion.
///
/// # Safety
/// `lhs1` and `lhs2` must hold `len1` and `len2` values; `handle` must be
/// valid for writes; release the result with [`cov_dioph_free`].
#[no_mangle]
pub unsafe extern "C" fn cov_dioph_solve(
    lhs1: *const u64,
    len1: usize,
    lhs2: *const u64,
    len2: usize,
    handle: *mut *mut CovDioph,
) -> CovStatus {
    run(|| {
        let h = out(handle)?;
        let sys = DiophSystem::new(slice(lhs1, len1)?.to_vec(), slice(lhs2, len2)?.to_vec())
            .or_else(|e| fail(CovStatus::InvalidArgument, e.to_string()))?;
        let comp = companion(&sys);
        let solutions = hilbert_basis(&comp.system);
        *h = Box::into_raw(Box::new(CovDioph { solutions, s: comp.s, t: comp.t }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`cov_dioph_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cov_dioph_free(handle: *mut CovDioph) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of minimal solutions of the companion system.
///
/// # Safety
/// `handle` must be live; `count` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_dioph_count(handle: *const CovDioph, count: *mut usize) -> CovStatus {
    run(|| {
        let h = handle.as_ref().map_or_else(|| fail(CovStatus::NullPointer, "null handle"), Ok)?;
        *out(count)? = h.solutions.len();
        Ok(())
    })
}

/// Number of minimal solutions of the original system.
///
/// # Safety
/// `handle` must be live; `count` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cov_dioph_expanded(handle: *const CovDioph, count: *mut u64) -> CovStatus {
    run(|| {
        let h = handle.as_ref().map_or_else(|| fail(CovStatus::NullPointer, "null handle"), Ok)?;
        let total = expansion_count(&h.solutions, &h.s, &h.t);
        *out(count)? = total.to_u64().map_or_else(|| fail(CovStatus::Overflow, "exceeds 64 bits"), Ok)?;
        Ok(())
    })
}
