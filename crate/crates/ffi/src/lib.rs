//! C ABI over `pucci_core`.
//!
//! Every fallible function returns a [`PucciStatus`] and writes results
//! through out-pointers. On failure a message is kept per thread and can be
//! read with [`pucci_last_error`]. Domains are opaque handles created by
//! [`pucci_domain_new`] and released with [`pucci_domain_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pucci_core::eigenfield::{Eigenfield, PatchEval};
use pucci_core::geometry::{Domain, ShapeParams};
use pucci_core::measure;
use pucci_core::symmat::{self, EllipticityParams, SymMatrix3};
use pucci_core::verifier::{self, Suite};
use pucci_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PucciStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parameter = 3,
    Outside = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PucciSuite {
    Residual = 0,
    C1 = 1,
    Boundary = 2,
    ShearBound = 3,
    Block = 4,
}

/// Value, gradient and Hessian `[xx, yy, zz, xy, xz, yz]` at a point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PucciEval {
    pub value: f64,
    pub gradient: [f64; 3],
    pub hessian: [f64; 6],
    /// Patch index in the order C, X, Y, Z, ZX, XY, YZ.
    pub patch: i32,
}

/// Headline of a verification suite.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PucciSuiteResult {
    pub pass: bool,
    pub statistic: f64,
    pub tolerance: f64,
    pub witness: [f64; 3],
    pub has_witness: bool,
}

/// Opaque domain handle.
pub struct PucciDomain {
    field: Eigenfield,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PucciStatus {
    match e {
        Error::Parameter(_) | Error::Resolution { .. } => PucciStatus::Parameter,
        Error::Outside { .. } => PucciStatus::Outside,
        Error::QuadratureBudget { .. }
        | Error::NonConvergence { .. }
        | Error::SolverFailure(_)
        | Error::SingularMatrix { .. }
        | Error::CertificateInvalid { .. } => PucciStatus::Numerical,
        _ => PucciStatus::InvalidInput,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), (PucciStatus, String)>>(f: F) -> PucciStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PucciStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside pucci_core");
            PucciStatus::Panic
        }
    }
}

fn core<T>(r: pucci_core::Result<T>) -> Result<T, (PucciStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PucciStatus, String) {
    (PucciStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read3(p: *const f64) -> Result<[f64; 3], (PucciStatus, String)> {
    if p.is_null() {
        return Err(null("point"));
    }
    Ok(unsafe { *(p as *const [f64; 3]) })
}

unsafe fn read6(p: *const f64) -> Result<SymMatrix3, (PucciStatus, String)> {
    if p.is_null() {
        return Err(null("matrix"));
    }
    Ok(SymMatrix3::from_array(unsafe { *(p as *const [f64; 6]) }))
}

unsafe fn domain<'a>(d: *const PucciDomain) -> Result<&'a PucciDomain, (PucciStatus, String)> {
    unsafe { d.as_ref() }.ok_or_else(|| null("domain"))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), (PucciStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(v) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pucci_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread (empty after success).
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn pucci_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a domain for ellipticity `(lambda, big_lambda)` and shape `(gamma, a)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pucci_domain_new(
    lambda: f64,
    big_lambda: f64,
    gamma: f64,
    a: f64,
    out: *mut *mut PucciDomain,
) -> PucciStatus {
    guard(|| {
        let ep = core(EllipticityParams::new(lambda, big_lambda))?;
        let sp = core(ShapeParams::new(gamma, a, &ep))?;
        let handle = Box::new(PucciDomain { field: Eigenfield::new(Domain::new(ep, sp)) });
        unsafe { write(out, Box::into_raw(handle)) }
    })
}

/// Releases a domain. Null is ignored.
///
/// # Safety
/// `d` must come from [`pucci_domain_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pucci_domain_free(d: *mut PucciDomain) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Membership of `p[3]` in the unsheared (`sheared == false`) or sheared domain.
///
/// # Safety
/// `d` must be a live handle, `p` must point to 3 doubles, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pucci_domain_contains(
    d: *const PucciDomain,
    p: *const f64,
    sheared: bool,
    out: *mut bool,
) -> PucciStatus {
    guard(|| {
        let dom = &unsafe { domain(d) }?.field.domain;
        let p = unsafe { read3(p) }?;
        let inside = if sheared { dom.contains_sheared(p) } else { dom.contains(p) };
        unsafe { write(out, inside) }
    })
}

/// Patch index of `p[3]` in the unsheared domain, or −1 when outside.
///
/// # Safety
/// As for [`pucci_domain_contains`].
#[no_mangle]
pub unsafe extern "C" fn pucci_domain_classify(d: *const PucciDomain, p: *const f64, out: *mut i32) -> PucciStatus {
    guard(|| {
        let dom = &unsafe { domain(d) }?.field.domain;
        let p = unsafe { read3(p) }?;
        let idx = core(dom.classify(p))?.map_or(-1, |id| id.patch.index() as i32);
        unsafe { write(out, idx) }
    })
}

fn to_c(e: &PatchEval) -> PucciEval {
    PucciEval { value: e.value, gradient: e.gradient, hessian: e.hessian.to_array(), patch: e.patch.patch.index() as i32 }
}

/// Eigenfunction data at `p[3]` of the unsheared domain.
///
/// # Safety
/// As for [`pucci_domain_contains`].
#[no_mangle]
pub unsafe extern "C" fn pucci_eval(d: *const PucciDomain, p: *const f64, out: *mut PucciEval) -> PucciStatus {
    guard(|| {
        let f = &unsafe { domain(d) }?.field;
        let p = unsafe { read3(p) }?;
        let e = core(f.eval(p))?;
        unsafe { write(out, to_c(&e)) }
    })
}

/// Eigenfunction data of `u ∘ C_a⁻¹` at `x[3]` of the sheared domain.
///
/// # Safety
/// As for [`pucci_domain_contains`].
#[no_mangle]
pub unsafe extern "C" fn pucci_eval_sheared(d: *const PucciDomain, x: *const f64, out: *mut PucciEval) -> PucciStatus {
    guard(|| {
        let f = &unsafe { domain(d) }?.field;
        let x = unsafe { read3(x) }?;
        let e = core(f.eval_sheared(x))?;
        unsafe { write(out, to_c(&e)) }
    })
}

/// `M⁺(m)` for a symmetric matrix `m[6] = [xx, yy, zz, xy, xz, yz]`.
///
/// # Safety
/// `m` must point to 6 doubles, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pucci_plus(m: *const f64, lambda: f64, big_lambda: f64, out: *mut f64) -> PucciStatus {
    guard(|| {
        let m = unsafe { read6(m) }?;
        let ep = core(EllipticityParams::new(lambda, big_lambda))?;
        let v = core(symmat::pucci_plus(&m, &ep))?;
        unsafe { write(out, v) }
    })
}

/// `M⁻(m)`, see [`pucci_plus`].
///
/// # Safety
/// As for [`pucci_plus`].
#[no_mangle]
pub unsafe extern "C" fn pucci_minus(m: *const f64, lambda: f64, big_lambda: f64, out: *mut f64) -> PucciStatus {
    guard(|| {
        let m = unsafe { read6(m) }?;
        let ep = core(EllipticityParams::new(lambda, big_lambda))?;
        let v = core(symmat::pucci_minus(&m, &ep))?;
        unsafe { write(out, v) }
    })
}

/// Ascending eigenvalues of `m[6]` into `out[3]`.
///
/// # Safety
/// `m` must point to 6 doubles and `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pucci_sym_eigenvalues(m: *const f64, out: *mut f64) -> PucciStatus {
    guard(|| {
        let m = unsafe { read6(m) }?;
        let e = core(m.eigenvalues())?;
        unsafe { write(out as *mut [f64; 3], e) }
    })
}

/// Volume of the sheared domain by adaptive quadrature.
///
/// # Safety
/// `d` must be a live handle; `volume` and `error` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pucci_volume_quadrature(d: *const PucciDomain, volume: *mut f64, error: *mut f64) -> PucciStatus {
    guard(|| {
        let dom = &unsafe { domain(d) }?.field.domain;
        if volume.is_null() || error.is_null() {
            return Err(null("output pointer"));
        }
        let r = core(measure::volume_quadrature(dom))?;
        unsafe {
            write(volume, r.volume)?;
            write(error, r.error)
        }
    })
}

/// Runs one verification suite (a `PucciSuite` value) with `n` samples and
/// reports its headline check. A suite that runs but fails still returns `Ok`
/// with `pass == false`.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pucci_run_suite(
    d: *const PucciDomain,
    suite: u32,
    n: usize,
    seed: u64,
    out: *mut PucciSuiteResult,
) -> PucciStatus {
    guard(|| {
        let f = &unsafe { domain(d) }?.field;
        let suite = suite_of(suite).ok_or((PucciStatus::InvalidInput, format!("unknown suite {suite}")))?;
        let report = core(match suite {
            Suite::Residual => verifier::residual_suite(f, n, seed),
            Suite::C1 => verifier::c1_suite(f, n, seed),
            Suite::Boundary => verifier::boundary_suite(f, n, seed),
            Suite::ShearBound => verifier::shear_bound_suite(f, n, seed),
            Suite::Block => verifier::block_suite(&f.domain, n, seed),
        })?;
        let h = report.headline();
        let res = PucciSuiteResult {
            pass: report.pass,
            statistic: h.statistic,
            tolerance: h.tolerance,
            witness: h.witness.map_or([0.0; 3], |w| w.point),
            has_witness: h.witness.is_some(),
        };
        unsafe { write(out, res) }
    })
}

fn suite_of(s: u32) -> Option<Suite> {
    [
        (PucciSuite::Residual, Suite::Residual),
        (PucciSuite::C1, Suite::C1),
        (PucciSuite::Boundary, Suite::Boundary),
        (PucciSuite::ShearBound, Suite::ShearBound),
        (PucciSuite::Block, Suite::Block),
    ]
    .into_iter()
    .find(|(c, _)| *c as u32 == s)
    .map(|(_, r)| r)
}

/// Lower bound `λπ²/(π² − a²)` for the principal half-eigenvalue of the sheared domain.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pucci_shear_lower_bound(d: *const PucciDomain, out: *mut f64) -> PucciStatus {
    guard(|| {
        let dom = &unsafe { domain(d) }?.field.domain;
        unsafe { write(out, verifier::shear_lower_bound(&dom.ep, dom.sp.a())) }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Parameter("x".into())), PucciStatus::Parameter);
        assert_eq!(status_of(&Error::Outside { point: [0.0; 3] }), PucciStatus::Outside);
        assert_eq!(status_of(&Error::SolverFailure("x".into())), PucciStatus::Numerical);
    }

    #[test]
    fn error_message_is_thread_local() {
        let mut d = ptr::null_mut();
        assert_eq!(unsafe { pucci_domain_new(1.0, 9.0, 3.5, 0.0, &mut d) }, PucciStatus::Parameter);
        let here = unsafe { CStr::from_ptr(pucci_last_error()) }.to_string_lossy().into_owned();
        assert!(here.contains("gamma"));
        let there = std::thread::spawn(|| unsafe { CStr::from_ptr(pucci_last_error()) }.to_string_lossy().into_owned())
            .join()
            .unwrap();
        assert!(there.is_empty());
    }
}
