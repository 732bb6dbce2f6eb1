//! C ABI over bundleforge.
//!
//! Objects cross the boundary as opaque handles created by `bf_*_from_json`
//! or `bf_*_generate` and released with the matching `bf_*_free`. Every
//! fallible call returns a [`BfStatus`]; on anything but `BF_OK` the message
//! is available from [`bf_last_error`] until the next call on the same
//! thread. Strings handed out by the library are freed with
//! [`bf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bundleforge::bundle::{check_bundle_axioms_with, represent_semidirect, BundleCheckConfig, ConcreteBundle};
use bundleforge::classify::{classify_bundle, ClassificationResult, ClassifyConfig};
use bundleforge::group::FiniteGroup;
use bundleforge::io::{ClassificationDoc, ConcreteBundleDoc, TpaDoc};
use bundleforge::linalg::Tolerance;
use bundleforge::report::AxiomReport;
use bundleforge::tpa::{check_axioms, check_aux_identity, generate_random, GlobalWitness, TwistedPartialAction};
use bundleforge::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BfStatus {
    Ok = 0,
    /// The computation ran and some axiom or check failed.
    AxiomFailure = 1,
    /// Malformed document, bad shape, bad tolerance or unknown group.
    InputError = 2,
    /// The mathematics refused: non-regular fiber, not an ideal, etc.
    MathError = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Tolerances and seed shared by all calls taking a configuration.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct BfConfig {
    pub eps_eq: f64,
    pub eps_rank: f64,
    pub seed: u64,
}

pub struct BfTpa {
    action: TwistedPartialAction,
    witness: Option<GlobalWitness>,
    tol: Tolerance,
}

pub struct BfBundle {
    bundle: ConcreteBundle,
}

pub struct BfClassification {
    result: ClassificationResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BfStatus {
    if e.root().is_input_error() {
        BfStatus::InputError
    } else {
        BfStatus::MathError
    }
}

enum Failure {
    Status(BfStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(BfStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, turning errors and panics into a status plus a last-error message.
fn guard(f: impl FnOnce() -> Result<BfStatus, Failure>) -> BfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            BfStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::Status(BfStatus::InputError, "string is not UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure::Status(BfStatus::Panic, "interior nul in output".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn tolerance(cfg: &BfConfig) -> Result<Tolerance, Failure> {
    Ok(Tolerance::new(cfg.eps_eq, cfg.eps_rank)?)
}

fn report_status(r: &AxiomReport) -> BfStatus {
    if r.all_pass() {
        BfStatus::Ok
    } else {
        BfStatus::AxiomFailure
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string(v).map_err(Error::from)?)
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn bf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default tolerances with seed 0.
#[no_mangle]
pub extern "C" fn bf_config_default() -> BfConfig {
    let tol = Tolerance::default();
    BfConfig { eps_eq: tol.eps_eq, eps_rank: tol.eps_rank, seed: 0 }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next `bf_*` call on this thread; do not free.
#[no_mangle]
pub extern "C" fn bf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a TPA document (optionally carrying a witness).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_tpa_from_json(json: *const c_char, cfg: BfConfig, out: *mut *mut BfTpa) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let tol = tolerance(&cfg)?;
        let doc: TpaDoc = serde_json::from_str(read_str(json)?).map_err(Error::from)?;
        let (action, witness) = doc.to_action(&tol)?;
        write_out(out, BfTpa { action, witness, tol });
        Ok(BfStatus::Ok)
    })
}

/// Random action of the preset group (`"cyclic:N"`, `"klein4"`, `"s3"`,
/// `"trivial"`) on blocks of the given sizes, restricted to about
/// `fraction` of them. The handle carries its witness.
///
/// # Safety
/// `group` must be NUL-terminated, `sizes` must point to `n_sizes` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bf_tpa_generate(
    group: *const c_char,
    sizes: *const usize,
    n_sizes: usize,
    fraction: f64,
    cfg: BfConfig,
    out: *mut *mut BfTpa,
) -> BfStatus {
    guard(|| {
        if out.is_null() || (sizes.is_null() && n_sizes > 0) {
            return Err(null());
        }
        let tol = tolerance(&cfg)?;
        let g = FiniteGroup::from_preset(read_str(group)?)?;
        let sizes = if n_sizes == 0 { &[][..] } else { std::slice::from_raw_parts(sizes, n_sizes) };
        let (action, witness) = generate_random(&g, sizes, fraction, cfg.seed, &tol)?;
        write_out(out, BfTpa { action, witness: Some(witness), tol });
        Ok(BfStatus::Ok)
    })
}

/// Runs the action axioms. Returns `BF_AXIOM_FAILURE` when any fails; the
/// JSON report is written to `report` either way when it is not NULL.
///
/// # Safety
/// `tpa` must be a live handle; `report` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn bf_tpa_validate(tpa: *const BfTpa, report: *mut *mut c_char) -> BfStatus {
    guard(|| {
        let tpa = tpa.as_ref().ok_or_else(null)?;
        let mut r = check_axioms(&tpa.action, &tpa.tol);
        r.extend_prefixed("lemma", check_aux_identity(&tpa.action, &tpa.tol));
        if !report.is_null() {
            write_string(report, to_json(&r)?)?;
        }
        Ok(report_status(&r))
    })
}

/// # Safety
/// `tpa` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_tpa_to_json(tpa: *const BfTpa, out: *mut *mut c_char) -> BfStatus {
    guard(|| {
        let tpa = tpa.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        write_string(out, to_json(&TpaDoc::from_action(&tpa.action, tpa.witness.as_ref()))?)?;
        Ok(BfStatus::Ok)
    })
}

/// Group order of the action.
///
/// # Safety
/// `tpa` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_tpa_group_order(tpa: *const BfTpa, out: *mut usize) -> BfStatus {
    guard(|| {
        let tpa = tpa.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = tpa.action.group().order();
        Ok(BfStatus::Ok)
    })
}

/// # Safety
/// `tpa` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_tpa_free(tpa: *mut BfTpa) {
    if !tpa.is_null() {
        drop(Box::from_raw(tpa));
    }
}

/// Concrete representation of the semidirect bundle through the witness
/// the handle carries.
///
/// # Safety
/// `tpa` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_bundle_represent(tpa: *const BfTpa, out: *mut *mut BfBundle) -> BfStatus {
    guard(|| {
        let tpa = tpa.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let witness = tpa
            .witness
            .as_ref()
            .ok_or_else(|| Failure::Status(BfStatus::InputError, "action carries no witness".into()))?;
        let bundle = represent_semidirect(&tpa.action, witness, &tpa.tol)?;
        write_out(out, BfBundle { bundle });
        Ok(BfStatus::Ok)
    })
}

/// Parses a concrete bundle document.
///
/// # Safety
/// `json` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_bundle_from_json(json: *const c_char, cfg: BfConfig, out: *mut *mut BfBundle) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let tol = tolerance(&cfg)?;
        let doc: ConcreteBundleDoc = serde_json::from_str(read_str(json)?).map_err(Error::from)?;
        write_out(out, BfBundle { bundle: doc.to_bundle(&tol)? });
        Ok(BfStatus::Ok)
    })
}

/// # Safety
/// `bundle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_bundle_to_json(bundle: *const BfBundle, out: *mut *mut c_char) -> BfStatus {
    guard(|| {
        let b = bundle.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        write_string(out, to_json(&ConcreteBundleDoc::from_bundle(&b.bundle))?)?;
        Ok(BfStatus::Ok)
    })
}

/// Runs the bundle axiom suite with `cfg.seed` for the sampled norm checks.
///
/// # Safety
/// `bundle` must be a live handle; `report` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn bf_bundle_check(bundle: *const BfBundle, cfg: BfConfig, report: *mut *mut c_char) -> BfStatus {
    guard(|| {
        let b = bundle.as_ref().ok_or_else(null)?;
        let tol = tolerance(&cfg)?;
        let check = BundleCheckConfig { seed: cfg.seed, ..BundleCheckConfig::default() };
        let r = check_bundle_axioms_with(&b.bundle, &tol, &check);
        if !report.is_null() {
            write_string(report, to_json(&r)?)?;
        }
        Ok(report_status(&r))
    })
}

/// # Safety
/// `bundle` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_bundle_free(bundle: *mut BfBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Classifies a regular bundle. The handle is written whenever the pipeline
/// completes, so a caller can inspect reports even on `BF_AXIOM_FAILURE`.
///
/// # Safety
/// `bundle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_classify(bundle: *const BfBundle, cfg: BfConfig, out: *mut *mut BfClassification) -> BfStatus {
    guard(|| {
        let b = bundle.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let c = ClassifyConfig { seed: cfg.seed, ..ClassifyConfig::default() };
        let result = classify_bundle(&b.bundle, &c)?;
        let status = if result.passed() { BfStatus::Ok } else { BfStatus::AxiomFailure };
        write_out(out, BfClassification { result });
        Ok(status)
    })
}

/// Largest residual over all classification reports.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_classification_max_residual(c: *const BfClassification, out: *mut f64) -> BfStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = c.result.max_residual();
        Ok(BfStatus::Ok)
    })
}

/// The recovered frame, action and isometries as JSON.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bf_classification_to_json(c: *const BfClassification, out: *mut *mut c_char) -> BfStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        write_string(out, to_json(&ClassificationDoc::from_result(&c.result))?)?;
        Ok(BfStatus::Ok)
    })
}

/// # Safety
/// `c` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_classification_free(c: *mut BfClassification) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}
