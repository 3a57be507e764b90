//! C interface to `khlogic`.
//!
//! Every function returns a [`KhStatus`]. On failure a description is
//! available from [`kh_last_error`] on the same thread until the next call.
//! Strings handed out by this library must be released with
//! [`kh_string_free`]; handles with their own `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use khlogic::formula::{parse, parse_agent_list, Formula};
use khlogic::mcheck::{self, CheckError};
use khlogic::model::Ltsu;
use khlogic::proofcheck::{check_proof, parse_script, System};
use khlogic::sat::{self, SatError, Validity};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ModelError = 4,
    UnknownState = 5,
    UndeclaredAgent = 6,
    ResourceCap = 7,
    ProofError = 8,
    Panic = 9,
}

/// A validated LTS^U.
pub struct KhModel(Ltsu);

/// A parsed formula.
pub struct KhFormula(Formula);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Failure(KhStatus, String);

impl Failure {
    fn new(status: KhStatus, message: impl ToString) -> Self {
        Failure(status, message.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> KhStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => KhStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KhStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(KhStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(KhStatus::InvalidUtf8, e))
}

unsafe fn target<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(KhStatus::NullPointer, "null output argument"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(KhStatus::NullPointer, "null handle"))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn check_failure(e: CheckError) -> Failure {
    let status = match e {
        CheckError::UndeclaredAgent(_) => KhStatus::UndeclaredAgent,
        CheckError::InvalidModel(_) => KhStatus::ModelError,
        CheckError::UnknownState(_) => KhStatus::UnknownState,
    };
    Failure::new(status, e)
}

fn sat_failure(e: SatError) -> Failure {
    let status = match e {
        SatError::NoAgents => KhStatus::ParseError,
        SatError::UndeclaredAgent(_) => KhStatus::UndeclaredAgent,
        SatError::TooManyStates { .. } | SatError::TooManyGuesses { .. } => KhStatus::ResourceCap,
    };
    Failure::new(status, e)
}

/// Last error message of this thread; empty after a successful call. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn kh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads and validates a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kh_model_from_json(json: *const c_char, out: *mut *mut KhModel) -> KhStatus {
    guard(|| {
        let out = target(out)?;
        *out = ptr::null_mut();
        let m = Ltsu::from_json(text(json)?).map_err(|e| Failure::new(KhStatus::ModelError, e))?;
        m.validate(&m.agents())
            .map_err(|v| check_failure(CheckError::InvalidModel(v)))?;
        *out = Box::into_raw(Box::new(KhModel(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`kh_model_from_json`] and not have been freed, or be null.
#[no_mangle]
pub unsafe extern "C" fn kh_model_free(m: *mut KhModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of states of the model.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kh_model_num_states(m: *const KhModel, out: *mut usize) -> KhStatus {
    guard(|| {
        *target(out)? = handle(m)?.0.base.num_states();
        Ok(())
    })
}

/// Parses a formula; `agents` is a comma-separated agent list.
///
/// # Safety
/// `formula` and `agents` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kh_formula_parse(
    formula: *const c_char,
    agents: *const c_char,
    out: *mut *mut KhFormula,
) -> KhStatus {
    guard(|| {
        let out = target(out)?;
        *out = ptr::null_mut();
        let agents = parse_agent_list(text(agents)?).map_err(|e| Failure::new(KhStatus::ParseError, e))?;
        let f = parse(text(formula)?, &agents).map_err(|e| Failure::new(KhStatus::ParseError, e))?;
        *out = Box::into_raw(Box::new(KhFormula(f)));
        Ok(())
    })
}

/// # Safety
/// `f` must come from [`kh_formula_parse`] and not have been freed, or be null.
#[no_mangle]
pub unsafe extern "C" fn kh_formula_free(f: *mut KhFormula) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Renders a formula in core syntax.
///
/// # Safety
/// `f` must be a live formula handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kh_formula_render(f: *const KhFormula, out: *mut *mut c_char) -> KhStatus {
    guard(|| {
        *target(out)? = owned(handle(f)?.0.render());
        Ok(())
    })
}

/// Truth of a formula at the named state.
///
/// # Safety
/// Handles must be live; `state` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_check(
    m: *const KhModel,
    state: *const c_char,
    f: *const KhFormula,
    out: *mut bool,
) -> KhStatus {
    guard(|| {
        let out = target(out)?;
        *out = mcheck::check(&handle(m)?.0, text(state)?, &handle(f)?.0).map_err(check_failure)?;
        Ok(())
    })
}

/// States satisfying a formula, as a JSON array of state names.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_extension(m: *const KhModel, f: *const KhFormula, out: *mut *mut c_char) -> KhStatus {
    guard(|| {
        let out = target(out)?;
        let m = &handle(m)?.0;
        let ext = mcheck::extension(m, &handle(f)?.0).map_err(check_failure)?;
        let names = m.base.set_to_names(&ext.states);
        *out = owned(serde_json::to_string(&names).expect("names serialize"));
        Ok(())
    })
}

/// Decides satisfiability. On sat, `certificate` receives the model JSON
/// with its `designated` state; otherwise it is set to null.
///
/// # Safety
/// `f` must be live; `agents` NUL-terminated; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn kh_satisfiable(
    f: *const KhFormula,
    agents: *const c_char,
    is_sat: *mut bool,
    certificate: *mut *mut c_char,
) -> KhStatus {
    guard(|| {
        let is_sat = target(is_sat)?;
        let certificate = target(certificate)?;
        *certificate = ptr::null_mut();
        let agents = parse_agent_list(text(agents)?).map_err(|e| Failure::new(KhStatus::ParseError, e))?;
        let r = sat::satisfiable(&handle(f)?.0, &agents).map_err(sat_failure)?;
        *is_sat = r.witness.is_some();
        if let Some(c) = r.witness {
            *certificate = owned(c.to_json());
        }
        Ok(())
    })
}

/// Decides validity. When not valid, `countermodel` receives the model
/// JSON; otherwise it is set to null.
///
/// # Safety
/// `f` must be live; `agents` NUL-terminated; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn kh_valid(
    f: *const KhFormula,
    agents: *const c_char,
    is_valid: *mut bool,
    countermodel: *mut *mut c_char,
) -> KhStatus {
    guard(|| {
        let is_valid = target(is_valid)?;
        let countermodel = target(countermodel)?;
        *countermodel = ptr::null_mut();
        let agents = parse_agent_list(text(agents)?).map_err(|e| Failure::new(KhStatus::ParseError, e))?;
        match sat::valid(&handle(f)?.0, &agents).map_err(sat_failure)? {
            Validity::Valid => *is_valid = true,
            Validity::Countermodel(c) => {
                *is_valid = false;
                *countermodel = owned(c.to_json());
            }
        }
        Ok(())
    })
}

/// Checks a proof script. `system` is `"KH"` or `"KHi"`, or null to use
/// the script's header. A rejected proof returns `KH_STATUS_PROOF_ERROR`
/// with the offending line in the error message.
///
/// # Safety
/// `script` must be NUL-terminated; `system` NUL-terminated or null.
#[no_mangle]
pub unsafe extern "C" fn kh_prove(script: *const c_char, system: *const c_char) -> KhStatus {
    guard(|| {
        let system = if system.is_null() {
            None
        } else {
            Some(
                text(system)?
                    .parse::<System>()
                    .map_err(|e| Failure::new(KhStatus::ParseError, e))?,
            )
        };
        let script = parse_script(text(script)?, None, system).map_err(|e| Failure::new(KhStatus::ParseError, e))?;
        check_proof(&script).map_err(|e| Failure::new(KhStatus::ProofError, e))
    })
}
