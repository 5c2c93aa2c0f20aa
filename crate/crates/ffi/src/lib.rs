//! C ABI for the noether-core library.
//!
//! All functions return a status code; `0` means success. Rich error text
//! for the most recent failure on the calling thread is available through
//! [`noether_last_error`]. Systems are passed around as opaque handles
//! created by `noether_system_builtin` / `noether_system_from_json` and
//! released with `noether_system_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::ptr;

use noether_core::catalog;
use noether_core::cli::SystemFile;
use noether_core::geometry::{characteristic_field, elementary_action, pc_contract};
use noether_core::noether::{inverse_noether, symmetry_residuals, SymmetryCandidate};
use noether_core::{Error, PhasePoint, SystemSpec};

/// Success.
pub const NOETHER_OK: c_int = 0;
/// A pointer argument was null.
pub const NOETHER_ERR_NULL: c_int = 1;
/// A string argument was not valid UTF-8.
pub const NOETHER_ERR_UTF8: c_int = 2;
/// Parse or configuration failure; see `noether_last_error`.
pub const NOETHER_ERR_PARSE: c_int = 3;
/// Unknown builtin system or integral name.
pub const NOETHER_ERR_NAME: c_int = 4;
/// The coordinate buffer length does not match `2n + 1`.
pub const NOETHER_ERR_DIM: c_int = 5;
/// Evaluation failed (singular point, contact degeneracy, math domain).
pub const NOETHER_ERR_EVAL: c_int = 6;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn code_for(err: &Error) -> c_int {
    match err {
        Error::Syntax { .. }
        | Error::IndexOutOfRange { .. }
        | Error::UnknownIdentifier { .. }
        | Error::MissingParameter { .. }
        | Error::InvalidConfig(_)
        | Error::Io(_)
        | Error::Sampling(_) => NOETHER_ERR_PARSE,
        Error::UnknownSystem(_) => NOETHER_ERR_NAME,
        Error::DimensionMismatch { .. } => NOETHER_ERR_DIM,
        Error::Domain { .. } | Error::ContactDegenerate { .. } => NOETHER_ERR_EVAL,
    }
}

fn fail(err: Error) -> c_int {
    set_error(&err.to_string());
    code_for(&err)
}

/// Opaque handle to a compiled Hamiltonian system.
pub struct NoetherSystem {
    spec: SystemSpec,
}

unsafe fn cstr<'a>(p: *const c_char) -> Result<&'a str, c_int> {
    if p.is_null() {
        set_error("null string argument");
        return Err(NOETHER_ERR_NULL);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        NOETHER_ERR_UTF8
    })
}

unsafe fn handle<'a>(p: *const NoetherSystem) -> Result<&'a SystemSpec, c_int> {
    if p.is_null() {
        set_error("null system handle");
        return Err(NOETHER_ERR_NULL);
    }
    Ok(&(*p).spec)
}

unsafe fn point(
    spec: &SystemSpec,
    coords: *const f64,
    len: usize,
) -> Result<PhasePoint, c_int> {
    if coords.is_null() {
        set_error("null coordinate buffer");
        return Err(NOETHER_ERR_NULL);
    }
    let expected = 2 * spec.n + 1;
    if len != expected {
        set_error(&format!("coordinate buffer has length {len}, expected {expected}"));
        return Err(NOETHER_ERR_DIM);
    }
    let slice = std::slice::from_raw_parts(coords, len);
    PhasePoint::from_coords(slice).map_err(|e| fail(e))
}

fn emit_system(spec: SystemSpec, out: *mut *mut NoetherSystem) -> c_int {
    if out.is_null() {
        set_error("null output pointer");
        return NOETHER_ERR_NULL;
    }
    let boxed = Box::new(NoetherSystem { spec });
    unsafe { *out = Box::into_raw(boxed) };
    NOETHER_OK
}

/// Create a system from the builtin catalog. `name` is one of the strings
/// reported by `noether catalog --list`.
#[no_mangle]
pub unsafe extern "C" fn noether_system_builtin(
    name: *const c_char,
    out: *mut *mut NoetherSystem,
) -> c_int {
    let name = match cstr(name) {
        Ok(s) => s,
        Err(c) => return c,
    };
    match catalog::builtin(name) {
        Ok(entry) => emit_system(entry.spec, out),
        Err(e) => fail(e),
    }
}

/// Create a system from a JSON spec string (same schema as the CLI's
/// `--system` file argument).
#[no_mangle]
pub unsafe extern "C" fn noether_system_from_json(
    json: *const c_char,
    out: *mut *mut NoetherSystem,
) -> c_int {
    let text = match cstr(json) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let file: SystemFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            set_error(&format!("bad system JSON: {e}"));
            return NOETHER_ERR_PARSE;
        }
    };
    match file.compile() {
        Ok(spec) => emit_system(spec, out),
        Err(e) => fail(e),
    }
}

/// Release a system handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn noether_system_free(sys: *mut NoetherSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of degrees of freedom `n`; coordinate buffers have length `2n+1`
/// in the order `t, q1..qn, p1..pn`.
#[no_mangle]
pub unsafe extern "C" fn noether_system_dof(sys: *const NoetherSystem, out: *mut usize) -> c_int {
    let spec = match handle(sys) {
        Ok(s) => s,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("null output pointer");
        return NOETHER_ERR_NULL;
    }
    *out = spec.n;
    NOETHER_OK
}

/// Evaluate the Hamiltonian at a point.
#[no_mangle]
pub unsafe extern "C" fn noether_hamiltonian(
    sys: *const NoetherSystem,
    coords: *const f64,
    len: usize,
    out: *mut f64,
) -> c_int {
    scalar_eval(sys, coords, len, out, |spec, x| {
        Ok(spec.hamiltonian_jet(x, 0)?.value())
    })
}

/// Evaluate the elementary action `rho = p . dH/dp - H` at a point.
#[no_mangle]
pub unsafe extern "C" fn noether_elementary_action(
    sys: *const NoetherSystem,
    coords: *const f64,
    len: usize,
    out: *mut f64,
) -> c_int {
    scalar_eval(sys, coords, len, out, elementary_action)
}

unsafe fn scalar_eval(
    sys: *const NoetherSystem,
    coords: *const f64,
    len: usize,
    out: *mut f64,
    f: impl Fn(&SystemSpec, &PhasePoint) -> noether_core::Result<f64>,
) -> c_int {
    let spec = match handle(sys) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let x = match point(spec, coords, len) {
        Ok(x) => x,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("null output pointer");
        return NOETHER_ERR_NULL;
    }
    match f(spec, &x) {
        Ok(v) => {
            *out = v;
            NOETHER_OK
        }
        Err(e) => fail(e),
    }
}

unsafe fn field_eval(
    sys: *const NoetherSystem,
    coords: *const f64,
    len: usize,
    out: *mut f64,
    f: impl Fn(&SystemSpec, &PhasePoint) -> noether_core::Result<Vec<f64>>,
) -> c_int {
    let spec = match handle(sys) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let x = match point(spec, coords, len) {
        Ok(x) => x,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("null output pointer");
        return NOETHER_ERR_NULL;
    }
    match f(spec, &x) {
        Ok(v) => {
            ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
            NOETHER_OK
        }
        Err(e) => fail(e),
    }
}

/// Evaluate the characteristic field `Z = (1, dH/dp, -dH/dq)` into a buffer
/// of length `2n+1` (components ordered `tau, xi1..xin, eta1..etan`).
#[no_mangle]
pub unsafe extern "C" fn noether_characteristic_field(
    sys: *const NoetherSystem,
    coords: *const f64,
    len: usize,
    out: *mut f64,
) -> c_int {
    field_eval(sys, coords, len, out, |spec, x| {
        Ok(characteristic_field(spec, x)?.coords())
    })
}

/// Derive the Noether symmetry of the named integral at a point. The output
/// buffer must have length `2n+1` (`tau, xi1..xin, eta1..etan`).
#[no_mangle]
pub unsafe extern "C" fn noether_derive_symmetry(
    sys: *const NoetherSystem,
    integral: *const c_char,
    coords: *const f64,
    len: usize,
    eps_rho: f64,
    out: *mut f64,
) -> c_int {
    let name = match cstr(integral) {
        Ok(s) => s,
        Err(c) => return c,
    };
    field_eval(sys, coords, len, out, |spec, x| {
        let f = spec.integral(name)?;
        Ok(inverse_noether(spec, f, x, eps_rho)?.coords())
    })
}

/// Maximum relative residual of the symmetry conditions for the symmetry
/// derived from the named integral, evaluated at a point.
#[no_mangle]
pub unsafe extern "C" fn noether_symmetry_residual(
    sys: *const NoetherSystem,
    integral: *const c_char,
    coords: *const f64,
    len: usize,
    out: *mut f64,
) -> c_int {
    let name = match cstr(integral) {
        Ok(s) => s,
        Err(c) => return c,
    };
    scalar_eval(sys, coords, len, out, |spec, x| {
        let zeta = SymmetryCandidate::derived(spec.integral(name)?.clone());
        Ok(symmetry_residuals(spec, &zeta, x)?.max_rel)
    })
}

/// Contraction `i_v alpha` of the Poincare-Cartan form with a field given
/// as a `2n+1` component buffer.
#[no_mangle]
pub unsafe extern "C" fn noether_pc_contract(
    sys: *const NoetherSystem,
    coords: *const f64,
    len: usize,
    field: *const f64,
    field_len: usize,
    out: *mut f64,
) -> c_int {
    let spec = match handle(sys) {
        Ok(s) => s,
        Err(c) => return c,
    };
    if field.is_null() {
        set_error("null field buffer");
        return NOETHER_ERR_NULL;
    }
    if field_len != 2 * spec.n + 1 {
        set_error(&format!(
            "field buffer has length {field_len}, expected {}",
            2 * spec.n + 1
        ));
        return NOETHER_ERR_DIM;
    }
    let v = noether_core::FieldValue::from_coords(std::slice::from_raw_parts(field, field_len));
    scalar_eval(sys, coords, len, out, move |spec, x| pc_contract(spec, &v, x))
}

/// Copy the most recent error message on this thread into `buf` (truncated
/// to `cap - 1` bytes, always NUL-terminated when `cap > 0`). Returns the
/// full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn noether_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let k = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}
