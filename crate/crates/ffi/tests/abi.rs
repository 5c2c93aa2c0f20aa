//! Exercise the C ABI surface from Rust, including error paths.

use std::ffi::{c_char, CString};
use std::ptr;

use noether_ffi::*;

fn builtin(name: &str) -> *mut NoetherSystem {
    let cname = CString::new(name).unwrap();
    let mut sys: *mut NoetherSystem = ptr::null_mut();
    let rc = unsafe { noether_system_builtin(cname.as_ptr(), &mut sys) };
    assert_eq!(rc, NOETHER_OK);
    assert!(!sys.is_null());
    sys
}

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let len = unsafe { noether_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(len.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn builtin_lifecycle_and_eval() {
    let sys = builtin("kepler");
    let mut n = 0usize;
    assert_eq!(unsafe { noether_system_dof(sys, &mut n) }, NOETHER_OK);
    assert_eq!(n, 2);

    let x = [0.0, 1.0, 0.0, 0.0, 1.0];
    let mut h = 0.0;
    assert_eq!(unsafe { noether_hamiltonian(sys, x.as_ptr(), x.len(), &mut h) }, NOETHER_OK);
    assert!((h + 0.5).abs() < 1e-15);

    let mut rho = 0.0;
    assert_eq!(
        unsafe { noether_elementary_action(sys, x.as_ptr(), x.len(), &mut rho) },
        NOETHER_OK
    );
    assert!((rho - 1.5).abs() < 1e-15);

    let mut z = [0.0; 5];
    assert_eq!(
        unsafe { noether_characteristic_field(sys, x.as_ptr(), x.len(), z.as_mut_ptr()) },
        NOETHER_OK
    );
    assert_eq!(z[0], 1.0);
    assert!((z[2] - 1.0).abs() < 1e-15);
    assert!((z[3] + 1.0).abs() < 1e-15);

    unsafe { noether_system_free(sys) };
}

#[test]
fn derive_symmetry_matches_reference() {
    let sys = builtin("kepler");
    let name = CString::new("A1").unwrap();
    let x = [0.0, 1.0, 0.0, 0.0, 1.0];
    let mut zeta = [0.0; 5];
    let rc = unsafe {
        noether_derive_symmetry(sys, name.as_ptr(), x.as_ptr(), x.len(), 1e-9, zeta.as_mut_ptr())
    };
    assert_eq!(rc, NOETHER_OK);
    let want = [-4.0 / 3.0, 0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
    for (a, b) in zeta.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{zeta:?}");
    }

    let mut r = 1.0;
    assert_eq!(
        unsafe { noether_symmetry_residual(sys, name.as_ptr(), x.as_ptr(), x.len(), &mut r) },
        NOETHER_OK
    );
    assert!(r < 1e-12);

    // contraction recovers the integral value: A1 at x* is 1 - mu = 0
    let mut j = 1.0;
    assert_eq!(
        unsafe {
            noether_pc_contract(sys, x.as_ptr(), x.len(), zeta.as_ptr(), zeta.len(), &mut j)
        },
        NOETHER_OK
    );
    assert!(j.abs() < 1e-15);

    unsafe { noether_system_free(sys) };
}

#[test]
fn json_system_roundtrip() {
    let json = CString::new(
        r#"{"n":1,"hamiltonian":"p1^2/2 + q1^2/2","integrals":{"H":"p1^2/2 + q1^2/2"},"params":{}}"#,
    )
    .unwrap();
    let mut sys: *mut NoetherSystem = ptr::null_mut();
    assert_eq!(unsafe { noether_system_from_json(json.as_ptr(), &mut sys) }, NOETHER_OK);
    let x = [0.0, 1.0, 0.0];
    let mut h = 0.0;
    assert_eq!(unsafe { noether_hamiltonian(sys, x.as_ptr(), x.len(), &mut h) }, NOETHER_OK);
    assert!((h - 0.5).abs() < 1e-15);
    unsafe { noether_system_free(sys) };
}

#[test]
fn error_paths_set_codes_and_messages() {
    let mut sys: *mut NoetherSystem = ptr::null_mut();

    let bad = CString::new("no_such_system").unwrap();
    assert_eq!(
        unsafe { noether_system_builtin(bad.as_ptr(), &mut sys) },
        NOETHER_ERR_NAME
    );
    assert!(last_error().contains("no_such_system"));

    let bad_json = CString::new("{").unwrap();
    assert_eq!(
        unsafe { noether_system_from_json(bad_json.as_ptr(), &mut sys) },
        NOETHER_ERR_PARSE
    );

    assert_eq!(
        unsafe { noether_system_builtin(ptr::null(), &mut sys) },
        NOETHER_ERR_NULL
    );

    let sys = builtin("harmonic");
    let x = [0.0, 1.0, 0.0, 0.0, 1.0]; // five coords, but n = 1 needs three
    let mut h = 0.0;
    assert_eq!(
        unsafe { noether_hamiltonian(sys, x.as_ptr(), x.len(), &mut h) },
        NOETHER_ERR_DIM
    );
    assert!(last_error().contains("expected 3"));

    // rho = 0 at the diagonal: derivation must report contact degeneracy
    let name = CString::new("H").unwrap();
    let diag = [0.0, 1.0, 1.0];
    let mut zeta = [0.0; 3];
    assert_eq!(
        unsafe {
            noether_derive_symmetry(
                sys,
                name.as_ptr(),
                diag.as_ptr(),
                diag.len(),
                1e-9,
                zeta.as_mut_ptr(),
            )
        },
        NOETHER_ERR_EVAL
    );

    unsafe { noether_system_free(sys) };
    unsafe { noether_system_free(ptr::null_mut()) }; // no-op
}
