//! Built-in systems with known first integrals, used as oracles throughout
//! the crate. Expressions are stored as grammar strings so the parser is
//! exercised by the catalog itself.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::geometry::{FieldValue, PhasePoint, SystemSpec};

/// Sampling box and guards attached to a catalog entry.
#[derive(Debug, Clone)]
pub struct SampleDomain {
    /// Uniform box for every coordinate `(t, q, p)`.
    pub lo: f64,
    pub hi: f64,
    /// Reject points with `|q| < min_radius` (singular potentials).
    pub min_radius: Option<f64>,
    /// Reject points with `|rho| <= min_rho`.
    pub min_rho: f64,
}

impl Default for SampleDomain {
    fn default() -> Self {
        SampleDomain { lo: -2.0, hi: 2.0, min_radius: None, min_rho: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub spec: SystemSpec,
    pub domain: SampleDomain,
    pub notes: String,
}

pub const BUILTIN_NAMES: [&str; 6] =
    ["free1d", "free2d", "harmonic", "kepler", "geodesic_flat_quadratic", "natural_shifted"];

/// Build a [`SystemSpec`] from grammar strings.
pub fn system_from_strings(
    n: usize,
    hamiltonian: &str,
    integrals: &[(&str, &str)],
    params: &BTreeMap<String, f64>,
) -> Result<SystemSpec> {
    let param_names: HashSet<String> = params.keys().cloned().collect();
    let h = parse_expression(hamiltonian, n, &param_names)?;
    let mut ints = BTreeMap::new();
    for (name, src) in integrals {
        ints.insert(name.to_string(), parse_expression(src, n, &param_names)?);
    }
    Ok(SystemSpec { n, hamiltonian: h, integrals: ints, beta: None, params: params.clone() })
}

pub fn builtin(name: &str) -> Result<CatalogEntry> {
    let mut params = BTreeMap::new();
    let (n, h, integrals, domain, notes): (usize, &str, Vec<(&str, &str)>, SampleDomain, &str) =
        match name {
            "free1d" => (
                1,
                "p1^2/2",
                vec![("p1", "p1"), ("H", "p1^2/2")],
                SampleDomain { min_rho: 1e-3, ..Default::default() },
                "free particle on a line; rho = p1^2/2",
            ),
            "free2d" => (
                2,
                "(p1^2+p2^2)/2",
                vec![
                    ("p1", "p1"),
                    ("p2", "p2"),
                    ("L", "q1*p2-q2*p1"),
                    ("H", "(p1^2+p2^2)/2"),
                ],
                SampleDomain::default(),
                "free particle in the plane",
            ),
            "harmonic" => (
                1,
                "(p1^2+q1^2)/2",
                vec![("H", "(p1^2+q1^2)/2")],
                SampleDomain::default(),
                "harmonic oscillator; rho = (p1^2-q1^2)/2 vanishes on the diagonals",
            ),
            "kepler" => {
                params.insert("mu".to_string(), 1.0);
                (
                    2,
                    "(p1^2+p2^2)/2 - mu/sqrt(q1^2+q2^2)",
                    vec![
                        ("H", "(p1^2+p2^2)/2 - mu/sqrt(q1^2+q2^2)"),
                        ("L", "q1*p2-q2*p1"),
                        ("A1", "q1*p2^2 - q2*p1*p2 - mu*q1/sqrt(q1^2+q2^2)"),
                        ("A2", "q2*p1^2 - q1*p1*p2 - mu*q2/sqrt(q1^2+q2^2)"),
                    ],
                    SampleDomain { min_radius: Some(0.1), min_rho: 1e-3, ..Default::default() },
                    "planar Kepler problem with angular momentum and Runge-Lenz integrals",
                )
            }
            "geodesic_flat_quadratic" => (
                2,
                "(p1^2+p2^2)/2",
                vec![("F", "p1^2/2"), ("H", "(p1^2+p2^2)/2")],
                SampleDomain::default(),
                "flat geodesic flow with a quadratic integral; rho = H",
            ),
            "natural_shifted" => {
                params.insert("c".to_string(), 2.0);
                (
                    1,
                    "(p1^2+q1^2)/2 - c",
                    vec![("H", "(p1^2+q1^2)/2 - c")],
                    SampleDomain { lo: -1.0, hi: 1.0, min_rho: 1e-3, ..Default::default() },
                    "oscillator with the potential shifted down by c; rho = T - V + c > 0 near the origin",
                )
            }
            other => return Err(Error::UnknownSystem(other.to_string())),
        };
    let spec = system_from_strings(n, h, &integrals, &params)?;
    Ok(CatalogEntry { name: name.to_string(), spec, domain, notes: notes.to_string() })
}

/// The explicit Kepler symmetry coefficients for the Runge-Lenz components,
/// evaluated verbatim; serves as the oracle against the inverse-Noether
/// construction.
pub fn kepler_reference_symmetry(
    k: usize,
    x: &PhasePoint,
    mu: f64,
    eps_rho: f64,
) -> Result<FieldValue> {
    assert!(k == 1 || k == 2, "k must be 1 or 2");
    let (q1, q2, p1, p2) = (x.q[0], x.q[1], x.p[0], x.p[1]);
    let r = (q1 * q1 + q2 * q2).sqrt();
    if r == 0.0 {
        return Err(Error::Domain {
            subtree: "sqrt(q1^2+q2^2)".to_string(),
            message: "reference symmetry undefined at the collision point".to_string(),
        });
    }
    let t_kin = 0.5 * (p1 * p1 + p2 * p2);
    let rho = t_kin + mu / r;
    if rho.abs() <= eps_rho {
        return Err(Error::ContactDegenerate { rho });
    }
    let r3 = r * r * r;
    if k == 1 {
        let tau = -(q1 * p2 * p2 - q2 * p1 * p2 + mu * q1 / r) / rho;
        let xi1 = tau * p1 - q2 * p2;
        let xi2 = tau * p2 + 2.0 * q1 * p2 - q2 * p1;
        let eta1 = -tau * mu * q1 / r3 - p2 * p2 - mu * q1 * q1 / r3 + mu / r;
        let eta2 = -tau * mu * q2 / r3 + p1 * p2 - mu * q1 * q2 / r3;
        Ok(FieldValue { tau, xi: vec![xi1, xi2], eta: vec![eta1, eta2] })
    } else {
        let tau = -(q2 * p1 * p1 - q1 * p1 * p2 + mu * q2 / r) / rho;
        let xi1 = tau * p1 + 2.0 * q2 * p1 - q1 * p2;
        let xi2 = tau * p2 - q1 * p1;
        let eta1 = -tau * mu * q1 / r3 + p1 * p2 - mu * q1 * q2 / r3;
        let eta2 = -tau * mu * q2 / r3 - p1 * p1 - mu * q2 * q2 / r3 + mu / r;
        Ok(FieldValue { tau, xi: vec![xi1, xi2], eta: vec![eta1, eta2] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{elementary_action, EPS_RHO};
    use crate::sample::sample_points;

    #[test]
    fn all_builtins_load() {
        for name in BUILTIN_NAMES {
            let entry = builtin(name).unwrap();
            assert_eq!(entry.name, name);
        }
        assert!(matches!(builtin("nope"), Err(Error::UnknownSystem(_))));
    }

    #[test]
    fn kepler_integral_sources() {
        let entry = builtin("kepler").unwrap();
        assert!(entry.spec.integrals.contains_key("A1"));
        assert_eq!(
            entry.spec.integral("A1").unwrap().source(),
            "q1*p2^2 - q2*p1*p2 - mu*q1/sqrt(q1^2+q2^2)"
        );
    }

    #[test]
    fn free1d_shape() {
        let entry = builtin("free1d").unwrap();
        assert_eq!(entry.spec.hamiltonian.source(), "p1^2/2");
        assert!(entry.spec.integrals.contains_key("p1"));
    }

    #[test]
    fn reference_symmetry_spot_values() {
        let x = PhasePoint::new(0.0, vec![1.0, 0.0], vec![0.0, 1.0]);
        let z1 = kepler_reference_symmetry(1, &x, 1.0, EPS_RHO).unwrap();
        let expect1 = [-4.0 / 3.0, 0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
        for (a, b) in z1.coords().iter().zip(expect1) {
            assert!((a - b).abs() < 1e-15, "zeta1 {a} vs {b}");
        }
        let z2 = kepler_reference_symmetry(2, &x, 1.0, EPS_RHO).unwrap();
        let expect2 = [0.0, -1.0, 0.0, 0.0, 1.0];
        for (a, b) in z2.coords().iter().zip(expect2) {
            assert!((a - b).abs() < 1e-15, "zeta2 {a} vs {b}");
        }
    }

    #[test]
    fn reference_symmetry_zero_numerator_gives_zero_tau() {
        // q1 = 0, p chosen so q1 p2^2 - q2 p1 p2 + mu q1/r = 0 with p2 = 0
        let x = PhasePoint::new(0.0, vec![0.0, 1.0], vec![0.5, 0.0]);
        let z = kepler_reference_symmetry(1, &x, 1.0, EPS_RHO).unwrap();
        assert_eq!(z.tau, 0.0);
    }

    #[test]
    fn natural_shifted_rho_positive_on_domain() {
        let entry = builtin("natural_shifted").unwrap();
        let pts = sample_points(&entry.spec, &entry.domain, 100, 11).unwrap();
        for x in &pts {
            assert!(elementary_action(&entry.spec, x).unwrap() > 0.0);
        }
    }

    #[test]
    fn builtin_integrals_are_integrals() {
        // |Z(F)| <= 1e-9 (1 + |F|) at 100 seeded points per entry
        for name in BUILTIN_NAMES {
            let entry = builtin(name).unwrap();
            let pts = sample_points(&entry.spec, &entry.domain, 100, 42).unwrap();
            for x in &pts {
                let z = crate::geometry::characteristic_field(&entry.spec, x).unwrap();
                for (iname, f) in &entry.spec.integrals {
                    let zf = crate::noether::directional_derivative(&entry.spec, f, &z, x).unwrap();
                    let fv = crate::expr::eval_jet(f, x, &entry.spec.params, 0).unwrap().value();
                    assert!(
                        zf.abs() <= 1e-9 * (1.0 + fv.abs()),
                        "{name}/{iname}: Z(F) = {zf} at {x:?}"
                    );
                }
            }
        }
    }
}
