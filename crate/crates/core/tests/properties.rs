//! Property-based invariants of the expression layer and the
//! Poincare-Cartan contraction operators.

use std::collections::HashSet;

use noether_core::catalog::builtin;
use noether_core::expr::parse_expression;
use noether_core::geometry::{dpc_contract, FieldValue, PhasePoint};
use proptest::prelude::*;

fn parse2(src: &str) -> noether_core::Expression {
    parse_expression(src, 2, &HashSet::new()).unwrap()
}

/// Strategy producing syntactically valid expression sources over `n = 2`.
fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("t".to_string()),
        Just("q1".to_string()),
        Just("q2".to_string()),
        Just("p1".to_string()),
        Just("p2".to_string()),
        Just("pi".to_string()),
        (0u32..100).prop_map(|k| format!("{k}")),
        (1u32..20, 1u32..10).prop_map(|(a, b)| format!("{a}.{b}")),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just('+'), Just('-'), Just('*')])
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.prop_map(|a| format!("exp(({a}) * 0)")),
        ]
    })
}

fn small_field() -> impl Strategy<Value = FieldValue> {
    (
        -2.0..2.0f64,
        prop::collection::vec(-2.0..2.0f64, 2),
        prop::collection::vec(-2.0..2.0f64, 2),
    )
        .prop_map(|(tau, xi, eta)| FieldValue { tau, xi, eta })
}

fn sample_point() -> impl Strategy<Value = PhasePoint> {
    (
        -1.0..1.0f64,
        prop::collection::vec(0.5..2.0f64, 2),
        prop::collection::vec(-2.0..2.0f64, 2),
    )
        .prop_map(|(t, q, p)| PhasePoint::new(t, q, p))
}

proptest! {
    /// Printing a parsed expression and reparsing it yields the same tree.
    #[test]
    fn print_reparse_is_identity(src in expr_source()) {
        let e = parse2(&src);
        let printed = format!("{e}");
        let e2 = parse2(&printed);
        prop_assert_eq!(format!("{}", e2), printed);
    }

    /// `i_v d(alpha)` is linear in the field argument.
    #[test]
    fn dpc_contract_is_linear(
        v in small_field(),
        w in small_field(),
        a in -3.0..3.0f64,
        x in sample_point(),
    ) {
        let sys = builtin("kepler").unwrap().spec;
        let combined = v.scale(a).add(&w);
        let lhs = dpc_contract(&sys, &combined, &x).unwrap();
        let dv = dpc_contract(&sys, &v, &x).unwrap();
        let dw = dpc_contract(&sys, &w, &x).unwrap();
        let mut u = FieldValue::zero(2);
        for k in 0..5 {
            // probe the one-form on each coordinate direction
            let mut coords = vec![0.0; 5];
            coords[k] = 1.0;
            u = FieldValue::from_coords(&coords);
            let got = lhs.apply(&u);
            let want = a * dv.apply(&u) + dw.apply(&u);
            prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()),
                "direction {k}: {got} vs {want}");
        }
        let _ = u;
    }

    /// `d(alpha)(v, v) = 0`: contracting the two-form with the same field
    /// twice vanishes.
    #[test]
    fn dpc_contract_antisymmetric_diagonal(v in small_field(), x in sample_point()) {
        let sys = builtin("kepler").unwrap().spec;
        let form = dpc_contract(&sys, &v, &x).unwrap();
        let scale = 1.0 + form.max_norm() * (1.0 + v.max_norm());
        prop_assert!(form.apply(&v).abs() <= 1e-12 * scale);
    }
}
