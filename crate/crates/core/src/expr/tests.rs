use proptest::prelude::*;

use super::*;

fn p(s: &str, dim: usize) -> Expr {
    parse(s, dim).unwrap()
}

#[test]
fn parses_hyperbolic_conformal_factor() {
    let e = p("2/(1-(x1^2+x2^2))", 2);
    assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 2.0);
    assert!((e.eval(&[0.5, 0.0]).unwrap() - 8.0 / 3.0).abs() < 1e-15);
}

#[test]
fn parses_constants_and_carnot_data() {
    assert_eq!(p("0", 5).normalize(), Expr::zero());
    let a1 = p("x3^2*x5", 6);
    assert_eq!(a1.eval(&[1.0; 6]).unwrap(), 1.0);
    assert_eq!(a1.normalize(), Expr::var(3).powi(2).normalize() * Expr::var(5));
}

#[test]
fn precedence_and_associativity() {
    let x = [2.0, 3.0];
    assert_eq!(p("-x1^2", 2).eval(&x).unwrap(), -4.0);
    assert_eq!(p("2^3^2", 1).eval(&x).unwrap(), 512.0);
    assert_eq!(p("x1*x2/x1*x2", 2).eval(&x).unwrap(), 9.0);
    assert_eq!(p("x1 - x2 - x1", 2).eval(&x).unwrap(), -3.0);
    assert_eq!(p("2^-1", 1).eval(&x).unwrap(), 0.5);
    assert_eq!(p("-2*x1", 1).eval(&x).unwrap(), -4.0);
    assert_eq!(p("x_1 + x_2", 2).eval(&x).unwrap(), 5.0);
}

#[test]
fn scientific_literals_are_exact() {
    assert_eq!(p("1.5e-3", 1).normalize(), p("3/2000", 1).normalize());
    assert_eq!(p("2E2 + .5", 1).normalize(), p("401/2", 1).normalize());
}

#[test]
fn parse_errors() {
    assert!(matches!(parse("x3", 2), Err(ParseError::UnknownVariable { index: 3, .. })));
    assert!(matches!(parse("x0", 2), Err(ParseError::UnknownVariable { index: 0, .. })));
    assert!(matches!(parse("tan(x1)", 2), Err(ParseError::UnknownFunction { .. })));
    assert!(matches!(parse("y", 2), Err(ParseError::UnknownFunction { .. })));
    match parse("x1 + * x2", 2) {
        Err(ParseError::Syntax { position, .. }) => assert_eq!(position, 5),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse("(x1", 1), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse("x1 x1", 1), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse("", 1), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse("2e", 1), Err(ParseError::Syntax { .. })));
}

#[test]
fn heisenberg_bracket_constant() {
    let a1 = p("-2*x2", 3);
    let a2 = p("2*x1", 3);
    assert_eq!(a1.diff(2), Expr::int(-2));
    assert_eq!(a2.diff(1), Expr::int(2));
    let c12 = (a2.diff(1) - a1.diff(2)).normalize();
    assert_eq!(c12, Expr::int(4));
    assert!((a2.diff(1) - a1.diff(2) - Expr::int(4)).normalize().is_const_zero());
}

#[test]
fn derivative_rules() {
    assert_eq!(Expr::int(7).diff(1), Expr::zero());
    assert_eq!(p("x1*x2^2", 2).diff(2), p("2*x1*x2", 2).normalize());
    assert_eq!(p("ln(x1)", 1).diff(1), p("1/x1", 1).normalize());
    assert_eq!(p("sin(x1^2)", 1).diff(1), p("2*x1*cos(x1^2)", 1).normalize());
    assert_eq!(p("sqrt(x1)", 1).diff(1), p("1/(2*sqrt(x1))", 1).normalize());
    assert_eq!(p("exp(x1*x2)", 2).diff(2), p("x1*exp(x1*x2)", 2).normalize());
}

#[test]
fn domain_errors_name_the_subexpression() {
    let e = p("1 + ln(x1 - 1)", 1);
    let err = e.eval(&[0.5]).unwrap_err();
    assert_eq!(err.kind, DomainErrorKind::LogOfNonPositive);
    assert_eq!(err.subexpr, "ln(x1 - 1)");
    assert_eq!(p("1/x1", 1).eval(&[0.0]).unwrap_err().kind, DomainErrorKind::DivisionByZero);
    assert_eq!(p("sqrt(x1)", 1).eval(&[-1.0]).unwrap_err().kind, DomainErrorKind::SqrtOfNegative);
}

#[test]
fn display_round_trips_through_parse() {
    for src in ["-x1^2", "x1 - (x2 - x1)", "(1/3)*x1/(x2 + 1)", "2^(x1*x2)", "-(x1*x2)", "x1^-2"] {
        let e = p(src, 2);
        let back = p(&e.to_string(), 2);
        assert_eq!(back.normalize(), e.normalize(), "{src} printed as {e}");
    }
}

// ---- property tests -------------------------------------------------------

fn small_int() -> impl Strategy<Value = i64> {
    -4i64..=4
}

/// Random polynomial in `dim` variables: sum of up to 5 monomials.
pub(crate) fn polynomial(dim: usize) -> impl Strategy<Value = Expr> {
    let monomial = (small_int(), proptest::collection::vec(0u32..=3, dim));
    proptest::collection::vec(monomial, 1..5).prop_map(|terms| {
        Expr::sum(
            terms
                .into_iter()
                .map(|(c, exps)| {
                    let mut fs = vec![Expr::int(c)];
                    for (k, e) in exps.into_iter().enumerate() {
                        if e > 0 {
                            fs.push(Expr::var(k + 1).powi(e as i64));
                        }
                    }
                    Expr::product(fs)
                })
                .collect(),
        )
    })
}

/// Random smooth raw tree, safe to evaluate on [-1, 1]^dim.
fn smooth_tree(dim: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (1..=dim).prop_map(Expr::var),
        small_int().prop_map(Expr::int),
        (1i64..5, 1i64..5).prop_map(|(a, b)| Expr::int(a) / Expr::int(b)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Expr::product),
            inner.clone().prop_map(|e| -e),
            (inner.clone(), 0i64..4).prop_map(|(e, k)| e.powi(k)),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| a / (Expr::int(2) + b.powi(2))),
            inner.clone().prop_map(|e| e.sin()),
            inner.clone().prop_map(|e| e.cos()),
            inner.clone().prop_map(|e| (e.cos()).exp()),
            inner.prop_map(|e| (Expr::int(1) + e.powi(2)).sqrt()),
        ]
    })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_central_difference(e in polynomial(3), x in point(3), i in 1usize..=3) {
        let exact = e.diff(i).eval(&x).unwrap();
        let h = 1e-5 * x[i - 1].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i - 1] += h;
        xm[i - 1] -= h;
        let fd = (e.eval(&xp).unwrap() - e.eval(&xm).unwrap()) / (2.0 * h);
        prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0), "exact {exact} fd {fd}");
    }

    #[test]
    fn normalize_preserves_value(e in smooth_tree(3), pts in proptest::collection::vec(point(3), 100)) {
        let n = e.normalize();
        for x in &pts {
            let a = e.eval(x).unwrap();
            let b = n.eval(x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{e} -> {n}: {a} vs {b}");
        }
    }

    #[test]
    fn normalize_is_idempotent(e in smooth_tree(3)) {
        let once = e.normalize();
        prop_assert_eq!(once.normalize(), once);
    }

    #[test]
    fn print_parse_round_trip(e in smooth_tree(3)) {
        let printed = e.to_string();
        let back = parse(&printed, 3).unwrap();
        prop_assert_eq!(back.normalize(), e.normalize(), "printed: {}", printed);
    }

    #[test]
    fn polynomial_identities_are_certified(a in polynomial(2), b in polynomial(2)) {
        // (a+b)^2 - a^2 - 2ab - b^2 is identically zero
        let e = (&a + &b).powi(2) - a.powi(2) - Expr::int(2) * &a * &b - b.powi(2);
        prop_assert!(e.normalize().is_const_zero());
    }
}
