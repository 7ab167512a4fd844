use crate::exprdsl::{ConfigError, ErrorKind, EvalError, Expr, RunConfig};

#[test]
fn canonical_forms() {
    let cases = [
        ("x^2 + z^2", "((x1 ^ 2.0) + (z ^ 2.0))"),
        ("-x - -y", "((-x1) - (-y1))"),
        ("sin(x)^2 + cos(x)^2", "((sin(x1) ^ 2.0) + (cos(x1) ^ 2.0))"),
        ("1.5e-3 * x2", "(0.0015 * x2)"),
        ("(((z)))", "z"),
        ("2^-x^2", "(2.0 ^ (-(x1 ^ 2.0)))"),
    ];
    for (src, canon) in cases {
        assert_eq!(Expr::parse(src).unwrap().to_string(), canon, "{src}");
    }
}

#[test]
fn parse_errors_carry_positions() {
    let cases: [(&str, usize); 7] = [("", 0), ("x +", 3), ("(x", 0), ("x)", 1), ("foo(x)", 0), ("x # y", 2), ("1.2.3", 3)];
    for (src, offset) in cases {
        let e = Expr::parse(src).unwrap_err();
        assert_eq!(e.offset, offset, "{src}: {e}");
    }
    assert_eq!(Expr::parse("").unwrap_err().kind, ErrorKind::Empty);
    assert!(matches!(Expr::parse("foo(x)").unwrap_err().kind, ErrorKind::UnknownIdentifier(_)));
    assert!(matches!(Expr::parse_for("y3", 2).unwrap_err().kind, ErrorKind::UnboundVariable { .. }));
}

#[test]
fn evaluation_domains() {
    let q = [0.0, -1.0, 2.0];
    let val = |s: &str| Expr::parse(s).unwrap().eval_checked(&q);
    assert!(matches!(val("log(y)"), Err(EvalError::Domain { .. })));
    assert!(matches!(val("sqrt(y)"), Err(EvalError::Domain { .. })));
    assert!(matches!(val("1 / x"), Err(EvalError::DivisionByZero { .. })));
    assert!(matches!(val("y ^ 0.5"), Err(EvalError::Power { .. })));
    assert_eq!(val("y ^ 3"), Ok(-1.0));
    assert_eq!(val("y ^ -2"), Ok(1.0));
    assert_eq!(val("exp(0) + z"), Ok(3.0));
}

#[test]
fn config_collects_every_error() {
    let err = RunConfig::from_json_str(r#"{"m": 0, "f": "x +", "level": "a", "bogus": 1, "tolerances": {"geometry": -1}}"#)
        .unwrap_err();
    let ConfigError::Invalid(fields) = err else { panic!("{err}") };
    let paths: Vec<&str> = fields.iter().map(|f| f.path.as_str()).collect();
    for p in ["$.m", "$.f", "$.level", "$.bogus", "$.tolerances.geometry"] {
        assert!(paths.contains(&p), "{p} missing from {paths:?}");
    }
}
