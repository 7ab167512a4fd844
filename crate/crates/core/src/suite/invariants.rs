use proptest::prelude::*;
use crate::curvature::curvature_spaceform;
use crate::diffcalc::{Dual, Strategy as DiffStrategy};
use crate::exprdsl::{BinOp, Expr, Func, RunConfig, Var};
use crate::model::{Model, Point};
use crate::suite;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0..1e3f64).prop_map(Expr::Num),
        (1usize..3).prop_map(|i| Expr::Var(Var::X(i))),
        (1usize..3).prop_map(|i| Expr::Var(Var::Y(i))),
        Just(Expr::Var(Var::Z)),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        let func = prop_oneof![
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Tan),
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Sqrt)
        ];
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0..2.0f64, dim)
}

proptest! {
    #[test]
    fn display_round_trips(e in arb_expr()) {
        let text = e.to_string();
        prop_assert_eq!(Expr::parse(&text).unwrap(), e);
    }

    #[test]
    fn parser_never_panics(src in "\\PC{0,40}") {
        let _ = Expr::parse(&src);
    }

    #[test]
    fn parser_never_panics_on_token_soup(src in "[xyz0-9.e+*/^() ,-]{0,30}|(sin|cos|x1|y2|z|[()+^-]){0,12}") {
        if let Ok(e) = Expr::parse(&src) {
            let _ = e.eval_checked(&[0.1, 0.2, 0.3]);
        }
    }

    #[test]
    fn phi_squared_and_compatibility((m, q, u, v) in (1usize..4).prop_flat_map(|m| (Just(m), coords(2 * m + 1), coords(2 * m + 1), coords(2 * m + 1)))) {
        let model = Model::new(m).unwrap();
        let xi = model.xi::<f64>();
        let ppu = model.phi(&q, &model.phi(&q, &u));
        let eu = model.eta_of(&q, &u);
        for i in 0..u.len() {
            prop_assert!((ppu[i] - (-u[i] + eu * xi[i])).abs() <= 1e-12);
        }
        let lhs = model.inner(&q, &model.phi(&q, &u), &model.phi(&q, &v));
        let rhs = model.inner(&q, &u, &v) - eu * model.eta_of(&q, &v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        prop_assert!((model.eta_of(&q, &xi) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn spaceform_curvature_symmetries(q in coords(5), x in coords(5), y in coords(5), z in coords(5), w in coords(5), c in -5.0..5.0f64) {
        let model = Model::new(2).unwrap();
        let mut params = model.params();
        params.c = c;
        let p = Point::new(q.clone()).unwrap();
        let st = model.structure_at(&p).unwrap();
        let r = |a: &[f64], b: &[f64], d: &[f64]| curvature_spaceform(&params, a, b, d, &st);
        let g = |a: &[f64], b: &[f64]| model.inner(&q, a, b);
        let rxyz = r(&x, &y, &z);
        let ryxz = r(&y, &x, &z);
        for i in 0..5 {
            prop_assert!((rxyz[i] + ryxz[i]).abs() <= 1e-10);
        }
        prop_assert!((g(&rxyz, &w) + g(&r(&x, &y, &w), &z)).abs() <= 1e-10);
        prop_assert!((g(&rxyz, &w) - g(&r(&z, &w, &x), &y)).abs() <= 1e-10);
        let b = add3(&rxyz, &r(&y, &z, &x), &r(&z, &x, &y));
        prop_assert!(b.iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn dual_and_jet_agree(q in coords(3), dir in coords(3)) {
        let e = Expr::parse("sin(x)*exp(y) + z^2/(1 + x^2) - cos(x*y*z)").unwrap();
        let seeded: Vec<Dual<f64>> = q.iter().zip(&dir).map(|(&a, &d)| Dual::new(a, d)).collect();
        let d = e.eval_checked(&seeded).unwrap().du;
        let jet = e.eval_jet(&Point::new(q).unwrap(), &dir, 2).unwrap();
        prop_assert!((jet.derivative(1) - d).abs() <= 1e-12 * (1.0 + d.abs()));
    }
}

fn add3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter().zip(b).zip(c).map(|((a, b), c)| a + b + c).collect()
}

#[test]
fn reports_are_deterministic_per_seed() {
    let cfg = RunConfig::from_json_str(r#"{"m": 2, "f": "x1^2 + 0.5*y2^2 + 0.2*x2", "level": 1, "samples": 6}"#).unwrap();
    let a = suite::surface::run(&cfg).deterministic_json();
    let b = suite::surface::run(&cfg).deterministic_json();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(a, suite::surface::run(&other).deterministic_json());
}

#[test]
fn fd_strategy_tracks_jet_on_geometry() {
    let mut cfg = RunConfig::from_json_str(r#"{"m": 1, "f": "x^2 + 2*y^2 + 0.3*x", "level": 1, "samples": 6}"#).unwrap();
    let jet = suite::surface::run(&cfg);
    cfg.set_strategy(DiffStrategy::Fd);
    let fd = suite::surface::run(&cfg);
    assert_eq!(fd.exit_code(), 0, "{}", fd.to_table());
    let h = |r: &crate::report::ResidualReport| r.check("mean_curvature_abs").unwrap().max;
    assert!((h(&jet) - h(&fd)).abs() < 1e-6);
}
