//! Property tests: jet ring laws, printer/parser round trips, 2-form projections.

use bachflat_core::exprlang::{parse, BinOp, Expr, Scope};
use bachflat_core::geometry::{hodge_star2, sd_asd_project, MetricJet, TwoForm};
use bachflat_core::jets::{coeff_count, Jet, JetFn, NVARS};
use proptest::prelude::*;

const ORDER: usize = 3;

fn jet() -> impl Strategy<Value = Jet> {
    prop::collection::vec(-1.0f64..1.0, coeff_count(ORDER)).prop_map(|c| Jet::from_coeffs(ORDER, c).unwrap())
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= tol)
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..5.0).prop_map(|v| Expr::Num((v * 100.0).round() / 100.0)),
        (0usize..NVARS).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, op)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][op];
                Expr::bin(op, a, b)
            }),
            (inner.clone(), 1u8..4).prop_map(|(e, k)| Expr::Pow(Box::new(e), k as f64)),
            inner.clone().prop_map(|e| Expr::Call(JetFn::Sin, Box::new(e))),
            inner.prop_map(|e| Expr::Call(JetFn::Atan, Box::new(e))),
        ]
    })
}

fn spd() -> impl Strategy<Value = [[f64; NVARS]; NVARS]> {
    prop::collection::vec(-0.3f64..0.3, NVARS * NVARS).prop_map(|v| {
        // I + AᵀA stays well conditioned
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let dot: f64 = (0..NVARS).map(|k| v[k * NVARS + i] * v[k * NVARS + j]).sum();
                dot + if i == j { 1.0 } else { 0.0 }
            })
        })
    })
}

fn two_form() -> impl Strategy<Value = TwoForm> {
    prop::collection::vec(-1.0f64..1.0, NVARS * NVARS).prop_map(|v| {
        let m = std::array::from_fn(|i| std::array::from_fn(|j| v[i * NVARS + j]));
        TwoForm::antisymmetrize(&m)
    })
}

fn constant_metric(g: &[[f64; NVARS]; NVARS]) -> MetricJet {
    let jets = std::array::from_fn(|i| std::array::from_fn(|j| Jet::constant(g[i][j], 1)));
    MetricJet::from_components(jets, [0.0; NVARS]).unwrap()
}

proptest! {
    #[test]
    fn jet_multiplication_is_commutative_and_associative(a in jet(), b in jet(), c in jet()) {
        prop_assert!(close(&(&a * &b), &(&b * &a), 1e-14));
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
    }

    #[test]
    fn jet_multiplication_distributes(a in jet(), b in jet(), c in jet()) {
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-13));
    }

    #[test]
    fn jet_reciprocal_inverts(mut a in jet(), v in 0.5f64..2.0) {
        let mut c = a.coeffs().to_vec();
        c[0] = v;
        a = Jet::from_coeffs(ORDER, c).unwrap();
        let one = &a * &a.recip().unwrap();
        prop_assert!(close(&one, &Jet::constant(1.0, ORDER), 1e-11));
    }

    #[test]
    fn log_inverts_exp(a in jet()) {
        let back = a.apply(JetFn::Exp).unwrap().apply(JetFn::Log).unwrap();
        prop_assert!(close(&back, &a, 1e-12));
    }

    #[test]
    fn printed_expressions_parse_back(e in expr(), p in prop::array::uniform4(-1.0f64..1.0)) {
        let scope = Scope::standard();
        let src = e.to_source(&scope);
        let back = parse(&src, &scope).unwrap();
        prop_assert_eq!(back.to_source(&scope), src.clone());
        let (x, y) = (e.eval(&p, &[]), back.eval(&p, &[]));
        prop_assert!(x == y || (x.is_nan() && y.is_nan()) || (x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{src}: {x} vs {y}");
    }

    #[test]
    fn hodge_star_is_an_involution_on_two_forms(g in spd(), phi in two_form()) {
        let m = constant_metric(&g);
        let twice = hodge_star2(&m, &hodge_star2(&m, &phi));
        prop_assert!(twice.sub(&phi).max_abs() < 1e-10);
    }

    #[test]
    fn projections_split_orthogonally(g in spd(), phi in two_form()) {
        let m = constant_metric(&g);
        let gi = m.g_inv_values();
        let (plus, minus) = sd_asd_project(&m, &phi);
        prop_assert!(plus.add(&minus).sub(&phi).max_abs() < 1e-12);
        prop_assert!(hodge_star2(&m, &plus).sub(&plus).max_abs() < 1e-10);
        prop_assert!(hodge_star2(&m, &minus).add(&minus).max_abs() < 1e-10);
        prop_assert!(plus.inner(&minus, &gi).abs() < 1e-10);
        let total = plus.norm_sq(&gi) + minus.norm_sq(&gi);
        prop_assert!((total - phi.norm_sq(&gi)).abs() < 1e-10 * (1.0 + total));
    }
}
