use newton_series::arith::{gen_binomial, CompensatedSum, Interval};
use newton_series::convexity::test_order;
use newton_series::expr::{self, BinOp, Expr, Func};
use newton_series::finite_diff::{build_table, divided_difference};
use newton_series::newton::{self, taylor_eval, Certificate, EvalOptions, EvalStatus, Monotone};
use newton_series::registry::{self, from_expr};
use newton_series::sigma::f_np;
use newton_series::Real;
use proptest::prelude::*;

const BITS: u32 = 128;

fn r(v: f64) -> Real {
    Real::from_f64(v, BITS)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..1000, 0u32..100).prop_map(|(i, f)| Expr::Number(format!("{i}.{f:02}"))),
        Just(Expr::Var),
        Just(Expr::Pi),
        Just(Expr::EulerGamma),
    ]
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        let func = prop_oneof![Just(Func::Ln), Just(Func::Exp), Just(Func::Sin), Just(Func::Cos), Just(Func::Sqrt)];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (func, inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

fn same_value(a: &Result<Real, newton_series::Error>, b: &Result<Real, newton_series::Error>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => {
            if !x.is_finite() || !y.is_finite() {
                return x.to_f64().to_bits() == y.to_f64().to_bits() || (x.to_f64().is_nan() && y.to_f64().is_nan());
            }
            x == y
        }
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_parse_back_to_the_same_function(e in expr_tree(), x in 0.1f64..5.0) {
        let text = e.to_string();
        let back = expr::parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        let xr = r(x);
        prop_assert!(same_value(&e.evaluate(&xr, BITS), &back.evaluate(&xr, BITS)), "{text}");
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn decimal_round_trip(v in -1e12f64..1e12) {
        let x = r(v);
        let back = Real::parse(&x.to_decimal_string(), BITS).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn compensated_sum_matches_exact_rational_sum(values in prop::collection::vec(-1e6f64..1e6, 1..60)) {
        let mut sum = CompensatedSum::new(BITS);
        let mut exact = rug::Rational::new();
        for v in &values {
            sum.add(&r(*v));
            exact += rug::Rational::from_f64(*v).unwrap();
        }
        let exact = rug::Float::with_val(BITS, &exact);
        let err = (sum.value() - Real::from_float(exact.clone())).abs().to_f64();
        prop_assert!(err <= exact.to_f64().abs() * 1e-35 + 1e-30, "err {err}");
    }

    #[test]
    fn pascal_rule_between_adjacent_tables(a in 0.3f64..6.0, which in 0usize..3) {
        let f = [registry::recip(), registry::log(), registry::neg_exp()][which].clone();
        let here = build_table(&f, &r(a), 8, BITS).unwrap();
        let next = build_table(&f, &(r(a) + Real::one(BITS)), 7, BITS).unwrap();
        for k in 0..8 {
            let lhs = here.value(k + 1).clone();
            let rhs = next.value(k) - here.value(k);
            let scale = here.value(k).abs().to_f64().max(1e-300);
            prop_assert!((lhs - rhs).abs().to_f64() <= 1e-25 * scale.max(1.0), "k={k}");
        }
    }

    #[test]
    fn tables_scale_linearly(a in 0.3f64..6.0, c in -50.0f64..50.0) {
        let f = registry::log();
        let base = build_table(&f, &r(a), 10, BITS).unwrap();
        let scaled = build_table(&f.scaled(c), &r(a), 10, BITS).unwrap();
        for k in 0..=10 {
            let expected = base.value(k) * &r(c);
            let err = (scaled.value(k) - &expected).abs().to_f64();
            prop_assert!(err <= 1e-28 * (1.0 + expected.abs().to_f64()), "k={k} err={err}");
        }
    }

    #[test]
    fn divided_differences_ignore_node_order(
        nodes in prop::collection::btree_set(10u32..400, 2..7),
        seed in any::<u64>(),
    ) {
        let mut xs: Vec<Real> = nodes.iter().map(|&n| r(f64::from(n) / 37.0)).collect();
        let f = registry::neg_exp();
        let forward = divided_difference(&f, &xs, BITS).unwrap().value;
        let shift = (seed % xs.len() as u64) as usize;
        xs.rotate_left(shift);
        xs.reverse();
        let shuffled = divided_difference(&f, &xs, BITS).unwrap().value;
        let err = (&forward - &shuffled).abs().to_f64();
        prop_assert!(err <= 1e-25 * (1.0 + forward.abs().to_f64()), "err {err}");
    }

    #[test]
    fn reflection_flips_sign_at_even_orders(p in 0i32..5) {
        let f = registry::neg_exp();
        let window = Interval::closed(r(1.0), r(6.0)).unwrap();
        let here = test_order(&f, p, &window, 40, 1e-30, 7, BITS).unwrap().sign;
        let mirrored = test_order(&f.reflected(), p, &window.reflected(), 40, 1e-30, 7, BITS).unwrap().sign;
        let expected = if p % 2 == 0 { here.negated() } else { here };
        prop_assert_eq!(mirrored, expected);
    }

    #[test]
    fn bounded_remainder_covers_the_true_error(a in 0.8f64..4.0, x in 0.9f64..9.0) {
        prop_assume!((x - a).fract().abs() > 1e-3 && x - a > 0.0 || x < a);
        let f = registry::recip();
        let exp = newton::expand(&f, &r(a), 4000, BITS).unwrap();
        let opts = EvalOptions {
            tolerance: 1e-6,
            max_terms: 4001,
            certificate: Some(Certificate { q: 0, b: None }),
        };
        let rep = newton::eval(&exp, &r(x), &opts).unwrap();
        if let Some(bound) = rep.remainder_bound.as_ref() {
            let err = (&rep.value - &r(x).recip()).abs();
            prop_assert!(err <= *bound, "err {} > bound {}", err, bound);
        }
        if rep.status == EvalStatus::ConvergedBounded {
            prop_assert!((&rep.value - &r(x).recip()).abs().to_f64() <= 1e-6);
        }
    }

    #[test]
    fn anchor_shift_gives_the_same_value(a in 0.5f64..3.0, x in 0.6f64..8.0) {
        let f = registry::neg_exp();
        let opts = EvalOptions { tolerance: 1e-20, max_terms: 400, certificate: None };
        let here = newton::eval(&newton::expand(&f, &r(a), 399, BITS).unwrap(), &r(x), &opts).unwrap();
        let there = newton::eval(&newton::expand(&f, &r(a + 1.0), 399, BITS).unwrap(), &r(x), &opts).unwrap();
        prop_assert!((&here.value - &there.value).abs().to_f64() <= 1e-15);
    }

    #[test]
    fn polynomials_expand_exactly(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c3 in -5.0f64..5.0, a in 0.0f64..3.0, x in -4.0f64..6.0) {
        let text = format!("{c0} + {c1}*x + {c3}*x^3");
        let f = from_expr(expr::parse(&text).unwrap(), Interval::real_line());
        let exp = newton::expand(&f, &r(a), 12, BITS).unwrap();
        let opts = EvalOptions { tolerance: 1e-25, max_terms: 13, certificate: None };
        let rep = newton::eval(&exp, &r(x), &opts).unwrap();
        let direct = f.eval(&r(x), BITS).unwrap();
        prop_assert!((&rep.value - &direct).abs().to_f64() <= 1e-25, "{text}");
    }

    #[test]
    fn taylor_bound_covers_the_error(a in 1.0f64..4.0, frac in -0.9f64..0.9, n in 1usize..25) {
        let f = registry::recip();
        let b = a / 2.0 - 0.1;
        let x = a + frac * (a - b);
        let rep = taylor_eval(&f, &r(a), &r(x), n, 0, Monotone::Complete, Some(&r(b)), BITS).unwrap();
        let err = (&rep.partial_sum - &Real::from_f64(x, 512).recip()).abs();
        prop_assert!(err <= rep.bound, "err {} bound {}", err, rep.bound);
    }

    #[test]
    fn indefinite_sum_vanishes_at_one(p in 1usize..6, n in 2u64..300, which in 0usize..3) {
        let g = [registry::recip(), registry::log(), registry::log_over_x_neg()][which].clone();
        let v = f_np(&g, p, n, &r(1.0), BITS).unwrap();
        prop_assert!(v.abs().to_f64() <= 1e-30);
    }

    #[test]
    fn generalized_binomial_satisfies_pascal(x in -6.0f64..6.0, k in 1u64..30) {
        let xr = r(x);
        let lhs = gen_binomial(&(&xr + &Real::one(BITS)), k);
        let rhs = gen_binomial(&xr, k) + gen_binomial(&xr, k - 1);
        prop_assert!((&lhs - &rhs).abs().to_f64() <= 1e-25 * (1.0 + lhs.abs().to_f64()));
    }

    #[test]
    fn fn_spec_parser_round_trips(c in 0.0f64..9.0) {
        let spec = format!("power_base[c={c}]");
        let (name, params) = registry::parse_fn_spec(&spec).unwrap();
        prop_assert_eq!(name, "power_base");
        prop_assert_eq!(params.get("c").cloned(), Some(format!("{c}")));
        let handle = registry::lookup_spec(&spec).unwrap();
        prop_assert_eq!(handle.name(), spec);
    }
}
