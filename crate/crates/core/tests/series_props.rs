use mirrorforge_core::series::{rat, PowerSeries, Rational, Var};
use proptest::prelude::*;

fn small_series(len: usize) -> impl Strategy<Value = PowerSeries> {
    prop::collection::vec((-20i64..20, 1i64..6), len).prop_map(|c| {
        PowerSeries::from_rationals(Var::SmallQ, c.into_iter().map(|(n, d)| rat(n, d)))
    })
}

fn unit_series(len: usize) -> impl Strategy<Value = PowerSeries> {
    small_series(len).prop_map(|s| {
        let mut s = s;
        s.set_coeff(0, Rational::from_integer(1.into()).into());
        s
    })
}

fn small_exponent() -> impl Strategy<Value = Rational> {
    (-6i64..7, 1i64..4).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_axioms(a in small_series(6), b in small_series(6), c in small_series(6)) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn qddq_is_a_derivation(a in small_series(7), b in small_series(7)) {
        let lhs = (&a * &b).qddq();
        let rhs = &(&a.qddq() * &b) + &(&a * &b.qddq());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn rational_powers_add(a in unit_series(6), e1 in small_exponent(), e2 in small_exponent()) {
        let lhs = a.pow_rational(&(&e1 + &e2)).unwrap();
        let rhs = &a.pow_rational(&e1).unwrap() * &a.pow_rational(&e2).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn reversion_is_two_sided(s in small_series(6), lin in 1i64..5) {
        let mut a = s;
        a.set_coeff(0, Rational::from_integer(0.into()).into());
        a.set_coeff(1, Rational::from_integer(lin.into()).into());
        let b = a.revert(Var::BigQ).unwrap();
        prop_assert_eq!(a.compose(&b).unwrap(), PowerSeries::identity(Var::BigQ, 5));
        let back = b.compose(&a).unwrap();
        prop_assert_eq!(back, PowerSeries::identity(Var::SmallQ, 5));
    }

    #[test]
    fn exp_inverts_log(a in unit_series(6)) {
        prop_assert_eq!(a.log().unwrap().exp().unwrap(), a);
    }
}
