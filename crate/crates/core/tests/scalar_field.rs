use fncalc_core::forms::Chart;
use fncalc_core::sample::{self, SampleRng};
use fncalc_core::scalar::{Rational, Scalar};
use proptest::prelude::*;

fn quotient(r: &mut SampleRng, c: &Chart) -> Scalar {
    let num = sample::polynomial(r, c, 3, 3);
    loop {
        let den = sample::polynomial(r, c, 2, 2);
        if !den.is_zero() {
            return num.div(&den).unwrap();
        }
    }
}

fn chart() -> Chart {
    Chart::new(&["x", "y", "z"]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ring_axioms(seed in any::<u64>()) {
        let c = chart();
        let mut r = sample::rng(seed);
        let (a, b, d) = (quotient(&mut r, &c), quotient(&mut r, &c), quotient(&mut r, &c));
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).add(&d), a.add(&b.add(&d)));
        prop_assert_eq!(a.mul(&b).mul(&d), a.mul(&b.mul(&d)));
        prop_assert_eq!(a.mul(&b.add(&d)), a.mul(&b).add(&a.mul(&d)));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn division_inverts_multiplication(seed in any::<u64>()) {
        let c = chart();
        let mut r = sample::rng(seed);
        let (a, b) = (quotient(&mut r, &c), quotient(&mut r, &c));
        prop_assume!(!b.is_zero());
        prop_assert_eq!(a.mul(&b).div(&b).unwrap(), a.clone());
        prop_assert!(b.mul(&b.recip().unwrap()).is_one());
    }

    #[test]
    fn partials_commute_and_obey_leibniz(seed in any::<u64>(), i in 0usize..3, j in 0usize..3) {
        let c = chart();
        let mut r = sample::rng(seed);
        let (a, b) = (quotient(&mut r, &c), quotient(&mut r, &c));
        prop_assert_eq!(a.partial(i).partial(j), a.partial(j).partial(i));
        prop_assert_eq!(a.mul(&b).partial(i), a.partial(i).mul(&b).add(&a.mul(&b.partial(i))));
    }

    #[test]
    fn evaluation_is_a_homomorphism(seed in any::<u64>(), p in proptest::collection::vec(-5i64..=5, 3)) {
        let c = chart();
        let mut r = sample::rng(seed);
        let (a, b) = (quotient(&mut r, &c), quotient(&mut r, &c));
        let point: Vec<Rational> = p.iter().map(|&v| Rational::from_integer(v.into())).collect();
        let (va, vb) = match (a.eval(&point), b.eval(&point)) {
            (Ok(va), Ok(vb)) => (va, vb),
            _ => return Ok(()),
        };
        prop_assert_eq!(a.add(&b).eval(&point).unwrap(), &va + &vb);
        prop_assert_eq!(a.mul(&b).eval(&point).unwrap(), &va * &vb);
    }

    #[test]
    fn parse_round_trips_display(seed in any::<u64>()) {
        let c = chart();
        let mut r = sample::rng(seed);
        let a = quotient(&mut r, &c);
        prop_assert_eq!(c.parse(&c.fmt_scalar(&a)).unwrap(), a);
    }
}

#[test]
fn cancellation_through_common_factors() {
    let c = chart();
    let a = c.parse("(x^2 - y^2)*(z + 1)").unwrap();
    let b = c.parse("(x + y)*(z + 1)^2").unwrap();
    assert_eq!(a.div(&b).unwrap(), c.parse("(x - y)/(z + 1)").unwrap());
}

#[test]
fn pole_is_reported() {
    let c = chart();
    let a = c.parse("1/(x - y)").unwrap();
    let one = Rational::from_integer(1.into());
    assert!(a.eval(&[one.clone(), one.clone(), one]).is_err());
}

#[test]
fn sums_with_rational_coefficients_stay_small() {
    let c = chart();
    let a = c.parse("2/3/(x*z + 2/3*y)").unwrap();
    let b = c.parse("-5/(x - z)").unwrap();
    let d = c.parse("-x*z/(x*y - 3)").unwrap();
    let s = a.add(&b).add(&d);
    assert_eq!(s.mul(&c.parse("(x*z + 2/3*y)*(x - z)*(x*y - 3)").unwrap()).denominator().total_degree(), 0);
    assert_eq!(s.sub(&d).sub(&b), a);
}
