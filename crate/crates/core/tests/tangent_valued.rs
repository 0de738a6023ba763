use fncalc_core::forms::Chart;
use fncalc_core::sample;
use fncalc_core::vvform::VVForm;
use proptest::prelude::*;

fn chart() -> Chart {
    Chart::new(&["x", "y", "z"]).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn action_is_multiplicative(seed in any::<u64>(), p in 0usize..3, q in 0usize..2) {
        let c = chart();
        let mut r = sample::rng(seed);
        let phi = VVForm::identity(&c).add(&sample::nilpotent_endo(&mut r, &c, 2));
        let a = sample::form(&mut r, &c, p, 2);
        let b = sample::form(&mut r, &c, q, 2);
        let lhs = phi.act_on_form(&a.wedge(&b).unwrap()).unwrap();
        let rhs = phi.act_on_form(&a).unwrap().wedge(&phi.act_on_form(&b).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn action_matches_evaluation(seed in any::<u64>()) {
        let c = chart();
        let mut r = sample::rng(seed);
        let phi = sample::endo(&mut r, &c, 1);
        let s = sample::form(&mut r, &c, 2, 1);
        let (u, v) = (sample::vector_field(&mut r, &c, 1), sample::vector_field(&mut r, &c, 1));
        let pu = phi.apply(&[&u]).unwrap();
        let pv = phi.apply(&[&v]).unwrap();
        prop_assert_eq!(phi.act_on_form(&s).unwrap().eval_on(&[&u, &v]).unwrap(), s.eval_on(&[&pu, &pv]).unwrap());
    }

    #[test]
    fn composition_is_associative_with_unit(seed in any::<u64>(), k in 0usize..3) {
        let c = chart();
        let mut r = sample::rng(seed);
        let a = sample::endo(&mut r, &c, 1);
        let b = sample::endo(&mut r, &c, 1);
        let psi = sample::vvform(&mut r, &c, k, 2);
        prop_assert_eq!(a.compose(&b.compose(&psi).unwrap()).unwrap(), a.compose(&b).unwrap().compose(&psi).unwrap());
        prop_assert_eq!(VVForm::identity(&c).compose(&a).unwrap(), a.clone());
        prop_assert_eq!(a.compose(&VVForm::identity(&c)).unwrap(), a);
    }

    #[test]
    fn composition_evaluates_pointwise(seed in any::<u64>()) {
        let c = chart();
        let mut r = sample::rng(seed);
        let phi = sample::endo(&mut r, &c, 1);
        let psi = sample::vvform(&mut r, &c, 2, 1);
        let (u, v) = (sample::vector_field(&mut r, &c, 1), sample::vector_field(&mut r, &c, 1));
        let direct = phi.apply(&[&psi.apply(&[&u, &v]).unwrap()]).unwrap();
        prop_assert_eq!(phi.compose(&psi).unwrap().apply(&[&u, &v]).unwrap(), direct);
    }
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn insertion_product_is_composition(seed in any::<u64>()) {
        let c = chart();
        let mut r = sample::rng(seed);
        let psi = sample::vvform(&mut r, &c, 2, 2);
        let phi = sample::endo(&mut r, &c, 2);
        prop_assert_eq!(VVForm::i_product(&psi, &phi).unwrap(), phi.compose(&psi).unwrap());
    }
}
