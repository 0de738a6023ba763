use fncalc_core::foliation::delta_alfa_residual;
use fncalc_core::forms::{KForm, VectorField};
use fncalc_core::levi::{self, ComplexChart, Hypersurface};
use fncalc_core::sample;
use fncalc_core::scalar::{Monomial, Poly, Scalar};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn c2() -> ComplexChart {
    ComplexChart::standard(2).unwrap()
}

fn hyperplane(cc: &ComplexChart) -> Hypersurface {
    Hypersurface::new(cc, &cc.chart().parse("y2").unwrap()).unwrap()
}

/// A random polynomial in the leaf coordinates `x1, y1`.
fn leaf_poly(seed: u64) -> Scalar {
    let p = sample::poly(&mut sample::rng(seed), 2, 4, 4);
    let terms = p.terms().iter().map(|(m, q)| (Monomial::from_exponents(&[m.exp(0), m.exp(1), 0, 0]), q.clone()));
    Scalar::from_poly(Poly::from_terms(terms))
}

fn corpus(cc: &ComplexChart) -> Vec<Hypersurface> {
    [
        "y2",
        "x1^2 + y1^2 + x2^2 + y2^2 - 1",
        "y2 + x1^2",
        "y2 - x1^2 + y1^2",
        "x2 + x1*y1",
        "y1*x2 - x1*y2",
        "x1^2 + y1^2 - 4*x2^2 - 1",
    ]
    .iter()
    .map(|r| Hypersurface::new(cc, &cc.chart().parse(r).unwrap()).unwrap())
    .collect()
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn residual_is_leafwise_laplacian(seed in any::<u64>()) {
        let cc = c2();
        let h = hyperplane(&cc);
        let p = leaf_poly(seed);
        let (v, w) = (VectorField::coordinate(cc.chart(), 0), VectorField::coordinate(cc.chart(), 1));
        let res = levi::deformation_residual(&h, &p, &v, &w).unwrap();
        prop_assert!(res.warnings.is_empty());
        prop_assert_eq!(res.value, p.partial(0).partial(0).add(&p.partial(1).partial(1)));
    }

    #[test]
    fn first_order_deformation_composes(seed in any::<u64>()) {
        let cc = c2();
        let h = hyperplane(&cc);
        let k = levi::canonical_couple(&h).unwrap();
        let p = leaf_poly(seed);
        let alpha = levi::dgamma_dt(&h, &p);
        let y = k.x_field().scale(&alpha.eval_on(&[k.x_field()]).unwrap().neg());
        let d = delta_alfa_residual(&k.couple, &alpha, &y).unwrap();
        prop_assert!(d.compatibility.is_zero());
        let (v, w) = (VectorField::coordinate(cc.chart(), 0), VectorField::coordinate(cc.chart(), 1));
        let via_couple = d.residual.eval_on(&[&v, &w]).unwrap();
        prop_assert_eq!(via_couple.neg(), levi::deformation_residual(&h, &p, &v, &w).unwrap().value);
    }

    #[test]
    fn ddc_is_antisymmetric_and_linear(seed in any::<u64>()) {
        let cc = c2();
        let mut r = sample::rng(seed);
        let f = sample::polynomial(&mut r, cc.chart(), 3, 3);
        let g = sample::polynomial(&mut r, cc.chart(), 3, 3);
        let ddc = |s: &Scalar| cc.dc(s).d();
        prop_assert_eq!(ddc(&f.add(&g)), ddc(&f).add(&ddc(&g)));
        let (u, v) = (sample::vector_field(&mut r, cc.chart(), 1), sample::vector_field(&mut r, cc.chart(), 1));
        prop_assert_eq!(ddc(&f).eval_on(&[&u, &v]).unwrap(), ddc(&f).eval_on(&[&v, &u]).unwrap().neg());
        let jd = cc.j_form(&KForm::function(cc.chart(), f.clone()).d()).unwrap();
        prop_assert_eq!(cc.dc(&f), jd.neg());
    }
}

#[test]
fn ddc_normalization_on_squared_norm() {
    let cc = ComplexChart::standard(3).unwrap();
    let c = cc.chart();
    let f = c.parse("x1^2 + y1^2 + x2^2 + y2^2 + x3^2 + y3^2").unwrap();
    let kahler = (0..3).fold(KForm::zero(c, 2), |acc, i| acc.add(&KForm::dx(c, 2 * i).wedge(&KForm::dx(c, 2 * i + 1)).unwrap()));
    assert_eq!(cc.dc(&f).d(), kahler.scale_int(4));
}

#[test]
fn canonical_couple_normalization_on_corpus() {
    let cc = c2();
    for h in corpus(&cc) {
        let k = levi::canonical_couple(&h).unwrap();
        assert!(k.gamma().eval_on(&[k.x_field()]).unwrap().is_one());
        assert!(h.dr().eval_on(&[k.x_field()]).unwrap().is_zero());
        assert!(h.dr().eval_on(&[&k.z]).unwrap().is_one());
        assert!(k.warnings.is_empty());
    }
}

#[test]
fn flatness_checks_agree_on_corpus() {
    let cc = c2();
    let expected = [true, false, false, true, true, true, false];
    for (h, flat) in corpus(&cc).iter().zip(expected) {
        let rep = levi::is_levi_flat(h, 12, 5).unwrap();
        assert!(rep.agree(), "{}: {rep:?}", cc.chart().fmt_scalar(h.r()));
        assert_eq!(rep.flat(), flat, "{}", cc.chart().fmt_scalar(h.r()));
    }
}

#[test]
fn levi_matrix_of_the_sphere_is_the_identity() {
    let cc = c2();
    let m = cc.levi_form(&cc.chart().parse("x1^2 + y1^2 + x2^2 + y2^2 - 1").unwrap());
    assert_eq!(m.re, fncalc_core::linalg::identity(2));
    assert!(fncalc_core::linalg::is_zero(&m.im));
}
