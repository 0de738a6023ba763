//! Distributions, integrability, and codimension-one defining couples.
//!
//! All linear algebra is generic: spans and ranks are taken over the field
//! of rational functions, so degeneracy loci are invisible here.

use crate::error::{Error, Result};
use crate::forms::{Chart, KForm, VectorField};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;
use crate::vvform::VVForm;
use crate::dgla::fn_bracket;

fn rows(fields: &[VectorField]) -> Matrix {
    fields.iter().map(|v| v.comps().to_vec()).collect()
}

/// Generic rank of a family of vector fields.
pub fn generic_rank(fields: &[VectorField]) -> usize {
    if fields.is_empty() {
        return 0;
    }
    linalg::rank(&rows(fields))
}

fn in_span(generators: &[VectorField], rank: usize, v: &VectorField) -> bool {
    if v.is_zero() {
        return true;
    }
    let mut all = generators.to_vec();
    all.push(v.clone());
    generic_rank(&all) == rank
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    chart: Chart,
    generators: Vec<VectorField>,
}

impl Distribution {
    pub fn new(chart: &Chart, generators: Vec<VectorField>) -> Result<Self> {
        if generators.iter().any(|v| v.chart() != chart) {
            return Err(Error::ChartMismatch);
        }
        let rank = generic_rank(&generators);
        if rank < generators.len() {
            return Err(Error::RankDeficient { rank, count: generators.len() });
        }
        Ok(Distribution { chart: chart.clone(), generators })
    }

    /// `ker γ` for a nonzero 1-form.
    pub fn kernel_of(gamma: &KForm) -> Result<Self> {
        if gamma.degree() != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: gamma.degree() as i32 });
        }
        let chart = gamma.chart();
        let row = vec![(0..chart.dim()).map(|i| gamma.coeff(&[i])).collect::<Vec<_>>()];
        let gens = linalg::nullspace(&row, chart.dim())
            .into_iter()
            .map(|v| VectorField::new(chart, v))
            .collect::<Result<_>>()?;
        Self::new(chart, gens)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn contains(&self, v: &VectorField) -> bool {
        in_span(&self.generators, self.dim(), v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Integrability {
    pub integrable: bool,
    /// Generator indices and their bracket when it leaves the span.
    pub witness: Option<(usize, usize, VectorField)>,
}

/// Frobenius: every bracket of generators stays in the span.
pub fn is_integrable(xi: &Distribution) -> Result<Integrability> {
    let g = xi.generators();
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            let b = g[i].lie_bracket(&g[j])?;
            if !xi.contains(&b) {
                return Ok(Integrability { integrable: false, witness: Some((i, j, b)) });
            }
        }
    }
    Ok(Integrability { integrable: true, witness: None })
}

/// The smallest involutive distribution containing `ξ`.
pub fn xi_star(xi: &Distribution, cap: usize) -> Result<Distribution> {
    let mut gens = xi.generators().to_vec();
    for _ in 0..cap {
        let mut added = false;
        let snapshot = gens.clone();
        for i in 0..snapshot.len() {
            for j in i + 1..snapshot.len() {
                let b = snapshot[i].lie_bracket(&snapshot[j])?;
                if !in_span(&gens, gens.len(), &b) {
                    gens.push(b);
                    added = true;
                }
            }
        }
        if !added {
            return Distribution::new(xi.chart(), gens);
        }
    }
    Err(Error::ClosureNotStabilized { cap, rank: gens.len() })
}

fn frame_matrix(frame: &[VectorField]) -> Matrix {
    linalg::transpose(&rows(frame))
}

/// Endomorphism `B D B⁻¹` where `B` has the frame as columns.
fn endo_in_frame(chart: &Chart, frame: &[VectorField], d: &Matrix) -> Result<VVForm> {
    let b = frame_matrix(frame);
    let det = linalg::determinant(&b);
    if det.is_zero() {
        return Err(Error::NotDirectSum { det: chart.fmt_scalar(&det) });
    }
    let inv = linalg::inverse(&b).ok_or(Error::NotInvertible)?;
    VVForm::from_endo_matrix(chart, &linalg::matmul(&linalg::matmul(&b, d), &inv))
}

/// Projection onto `ζ` along `ξ`.
pub fn projection_endo(xi: &Distribution, zeta: &Distribution) -> Result<VVForm> {
    let chart = xi.chart();
    if zeta.chart() != chart {
        return Err(Error::ChartMismatch);
    }
    let n = chart.dim();
    if xi.dim() + zeta.dim() != n {
        return Err(Error::NotDirectSum { det: "0".into() });
    }
    let mut frame = xi.generators().to_vec();
    frame.extend_from_slice(zeta.generators());
    let mut d = linalg::zeros(n, n);
    for (i, row) in d.iter_mut().enumerate().skip(xi.dim()) {
        row[i] = Scalar::one();
    }
    endo_in_frame(chart, &frame, &d)
}

/// `⌈d/s⌉`, the nilpotency index of the shift by `s` on a `d`-dimensional flag.
pub fn min_nilpotent_index(d: usize, s: usize) -> usize {
    assert!(s >= 1 && s <= d, "need 1 ≤ s ≤ d");
    d.div_ceil(s)
}

/// The `d × d` shift `e_i ↦ e_{i-s}`, `e_i ↦ 0` for `i ≤ s`.
pub fn canonical_shift(d: usize, s: usize) -> Matrix {
    let mut k = linalg::zeros(d, d);
    for i in s..d {
        k[i - s][i] = Scalar::one();
    }
    k
}

/// Least `m ≥ 1` with `K^m = 0`, if within `bound`.
pub fn nilpotency_index(k: &Matrix, bound: usize) -> Option<usize> {
    let mut p = k.clone();
    for m in 1..=bound {
        if linalg::is_zero(&p) {
            return Some(m);
        }
        p = linalg::matmul(&p, k);
    }
    None
}

#[derive(Clone, Debug)]
pub struct Flag {
    pub frame: Vec<VectorField>,
    pub s: usize,
    pub d: usize,
    pub k: VVForm,
    pub phi: VVForm,
    pub r: usize,
}

/// `Φ = K` on `τ = span(X_1..X_d)` and `Φ = Id` on `ζ = span(X_{d+1}..X_n)`,
/// with `K X_i = 0` for `i ≤ s` and `K X_i = X_{i-s}` otherwise.
pub fn flag_endo(frame: &[VectorField], s: usize, d: usize) -> Result<Flag> {
    let chart = frame.first().ok_or_else(|| Error::Precondition("empty frame".into()))?.chart().clone();
    let n = chart.dim();
    if frame.len() != n {
        return Err(Error::ArityMismatch { expected: n, found: frame.len() });
    }
    if !(1 <= s && s <= d && d <= n) {
        return Err(Error::Precondition(format!("need 1 ≤ s ≤ d ≤ n, got s = {s}, d = {d}")));
    }
    let mut km = linalg::zeros(n, n);
    for (i, row) in canonical_shift(d, s).into_iter().enumerate() {
        km[i][..d].clone_from_slice(&row);
    }
    let mut pm = km.clone();
    for (i, row) in pm.iter_mut().enumerate().skip(d) {
        row[i] = Scalar::one();
    }
    let k = endo_in_frame(&chart, frame, &km).map_err(|_| Error::NotInvertible)?;
    let phi = endo_in_frame(&chart, frame, &pm).map_err(|_| Error::NotInvertible)?;
    Ok(Flag { frame: frame.to_vec(), s, d, k, phi, r: min_nilpotent_index(d, s) })
}

/// A 1-form and a vector field with `γ(X) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefiningCouple {
    gamma: KForm,
    x: VectorField,
}

impl DefiningCouple {
    pub fn new(gamma: &KForm, x: &VectorField) -> Result<Self> {
        if gamma.chart() != x.chart() {
            return Err(Error::ChartMismatch);
        }
        if gamma.degree() != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: gamma.degree() as i32 });
        }
        let v = gamma.eval_on(&[x])?;
        if !v.is_one() {
            return Err(Error::Precondition(format!("γ(X) = {} instead of 1", x.chart().fmt_scalar(&v))));
        }
        Ok(DefiningCouple { gamma: gamma.clone(), x: x.clone() })
    }

    pub fn gamma(&self) -> &KForm {
        &self.gamma
    }

    pub fn x_field(&self) -> &VectorField {
        &self.x
    }
}

/// `dγ + ι_X dγ ∧ γ`, zero exactly when `ker γ` is integrable.
pub fn frobenius_obstruction(couple: &DefiningCouple) -> Result<KForm> {
    let dg = couple.gamma.d();
    Ok(dg.add(&dg.contract(&couple.x)?.wedge(&couple.gamma)?))
}

pub fn frobenius_form_test(couple: &DefiningCouple) -> Result<bool> {
    Ok(frobenius_obstruction(couple)?.is_zero())
}

/// `γ ⊗ X`, i.e. `V ↦ γ(V) X`.
pub fn couple_to_endo(couple: &DefiningCouple) -> Result<VVForm> {
    VVForm::decomposable(&couple.gamma, &couple.x)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobeniusReport {
    /// `ker γ` closed under brackets.
    pub involutive: bool,
    /// `dγ = -ι_X dγ ∧ γ`.
    pub form_test: bool,
    /// `[γ⊗X, γ⊗X] = 0`.
    pub bracket_test: bool,
}

impl FrobeniusReport {
    pub fn consistent(&self) -> bool {
        self.involutive == self.form_test && self.form_test == self.bracket_test
    }
}

pub fn frobenius_report(couple: &DefiningCouple) -> Result<FrobeniusReport> {
    let involutive = is_integrable(&Distribution::kernel_of(&couple.gamma)?)?.integrable;
    let phi = couple_to_endo(couple)?;
    Ok(FrobeniusReport {
        involutive,
        form_test: frobenius_form_test(couple)?,
        bracket_test: fn_bracket(&phi, &phi)?.is_zero(),
    })
}

/// `{α,β} = L_Xα ∧ β - α ∧ L_Xβ`.
pub fn kodaira_bracket(x: &VectorField, alpha: &KForm, beta: &KForm) -> Result<KForm> {
    Ok(alpha.lie_derivative(x)?.wedge(beta)?.sub(&alpha.wedge(&beta.lie_derivative(x)?)?))
}

/// `δ = d + {γ, ·}`.
pub fn delta(couple: &DefiningCouple, alpha: &KForm) -> Result<KForm> {
    Ok(alpha.d().add(&kodaira_bracket(&couple.x, &couple.gamma, alpha)?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaAlfa {
    /// `δα + L_Yγ ∧ γ`.
    pub residual: KForm,
    /// `α(X) + γ(Y)`, zero for first-order data of a defining family.
    pub compatibility: Scalar,
}

pub fn delta_alfa_residual(couple: &DefiningCouple, alpha: &KForm, y: &VectorField) -> Result<DeltaAlfa> {
    if alpha.degree() != 1 {
        return Err(Error::DegreeMismatch { expected: 1, found: alpha.degree() as i32 });
    }
    let lyg = couple.gamma.lie_derivative(y)?.wedge(&couple.gamma)?;
    Ok(DeltaAlfa {
        residual: delta(couple, alpha)?.add(&lyg),
        compatibility: alpha.eval_on(&[&couple.x])?.add(&couple.gamma.eval_on(&[y])?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{finite_type, TypeValue};
    use crate::sample;

    fn r3() -> Chart {
        Chart::new(&["x", "y", "z"]).unwrap()
    }

    fn vf(c: &Chart, comps: &[&str]) -> VectorField {
        VectorField::parse(c, comps).unwrap()
    }

    fn one_form(c: &Chart, terms: &[(usize, &str)]) -> KForm {
        KForm::from_terms(c, 1, terms.iter().map(|(i, s)| (vec![*i], c.parse(s).unwrap()))).unwrap()
    }

    fn heisenberg(c: &Chart) -> Distribution {
        Distribution::new(c, vec![vf(c, &["1", "0", "0"]), vf(c, &["0", "1", "x"])]).unwrap()
    }

    #[test]
    fn integrability_examples() {
        let c = r3();
        let flat = Distribution::new(&c, vec![vf(&c, &["1", "0", "0"]), vf(&c, &["0", "1", "0"])]).unwrap();
        assert!(is_integrable(&flat).unwrap().integrable);
        let h = is_integrable(&heisenberg(&c)).unwrap();
        assert!(!h.integrable);
        assert_eq!(h.witness.unwrap().2, vf(&c, &["0", "0", "1"]));
        let line = Distribution::new(&c, vec![vf(&c, &["x", "1", "y^2"])]).unwrap();
        assert!(is_integrable(&line).unwrap().integrable);
        let bad = Distribution::new(&c, vec![vf(&c, &["1", "x", "0"]), vf(&c, &["y", "x*y", "0"])]);
        assert!(matches!(bad, Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn closure_examples() {
        let c = r3();
        assert_eq!(xi_star(&heisenberg(&c), 3).unwrap().dim(), 3);
        let flat = Distribution::new(&c, vec![vf(&c, &["1", "0", "0"]), vf(&c, &["0", "1", "0"])]).unwrap();
        assert_eq!(xi_star(&flat, 3).unwrap(), flat);
        let line = Distribution::new(&c, vec![vf(&c, &["1", "0", "0"])]).unwrap();
        assert_eq!(xi_star(&line, 3).unwrap(), line);
    }

    #[test]
    fn projection_examples() {
        let c = r3();
        let z = Distribution::new(&c, vec![vf(&c, &["0", "0", "1"])]).unwrap();
        let flat = Distribution::new(&c, vec![vf(&c, &["1", "0", "0"]), vf(&c, &["0", "1", "0"])]).unwrap();
        let p = projection_endo(&flat, &z).unwrap();
        assert_eq!(p, VVForm::decomposable(&KForm::dx(&c, 2), &VectorField::coordinate(&c, 2)).unwrap());
        let p = projection_endo(&heisenberg(&c), &z).unwrap();
        assert!(p.apply(&[&vf(&c, &["0", "1", "x"])]).unwrap().is_zero());
        assert_eq!(p.apply(&[&vf(&c, &["0", "0", "1"])]).unwrap(), vf(&c, &["0", "0", "1"]));
        assert_eq!(p.compose(&p).unwrap(), p);
        assert!(matches!(finite_type(&p, 16).unwrap().type_value, TypeValue::Infinite { .. }));
        let dup = Distribution::new(&c, vec![vf(&c, &["1", "0", "0"])]).unwrap();
        assert!(matches!(projection_endo(&flat, &dup), Err(Error::NotDirectSum { .. })));
    }

    #[test]
    fn flag_examples() {
        let c = r3();
        let frame = [vf(&c, &["1", "0", "0"]), vf(&c, &["0", "1", "x"]), vf(&c, &["0", "0", "1"])];
        let f = flag_endo(&frame, 2, 3).unwrap();
        assert_eq!(f.r, 2);
        assert_eq!(f.phi.apply(&[&frame[2]]).unwrap(), frame[0]);
        assert!(f.phi.apply(&[&frame[1]]).unwrap().is_zero());
        assert_eq!(finite_type(&f.phi, 16).unwrap().type_value, TypeValue::Finite(1));
        let f = flag_endo(&frame, 2, 2).unwrap();
        assert!(f.k.is_zero());
        assert_eq!(f.r, 1);
        assert_eq!(flag_endo(&frame, 1, 3).unwrap().r, 3);
    }

    #[test]
    fn min_nilpotent_against_powers() {
        assert_eq!(min_nilpotent_index(3, 2), 2);
        assert_eq!(min_nilpotent_index(6, 2), 3);
        assert_eq!(min_nilpotent_index(4, 4), 1);
        for d in 1..=8 {
            for s in 1..=d {
                assert_eq!(nilpotency_index(&canonical_shift(d, s), d + 1), Some(min_nilpotent_index(d, s)));
            }
        }
    }

    #[test]
    fn frobenius_examples() {
        let c = r3();
        let dz = DefiningCouple::new(&KForm::dx(&c, 2), &VectorField::coordinate(&c, 2)).unwrap();
        assert!(frobenius_form_test(&dz).unwrap());
        let contact = DefiningCouple::new(&one_form(&c, &[(2, "1"), (1, "-x")]), &VectorField::coordinate(&c, 2)).unwrap();
        assert!(!frobenius_form_test(&contact).unwrap());
        let r = frobenius_report(&contact).unwrap();
        assert!(r.consistent() && !r.involutive);
        let closed = DefiningCouple::new(&one_form(&c, &[(2, "1"), (0, "x"), (1, "y")]), &VectorField::coordinate(&c, 2)).unwrap();
        assert!(frobenius_form_test(&closed).unwrap());
        assert!(DefiningCouple::new(&KForm::dx(&c, 0), &VectorField::coordinate(&c, 2)).is_err());
    }

    #[test]
    fn couple_endo_examples() {
        let c = r3();
        let contact = DefiningCouple::new(&one_form(&c, &[(2, "1"), (1, "-x")]), &VectorField::coordinate(&c, 2)).unwrap();
        let p = couple_to_endo(&contact).unwrap();
        assert_eq!(p.apply(&[&VectorField::coordinate(&c, 1)]).unwrap(), vf(&c, &["0", "0", "-x"]));
        assert_eq!(p.compose(&p).unwrap(), p);
    }

    #[test]
    fn kodaira_examples() {
        let c = r3();
        let z = VectorField::coordinate(&c, 2);
        let dz = KForm::dx(&c, 2);
        assert!(kodaira_bracket(&z, &dz, &dz).unwrap().is_zero());
        let mut r = sample::rng(12);
        let x = sample::vector_field(&mut r, &c, 1);
        let g = sample::form(&mut r, &c, 1, 2);
        let expected = g.lie_derivative(&x).unwrap().wedge(&g).unwrap().scale_int(2);
        assert_eq!(kodaira_bracket(&x, &g, &g).unwrap(), expected);
        let f = KForm::function(&c, c.parse("x*y + z").unwrap());
        let beta = sample::form(&mut r, &c, 2, 1);
        let xf = x.apply(&f.as_function());
        let expected = beta.scale(&xf).sub(&beta.lie_derivative(&x).unwrap().scale(&f.as_function()));
        assert_eq!(kodaira_bracket(&x, &f, &beta).unwrap(), expected);
    }

    #[test]
    fn delta_alfa_examples() {
        let c = r3();
        let dz = DefiningCouple::new(&KForm::dx(&c, 2), &VectorField::coordinate(&c, 2)).unwrap();
        let zero = VectorField::zero(&c);
        let d = delta_alfa_residual(&dz, &KForm::zero(&c, 1), &zero).unwrap();
        assert!(d.residual.is_zero() && d.compatibility.is_zero());
        let d = delta_alfa_residual(&dz, &KForm::dx(&c, 1).neg(), &zero).unwrap();
        assert!(d.residual.is_zero() && d.compatibility.is_zero());
        let d = delta_alfa_residual(&dz, &KForm::dx(&c, 0), &zero).unwrap();
        assert!(d.residual.is_zero() && d.compatibility.is_zero());
        // ker(dz + t z dx) is integrable for every t
        let d = delta_alfa_residual(&dz, &KForm::dx(&c, 0).scale(&c.coord(2)), &zero).unwrap();
        assert!(d.residual.is_zero());
        // ker(dz + t x dy) is a contact structure for t ≠ 0
        let d = delta_alfa_residual(&dz, &KForm::dx(&c, 1).scale(&c.coord(0)), &zero).unwrap();
        assert_eq!(d.residual, KForm::dx(&c, 0).wedge(&KForm::dx(&c, 1)).unwrap());
        assert!(d.compatibility.is_zero());
    }
}
