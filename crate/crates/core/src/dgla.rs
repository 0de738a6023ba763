//! Graded derivations of the form algebra.
//!
//! Every derivation of degree `k` is uniquely `L_Φ + I_Ψ` with `Φ` of degree
//! `k` and `Ψ` of degree `k + 1`. [`Derivation`] stores that pair; the
//! bracket, `ℸ = [d, ·]` and `ℵ` act on it in closed form. An
//! [`OpaqueDerivation`] is just a procedure on forms, and [`decompose`]
//! recovers the pair from it, which gives an independent oracle for every
//! closed formula here.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{Chart, KForm, VectorField};
use crate::scalar::{Rational, Scalar};
use crate::vvform::VVForm;

fn sign(e: i32) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// `L_{∂_i} σ`: differentiate every coefficient.
fn partial_form(sigma: &KForm, i: usize) -> KForm {
    let terms: Vec<_> = sigma.terms().map(|(b, c)| (b.indices(), c.partial(i))).collect();
    KForm::from_terms(sigma.chart(), sigma.degree(), terms).expect("indices come from a form")
}

fn contract_coord(sigma: &KForm, i: usize) -> KForm {
    sigma.contract(&VectorField::coordinate(sigma.chart(), i)).expect("same chart")
}

/// `L_Φ σ`, extending `α ∧ L_X σ + (-1)^|α| dα ∧ ι_X σ` over the frame.
pub fn apply_l(phi: &VVForm, sigma: &KForm) -> Result<KForm> {
    if phi.chart() != sigma.chart() {
        return Err(Error::ChartMismatch);
    }
    let chart = phi.chart();
    let k = phi.degree();
    let mut out = KForm::zero(chart, sigma.degree() + k);
    for (i, alpha) in phi.comps().iter().enumerate() {
        if alpha.is_zero() {
            continue;
        }
        let di = partial_form(sigma, i);
        if !di.is_zero() {
            out = out.add(&alpha.wedge(&di)?);
        }
        if sigma.degree() == 0 {
            continue;
        }
        let da = alpha.d();
        if da.is_zero() {
            continue;
        }
        let inner = contract_coord(sigma, i);
        if !inner.is_zero() {
            out = out.add(&da.wedge(&inner)?.scale_int(sign(k as i32)));
        }
    }
    Ok(out)
}

/// `I_Ψ σ = Σ ψ^i ∧ ι_{∂_i} σ`.
pub fn apply_i(psi: &VVForm, sigma: &KForm) -> Result<KForm> {
    psi.insert(sigma)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Derivation {
    chart: Chart,
    degree: i32,
    l_part: Option<VVForm>,
    i_part: Option<VVForm>,
}

impl Derivation {
    pub fn new(phi: &VVForm, psi: &VVForm) -> Result<Self> {
        if phi.chart() != psi.chart() {
            return Err(Error::ChartMismatch);
        }
        if psi.degree() != phi.degree() + 1 {
            return Err(Error::DegreeMismatch { expected: phi.degree() as i32 + 1, found: psi.degree() as i32 });
        }
        Ok(Derivation {
            chart: phi.chart().clone(),
            degree: phi.degree() as i32,
            l_part: Some(phi.clone()),
            i_part: Some(psi.clone()),
        })
    }

    /// The zero derivation of degree `k ≥ -2`.
    pub fn zero(chart: &Chart, degree: i32) -> Self {
        let part = |d: i32| (d >= 0).then(|| VVForm::zero(chart, d as usize));
        Derivation { chart: chart.clone(), degree, l_part: part(degree), i_part: part(degree + 1) }
    }

    pub fn lie(phi: &VVForm) -> Self {
        let k = phi.degree();
        Derivation {
            chart: phi.chart().clone(),
            degree: k as i32,
            l_part: Some(phi.clone()),
            i_part: Some(VVForm::zero(phi.chart(), k + 1)),
        }
    }

    pub fn insertion(psi: &VVForm) -> Self {
        let mut out = Self::zero(psi.chart(), psi.degree() as i32 - 1);
        out.i_part = Some(psi.clone());
        out
    }

    /// The exterior derivative, `L_Id`.
    pub fn exterior(chart: &Chart) -> Self {
        Self::lie(&VVForm::identity(chart))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    /// `Φ` with `D ⊇ L_Φ`; absent below degree 0.
    pub fn l_part(&self) -> Option<&VVForm> {
        self.l_part.as_ref()
    }

    /// `Ψ` with `D ⊇ I_Ψ`; absent below degree -1.
    pub fn i_part(&self) -> Option<&VVForm> {
        self.i_part.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.l_part.as_ref().map_or(true, VVForm::is_zero) && self.i_part.as_ref().map_or(true, VVForm::is_zero)
    }

    pub fn apply(&self, sigma: &KForm) -> Result<KForm> {
        if sigma.chart() != &self.chart {
            return Err(Error::ChartMismatch);
        }
        let target = (sigma.degree() as i32 + self.degree).max(0) as usize;
        let mut out = KForm::zero(&self.chart, target);
        if sigma.degree() as i32 + self.degree < 0 {
            return Ok(out);
        }
        if let Some(phi) = &self.l_part {
            out = out.add(&apply_l(phi, sigma)?);
        }
        if let Some(psi) = &self.i_part {
            if sigma.degree() > 0 {
                out = out.add(&apply_i(psi, sigma)?);
            }
        }
        Ok(out)
    }

    fn zip(&self, other: &Derivation, f: impl Fn(&VVForm, &VVForm) -> VVForm) -> Derivation {
        assert_eq!(self.chart, other.chart, "chart mismatch");
        assert_eq!(self.degree, other.degree, "degree mismatch");
        let both = |a: &Option<VVForm>, b: &Option<VVForm>| match (a, b) {
            (Some(a), Some(b)) => Some(f(a, b)),
            _ => None,
        };
        Derivation {
            chart: self.chart.clone(),
            degree: self.degree,
            l_part: both(&self.l_part, &other.l_part),
            i_part: both(&self.i_part, &other.i_part),
        }
    }

    pub fn add(&self, other: &Derivation) -> Derivation {
        self.zip(other, VVForm::add)
    }

    pub fn sub(&self, other: &Derivation) -> Derivation {
        self.zip(other, VVForm::sub)
    }

    pub fn scale(&self, q: &Rational) -> Derivation {
        Derivation {
            chart: self.chart.clone(),
            degree: self.degree,
            l_part: self.l_part.as_ref().map(|v| v.scale_rational(q)),
            i_part: self.i_part.as_ref().map(|v| v.scale_rational(q)),
        }
    }

    pub fn scale_int(&self, n: i64) -> Derivation {
        self.scale(&Rational::from_integer(n.into()))
    }

    pub fn neg(&self) -> Derivation {
        self.scale_int(-1)
    }

    /// `[D₁, D₂] = D₁D₂ - (-1)^{k₁k₂} D₂D₁` in closed form on the parts.
    pub fn bracket(&self, other: &Derivation) -> Result<Derivation> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        let (k1, k2) = (self.degree, other.degree);
        let eps = sign(k1 * k2);
        let mut out = Derivation::zero(&self.chart, k1 + k2);
        let (p1, p2) = (self.l_part.as_ref(), other.l_part.as_ref());
        let (s1, s2) = (self.i_part.as_ref(), other.i_part.as_ref());

        if let Some(acc) = out.l_part.as_mut() {
            let target = acc.degree();
            let mut push = |term: VVForm, c: i64| {
                if term.degree() == target {
                    *acc = acc.add(&term.scale(&Scalar::int(c)));
                }
            };
            if let (Some(a), Some(b)) = (p1, p2) {
                push(fn_bracket(a, b)?, 1);
            }
            if let (Some(s), Some(p)) = (s1, p2) {
                push(insert_vv(s, p)?, 1);
            }
            if let (Some(s), Some(p)) = (s2, p1) {
                push(insert_vv(s, p)?, -eps);
            }
        }
        if let Some(acc) = out.i_part.as_mut() {
            let target = acc.degree();
            let mut push = |term: VVForm, c: i64| {
                if term.degree() == target {
                    *acc = acc.add(&term.scale(&Scalar::int(c)));
                }
            };
            if let (Some(a), Some(b)) = (s1, s2) {
                push(insert_vv(a, b)?, 1);
                push(insert_vv(b, a)?, -eps);
            }
            if let (Some(p), Some(s)) = (p1, s2) {
                push(fn_bracket(p, s)?, 1);
            }
            if let (Some(p), Some(s)) = (p2, s1) {
                push(fn_bracket(p, s)?, -eps);
            }
        }
        Ok(out)
    }

    /// `ℸD = [d, D]`.
    pub fn daleth(&self) -> Result<Derivation> {
        Derivation::exterior(&self.chart).bracket(self)
    }

    /// `ℵ(L_Φ + I_Ψ) = (-1)^{|D|} I_Φ`, a right inverse partner of `ℸ`.
    pub fn aleph(&self) -> Derivation {
        match &self.l_part {
            Some(phi) => Derivation::insertion(&phi.scale(&Scalar::int(sign(self.degree)))),
            None => Derivation::zero(&self.chart, self.degree - 1),
        }
    }

    /// Equality as operators: both parts agree.
    pub fn same_as(&self, other: &Derivation) -> bool {
        self.degree == other.degree && self.sub(other).is_zero()
    }

    /// Checks agreement with another operator on coordinate functions and
    /// coordinate differentials, which generate the form algebra.
    pub fn agrees_on_generators(&self, op: &OpaqueDerivation) -> Result<bool> {
        for sigma in generators(&self.chart) {
            if !same_form(&self.apply(&sigma)?, &op.apply(&sigma)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_opaque(&self) -> OpaqueDerivation {
        let d = self.clone();
        OpaqueDerivation::new(&self.chart, self.degree, move |s| d.apply(s))
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<VVForm>| v.as_ref().map_or("0".to_string(), VVForm::fmt_pretty);
        write!(f, "L[{}] + I[{}]", show(&self.l_part), show(&self.i_part))
    }
}

fn insert_vv(psi: &VVForm, phi: &VVForm) -> Result<VVForm> {
    psi.insert_vv(phi)
}

fn same_form(a: &KForm, b: &KForm) -> bool {
    if a.is_zero() && b.is_zero() {
        return true;
    }
    a.degree() == b.degree() && a == b
}

/// `x_i` and `dx_i` for every coordinate.
pub fn generators(chart: &Chart) -> Vec<KForm> {
    let n = chart.dim();
    let mut out: Vec<KForm> = (0..n).map(|i| KForm::function(chart, chart.coord(i))).collect();
    out.extend((0..n).map(|i| KForm::dx(chart, i)));
    out
}

/// Products used to confirm that an operator obeys the graded Leibniz rule.
fn product_sample(chart: &Chart) -> Vec<KForm> {
    let n = chart.dim();
    let x = |i: usize| chart.coord(i);
    let mut out = vec![KForm::function(chart, Scalar::one())];
    for i in 0..n {
        for j in i..n {
            out.push(KForm::function(chart, x(i).mul(&x(j))));
        }
        for j in 0..n {
            out.push(KForm::dx(chart, j).scale(&x(i)));
        }
        for j in i + 1..n {
            let w = KForm::dx(chart, i).wedge(&KForm::dx(chart, j)).expect("same chart");
            out.push(w.scale(&x((i + j) % n).mul(&x(i)).add(&Scalar::one())));
        }
    }
    out
}

type FormMap = dyn Fn(&KForm) -> Result<KForm> + Send + Sync;

/// A derivation known only through its action on forms.
#[derive(Clone)]
pub struct OpaqueDerivation {
    chart: Chart,
    degree: i32,
    eval: Arc<FormMap>,
}

impl fmt::Debug for OpaqueDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpaqueDerivation").field("degree", &self.degree).finish_non_exhaustive()
    }
}

impl OpaqueDerivation {
    pub fn new<F>(chart: &Chart, degree: i32, f: F) -> Self
    where
        F: Fn(&KForm) -> Result<KForm> + Send + Sync + 'static,
    {
        OpaqueDerivation { chart: chart.clone(), degree, eval: Arc::new(f) }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn apply(&self, sigma: &KForm) -> Result<KForm> {
        (self.eval)(sigma)
    }

    /// `PQ - (-1)^{|P||Q|} QP` as an operator.
    pub fn commutator(p: &OpaqueDerivation, q: &OpaqueDerivation) -> OpaqueDerivation {
        let eps = sign(p.degree * q.degree);
        let (p, q) = (p.clone(), q.clone());
        let degree = p.degree + q.degree;
        let chart = p.chart.clone();
        OpaqueDerivation::new(&chart, degree, move |s| {
            let pq = p.apply(&q.apply(s)?)?;
            let qp = q.apply(&p.apply(s)?)?;
            Ok(match (pq.is_zero(), qp.is_zero()) {
                (true, true) => pq,
                (true, false) => qp.scale_int(-eps),
                (false, true) => pq,
                (false, false) => pq.sub(&qp.scale_int(eps)),
            })
        })
    }
}

/// Recovers `(Φ, Ψ)` with `D = L_Φ + I_Ψ`.
pub fn decompose(op: &OpaqueDerivation) -> Result<Derivation> {
    let chart = op.chart().clone();
    let n = chart.dim();
    let k = op.degree();
    if k < -1 || k > n as i32 {
        return Err(Error::DegreeOutOfRange { degree: k, dim: n });
    }
    let bad = |what: String| Error::NotADerivation(what);
    let mut out = Derivation::zero(&chart, k);
    if k >= 0 {
        let mut comps = Vec::with_capacity(n);
        for i in 0..n {
            let v = op.apply(&KForm::function(&chart, chart.coord(i)))?;
            if !v.is_zero() && v.degree() != k as usize {
                return Err(bad(format!("image of a function has degree {}", v.degree())));
            }
            comps.push(if v.is_zero() { KForm::zero(&chart, k as usize) } else { v });
        }
        out.l_part = Some(VVForm::new(&chart, k as usize, comps)?);
    } else {
        for i in 0..n {
            if !op.apply(&KForm::function(&chart, chart.coord(i)))?.is_zero() {
                return Err(bad("degree -1 operator moves a function".into()));
            }
        }
    }
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let dxi = KForm::dx(&chart, i);
        let mut v = op.apply(&dxi)?;
        if let Some(phi) = &out.l_part {
            let l = apply_l(phi, &dxi)?;
            v = if v.is_zero() { l.neg() } else { v.sub(&l) };
        }
        if !v.is_zero() && v.degree() as i32 != k + 1 {
            return Err(bad(format!("image of a differential has degree {}", v.degree())));
        }
        comps.push(if v.is_zero() { KForm::zero(&chart, (k + 1) as usize) } else { v });
    }
    out.i_part = Some(VVForm::new(&chart, (k + 1) as usize, comps)?);
    for sigma in product_sample(&chart) {
        if !same_form(&op.apply(&sigma)?, &out.apply(&sigma)?) {
            return Err(bad(format!("Leibniz rule fails on {sigma}")));
        }
    }
    Ok(out)
}

/// Frölicher–Nijenhuis bracket by bilinear extension over the coordinate frame of
/// `[α⊗X, β⊗Y] = α∧β⊗[X,Y] + α∧L_Xβ⊗Y - L_Yα∧β⊗X + (-1)^k (dα∧ι_Xβ⊗Y + ι_Yα∧dβ⊗X)`.
pub fn fn_bracket(phi: &VVForm, psi: &VVForm) -> Result<VVForm> {
    if phi.chart() != psi.chart() {
        return Err(Error::ChartMismatch);
    }
    let chart = phi.chart();
    let n = chart.dim();
    let (k, l) = (phi.degree(), psi.degree());
    let eps = sign(k as i32);
    let mut comps = vec![KForm::zero(chart, k + l); n];
    let d_psi: Vec<KForm> = psi.comps().iter().map(KForm::d).collect();
    for i in 0..n {
        let alpha = phi.comp(i);
        if alpha.is_zero() {
            continue;
        }
        let d_alpha = alpha.d();
        for j in 0..n {
            let beta = psi.comp(j);
            if beta.is_zero() {
                continue;
            }
            let lx_beta = partial_form(beta, i);
            if !lx_beta.is_zero() {
                comps[j] = comps[j].add(&alpha.wedge(&lx_beta)?);
            }
            let ly_alpha = partial_form(alpha, j);
            if !ly_alpha.is_zero() {
                comps[i] = comps[i].sub(&ly_alpha.wedge(beta)?);
            }
            if l > 0 && !d_alpha.is_zero() {
                let t = d_alpha.wedge(&contract_coord(beta, i))?;
                comps[j] = comps[j].add(&t.scale_int(eps));
            }
            if k > 0 && !d_psi[j].is_zero() {
                let t = contract_coord(alpha, j).wedge(&d_psi[j])?;
                comps[i] = comps[i].add(&t.scale_int(eps));
            }
        }
    }
    VVForm::new(chart, k + l, comps)
}

/// Builds a 2-form from its values on coordinate pairs `(∂_a, ∂_b)`, `a < b`.
fn from_pair_values(chart: &Chart, value: impl Fn(usize, usize) -> Result<VectorField>) -> Result<VVForm> {
    let n = chart.dim();
    let mut terms: Vec<Vec<(Vec<usize>, Scalar)>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            let v = value(a, b)?;
            for (i, c) in v.comps().iter().enumerate() {
                if !c.is_zero() {
                    terms[i].push((vec![a, b], c.clone()));
                }
            }
        }
    }
    let comps = terms.into_iter().map(|t| KForm::from_terms(chart, 2, t)).collect::<Result<_>>()?;
    VVForm::new(chart, 2, comps)
}

/// Endomorphism form of the bracket, evaluated on the coordinate frame:
/// `[ΦX,ΨY] + [ΨX,ΦY] + Φ(Ψ[X,Y]) + Ψ(Φ[X,Y]) - Φ[ΨX,Y] - Φ[X,ΨY] - Ψ[ΦX,Y] - Ψ[X,ΦY]`.
pub fn fn_bracket_endo(phi: &VVForm, psi: &VVForm) -> Result<VVForm> {
    phi.expect_degree(1)?;
    psi.expect_degree(1)?;
    if phi.chart() != psi.chart() {
        return Err(Error::ChartMismatch);
    }
    let chart = phi.chart();
    from_pair_values(chart, |a, b| {
        let (x, y) = (VectorField::coordinate(chart, a), VectorField::coordinate(chart, b));
        let (px, py) = (phi.apply(&[&x])?, phi.apply(&[&y])?);
        let (sx, sy) = (psi.apply(&[&x])?, psi.apply(&[&y])?);
        let xy = x.lie_bracket(&y)?;
        let mut v = px.lie_bracket(&sy)?.add(&sx.lie_bracket(&py)?);
        v = v.add(&phi.apply(&[&psi.apply(&[&xy])?])?).add(&psi.apply(&[&phi.apply(&[&xy])?])?);
        v = v.sub(&phi.apply(&[&sx.lie_bracket(&y)?])?).sub(&phi.apply(&[&x.lie_bracket(&sy)?])?);
        v = v.sub(&psi.apply(&[&px.lie_bracket(&y)?])?).sub(&psi.apply(&[&x.lie_bracket(&py)?])?);
        Ok(v)
    })
}

/// `N_Φ(X,Y) = [ΦX,ΦY] + Φ²[X,Y] - Φ[ΦX,Y] - Φ[X,ΦY]`.
pub fn nijenhuis(phi: &VVForm) -> Result<VVForm> {
    phi.expect_degree(1)?;
    let chart = phi.chart();
    from_pair_values(chart, |a, b| {
        let (x, y) = (VectorField::coordinate(chart, a), VectorField::coordinate(chart, b));
        let (px, py) = (phi.apply(&[&x])?, phi.apply(&[&y])?);
        let phi2_xy = phi.apply(&[&phi.apply(&[&x.lie_bracket(&y)?])?])?;
        let mut v = px.lie_bracket(&py)?.add(&phi2_xy);
        v = v.sub(&phi.apply(&[&px.lie_bracket(&y)?])?).sub(&phi.apply(&[&x.lie_bracket(&py)?])?);
        Ok(v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn r3() -> Chart {
        Chart::new(&["x", "y", "z"]).unwrap()
    }

    fn vf(c: &Chart, comps: &[&str]) -> VectorField {
        VectorField::parse(c, comps).unwrap()
    }

    fn heisenberg_flag(c: &Chart) -> VVForm {
        // Φ∂x = 0, Φ(∂y + x∂z) = 0, Φ∂z = ∂x
        let m = vec![
            vec![Scalar::zero(), c.parse("-x").unwrap(), Scalar::one()],
            vec![Scalar::zero(); 3],
            vec![Scalar::zero(); 3],
        ];
        VVForm::from_endo_matrix(c, &m).unwrap()
    }

    #[test]
    fn apply_l_examples() {
        let c = r3();
        let mut r = sample::rng(3);
        let sigma = sample::form(&mut r, &c, 1, 2);
        assert_eq!(apply_l(&VVForm::identity(&c), &sigma).unwrap(), sigma.d());
        let p = VVForm::decomposable(&KForm::dx(&c, 2), &VectorField::coordinate(&c, 2)).unwrap();
        let z = KForm::function(&c, c.coord(2));
        assert_eq!(apply_l(&p, &z).unwrap(), KForm::dx(&c, 2));
        let five = KForm::function(&c, Scalar::int(5));
        assert!(apply_l(&p, &five).unwrap().is_zero());
    }

    #[test]
    fn apply_i_examples() {
        let c = r3();
        let mut r = sample::rng(4);
        let phi = sample::endo(&mut r, &c, 2);
        assert!(apply_i(&phi, &KForm::function(&c, c.parse("x*y").unwrap())).unwrap().is_zero());
        for p in 1..=3 {
            let sigma = sample::form(&mut r, &c, p, 2);
            assert_eq!(apply_i(&VVForm::identity(&c), &sigma).unwrap(), sigma.scale_int(p as i64));
        }
        let k = VVForm::decomposable(&KForm::dx(&c, 2), &VectorField::coordinate(&c, 0)).unwrap();
        assert_eq!(apply_i(&k, &KForm::dx(&c, 0)).unwrap(), KForm::dx(&c, 2));
    }

    #[test]
    fn decompose_examples() {
        let c = r3();
        let d = OpaqueDerivation::new(&c, 1, |s| Ok(s.d()));
        assert!(decompose(&d).unwrap().same_as(&Derivation::exterior(&c)));
        let zero = OpaqueDerivation::new(&c, 0, |s| Ok(KForm::zero(s.chart(), s.degree())));
        assert!(decompose(&zero).unwrap().is_zero());
        let mut r = sample::rng(5);
        for k in -1..=3 {
            let dd = sample::derivation(&mut r, &c, k, 2);
            assert!(decompose(&dd.to_opaque()).unwrap().same_as(&dd), "degree {k}");
        }
    }

    #[test]
    fn decompose_rejects_non_derivations() {
        let c = r3();
        let square = OpaqueDerivation::new(&c, 0, |s| if s.degree() == 0 { s.wedge(s) } else { Ok(s.clone()) });
        assert!(matches!(decompose(&square), Err(Error::NotADerivation(_))));
        let far = OpaqueDerivation::new(&c, 5, |s| Ok(s.clone()));
        assert!(matches!(decompose(&far), Err(Error::DegreeOutOfRange { .. })));
    }

    #[test]
    fn bracket_examples() {
        let c = r3();
        let mut r = sample::rng(6);
        let phi = sample::endo(&mut r, &c, 2);
        let id = VVForm::identity(&c);
        let b = Derivation::insertion(&phi).bracket(&Derivation::insertion(&id)).unwrap();
        assert!(b.is_zero());
        let psi = sample::endo(&mut r, &c, 2);
        let b = Derivation::lie(&phi).bracket(&Derivation::lie(&psi)).unwrap();
        assert_eq!(b.l_part().unwrap(), &fn_bracket(&phi, &psi).unwrap());
        assert!(b.i_part().unwrap().is_zero());
        let dd = sample::derivation(&mut r, &c, 2, 1);
        assert!(Derivation::exterior(&c).bracket(&dd).unwrap().same_as(&dd.daleth().unwrap()));
    }

    #[test]
    fn bracket_matches_operator_commutator() {
        let c = r3();
        let mut r = sample::rng(8);
        for (k1, k2) in [(-1, 0), (0, 1), (1, 1), (1, 2), (2, -1), (0, 0), (2, 2)] {
            let a = sample::derivation(&mut r, &c, k1, 1);
            let b = sample::derivation(&mut r, &c, k2, 1);
            let closed = a.bracket(&b).unwrap();
            let op = OpaqueDerivation::commutator(&a.to_opaque(), &b.to_opaque());
            assert!(closed.agrees_on_generators(&op).unwrap(), "degrees ({k1}, {k2})");
        }
    }

    #[test]
    fn daleth_and_aleph() {
        let c = r3();
        let mut r = sample::rng(9);
        let phi = sample::vvform(&mut r, &c, 2, 2);
        assert!(Derivation::lie(&phi).daleth().unwrap().is_zero());
        let d = Derivation::exterior(&c);
        assert!(Derivation::insertion(&VVForm::identity(&c)).daleth().unwrap().same_as(&d.neg()));
        for k in -1..=3 {
            let dd = sample::derivation(&mut r, &c, k, 2);
            assert!(dd.daleth().unwrap().daleth().unwrap().is_zero());
            let homotopy = dd.aleph().daleth().unwrap().add(&dd.daleth().unwrap().aleph());
            assert!(homotopy.same_as(&dd), "degree {k}");
            assert!(dd.aleph().l_part().map_or(true, VVForm::is_zero));
        }
    }

    #[test]
    fn fn_bracket_examples() {
        let c = r3();
        let id = VVForm::identity(&c);
        assert!(fn_bracket(&id, &id).unwrap().is_zero());
        let phi = heisenberg_flag(&c);
        let b = fn_bracket(&phi, &phi).unwrap();
        assert_eq!(b, fn_bracket_endo(&phi, &phi).unwrap());
        let frame = [vf(&c, &["1", "0", "0"]), vf(&c, &["0", "1", "x"]), vf(&c, &["0", "0", "1"])];
        assert_eq!(b.apply(&[&frame[1], &frame[2]]).unwrap(), vf(&c, &["2", "0", "0"]));
        assert!(b.apply(&[&frame[0], &frame[1]]).unwrap().is_zero());
        assert!(b.apply(&[&frame[0], &frame[2]]).unwrap().is_zero());
        let n = nijenhuis(&phi).unwrap();
        assert_eq!(n.apply(&[&frame[1], &frame[2]]).unwrap(), vf(&c, &["1", "0", "0"]));

        // projection onto ∂z along span(∂x, ∂y + x∂z)
        let gamma = KForm::from_terms(&c, 1, [(vec![2], Scalar::one()), (vec![1], c.parse("-x").unwrap())]).unwrap();
        let p = VVForm::decomposable(&gamma, &VectorField::coordinate(&c, 2)).unwrap();
        let b = fn_bracket(&p, &p).unwrap();
        assert_eq!(b.apply(&[&frame[0], &frame[1]]).unwrap(), vf(&c, &["0", "0", "2"]));
    }

    #[test]
    fn nijenhuis_examples() {
        let c = Chart::new(&["x1", "y1", "x2", "y2"]).unwrap();
        let mut m = crate::linalg::zeros(4, 4);
        for i in 0..2 {
            m[2 * i + 1][2 * i] = Scalar::one();
            m[2 * i][2 * i + 1] = Scalar::int(-1);
        }
        let j = VVForm::from_endo_matrix(&c, &m).unwrap();
        assert!(nijenhuis(&j).unwrap().is_zero());
        assert!(nijenhuis(&VVForm::identity(&c)).unwrap().is_zero());
        let mut r = sample::rng(10);
        let phi = sample::endo(&mut r, &c, 2);
        assert_eq!(fn_bracket(&phi, &phi).unwrap(), nijenhuis(&phi).unwrap().scale(&Scalar::int(2)));
    }
}
