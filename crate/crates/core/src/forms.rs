//! Charts, vector fields and differential forms with the Cartan calculus.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar, MAX_VARS};

/// A single coordinate chart; two charts are compatible when their
/// coordinate names agree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Chart {
    names: Arc<[String]>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart{:?}", &self.names[..])
    }
}

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidChart("dimension must be at least 1".into()));
        }
        if names.len() > MAX_VARS {
            return Err(Error::InvalidChart(format!("at most {MAX_VARS} coordinates supported")));
        }
        let mut seen = std::collections::HashSet::new();
        for n in names {
            let n = n.as_ref();
            let valid = n.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::InvalidChart(format!("invalid coordinate name '{n}'")));
            }
            if !seen.insert(n) {
                return Err(Error::InvalidChart(format!("duplicate coordinate name '{n}'")));
            }
        }
        Ok(Chart { names: names.iter().map(|s| s.as_ref().to_string()).collect() })
    }

    /// `x0, x1, ...`
    pub fn numbered(dim: usize) -> Result<Self> {
        let names: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        Self::new(&names)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coord(&self, i: usize) -> Scalar {
        Scalar::var(i)
    }

    pub fn parse(&self, text: &str) -> Result<Scalar> {
        let s = parse_scalar(text, &self.names)?;
        Ok(s)
    }

    /// Partial derivative with a range check against this chart.
    pub fn partial(&self, a: &Scalar, i: usize) -> Result<Scalar> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim() });
        }
        Ok(a.partial(i))
    }

    pub fn fmt_scalar(&self, a: &Scalar) -> String {
        a.fmt_with(&self.names)
    }

    fn check(&self, other: &Chart) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct VectorField {
    chart: Chart,
    comps: Vec<Scalar>,
}

impl VectorField {
    pub fn new(chart: &Chart, comps: Vec<Scalar>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::ArityMismatch { expected: chart.dim(), found: comps.len() });
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }

    pub fn parse<S: AsRef<str>>(chart: &Chart, comps: &[S]) -> Result<Self> {
        let comps = comps.iter().map(|c| chart.parse(c.as_ref())).collect::<Result<_>>()?;
        Self::new(chart, comps)
    }

    pub fn zero(chart: &Chart) -> Self {
        VectorField { chart: chart.clone(), comps: vec![Scalar::zero(); chart.dim()] }
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn coordinate(chart: &Chart, i: usize) -> Self {
        let mut v = Self::zero(chart);
        v.comps[i] = Scalar::one();
        v
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn comps(&self) -> &[Scalar] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Scalar {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Scalar::is_zero)
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.chart, other.chart, "chart mismatch");
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect();
        VectorField { chart: self.chart.clone(), comps }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.chart, other.chart, "chart mismatch");
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect();
        VectorField { chart: self.chart.clone(), comps }
    }

    pub fn scale(&self, f: &Scalar) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| c.mul(f)).collect() }
    }

    pub fn neg(&self) -> VectorField {
        self.scale(&Scalar::int(-1))
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Scalar) -> Scalar {
        self.comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .fold(Scalar::zero(), |acc, (i, c)| acc.add(&c.mul(&f.partial(i))))
    }

    pub fn lie_bracket(&self, other: &VectorField) -> Result<VectorField> {
        self.chart.check(&other.chart)?;
        let comps = (0..self.chart.dim())
            .map(|i| self.apply(&other.comps[i]).sub(&other.apply(&self.comps[i])))
            .collect();
        Ok(VectorField { chart: self.chart.clone(), comps })
    }

    pub fn fmt_components(&self) -> Vec<String> {
        self.comps.iter().map(|c| self.chart.fmt_scalar(c)).collect()
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({})∂{}", self.chart.fmt_scalar(c), self.chart.names[i]))
            .collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// A strictly increasing tuple of coordinate indices, stored as a bit set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Basis(u16);

impl Basis {
    pub const EMPTY: Basis = Basis(0);

    pub fn from_indices(idx: &[usize]) -> Option<(Basis, i32)> {
        let mut bits = 0u16;
        let mut sign = 1;
        for &i in idx {
            if bits & (1 << i) != 0 {
                return None;
            }
            // number of already-present indices greater than i
            if (bits >> (i + 1)).count_ones() % 2 == 1 {
                sign = -sign;
            }
            bits |= 1 << i;
        }
        Some((Basis(bits), sign))
    }

    pub fn bits(&self) -> u16 {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..16).filter(|&i| self.contains(i)).collect()
    }

    /// Sign of `dx_I ∧ dx_J` relative to `dx_{I ∪ J}`, or `None` if they overlap.
    fn wedge_sign(self, other: Basis) -> Option<i32> {
        if self.0 & other.0 != 0 {
            return None;
        }
        let swaps: u32 = other.indices().iter().map(|&j| (self.0 >> (j + 1)).count_ones()).sum();
        Some(if swaps % 2 == 0 { 1 } else { -1 })
    }

    /// Number of indices strictly below `i`.
    fn rank_below(self, i: usize) -> usize {
        (self.0 & ((1u16 << i) - 1)).count_ones() as usize
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct KForm {
    chart: Chart,
    degree: usize,
    terms: BTreeMap<Basis, Scalar>,
}

impl KForm {
    pub fn zero(chart: &Chart, degree: usize) -> Self {
        KForm { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    pub fn function(chart: &Chart, f: Scalar) -> Self {
        let mut k = Self::zero(chart, 0);
        if !f.is_zero() {
            k.terms.insert(Basis::EMPTY, f);
        }
        k
    }

    /// The coordinate differential `dx_i`.
    pub fn dx(chart: &Chart, i: usize) -> Self {
        let mut k = Self::zero(chart, 1);
        k.terms.insert(Basis(1 << i), Scalar::one());
        k
    }

    /// Builds a form from terms with arbitrary index order; repeated
    /// indices contribute zero.
    pub fn from_terms<I>(chart: &Chart, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Scalar)>,
    {
        let mut k = Self::zero(chart, degree);
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(Error::DegreeMismatch { expected: degree as i32, found: idx.len() as i32 });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= chart.dim()) {
                return Err(Error::IndexOutOfRange { index: bad, dim: chart.dim() });
            }
            if let Some((b, sign)) = Basis::from_indices(&idx) {
                k.add_term(b, if sign < 0 { c.neg() } else { c });
            }
        }
        Ok(k)
    }

    fn add_term(&mut self, b: Basis, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(b) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Basis, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &[usize]) -> Scalar {
        match Basis::from_indices(idx) {
            Some((b, sign)) => {
                let c = self.terms.get(&b).cloned().unwrap_or_default();
                if sign < 0 {
                    c.neg()
                } else {
                    c
                }
            }
            None => Scalar::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The function of a 0-form.
    pub fn as_function(&self) -> Scalar {
        assert_eq!(self.degree, 0, "not a 0-form");
        self.terms.get(&Basis::EMPTY).cloned().unwrap_or_default()
    }

    fn assert_compatible(&self, other: &KForm) {
        assert_eq!(self.chart, other.chart, "chart mismatch");
        assert_eq!(self.degree, other.degree, "degree mismatch");
    }

    pub fn add(&self, other: &KForm) -> KForm {
        self.assert_compatible(other);
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(*b, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &KForm) -> KForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> KForm {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, f: &Scalar) -> KForm {
        let mut out = Self::zero(&self.chart, self.degree);
        if f.is_zero() {
            return out;
        }
        for (b, c) in &self.terms {
            out.add_term(*b, c.mul(f));
        }
        out
    }

    pub fn scale_int(&self, n: i64) -> KForm {
        self.scale(&Scalar::int(n))
    }

    pub fn wedge(&self, other: &KForm) -> Result<KForm> {
        self.chart.check(&other.chart)?;
        let mut out = Self::zero(&self.chart, self.degree + other.degree);
        for (ba, ca) in &self.terms {
            for (bb, cb) in &other.terms {
                if let Some(sign) = ba.wedge_sign(*bb) {
                    let c = ca.mul(cb);
                    out.add_term(Basis(ba.0 | bb.0), if sign < 0 { c.neg() } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> KForm {
        let n = self.chart.dim();
        let mut out = Self::zero(&self.chart, self.degree + 1);
        for (b, c) in &self.terms {
            for k in (0..n).filter(|&k| !b.contains(k)) {
                let dc = c.partial(k);
                if dc.is_zero() {
                    continue;
                }
                let sign = if b.rank_below(k) % 2 == 0 { 1 } else { -1 };
                out.add_term(Basis(b.0 | (1 << k)), if sign < 0 { dc.neg() } else { dc });
            }
        }
        out
    }

    /// Interior product `ι_X`.
    pub fn contract(&self, x: &VectorField) -> Result<KForm> {
        self.chart.check(&x.chart)?;
        if self.degree == 0 {
            return Ok(Self::zero(&self.chart, 0));
        }
        let mut out = Self::zero(&self.chart, self.degree - 1);
        for (b, c) in &self.terms {
            for i in b.indices() {
                let xi = &x.comps[i];
                if xi.is_zero() {
                    continue;
                }
                let t = c.mul(xi);
                let sign = if b.rank_below(i) % 2 == 0 { 1 } else { -1 };
                out.add_term(Basis(b.0 & !(1 << i)), if sign < 0 { t.neg() } else { t });
            }
        }
        Ok(out)
    }

    /// Lie derivative via Cartan's formula `L_X = d ι_X + ι_X d`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<KForm> {
        let a = self.contract(x)?.d();
        let b = self.d().contract(x)?;
        if self.degree == 0 {
            return Ok(b);
        }
        Ok(a.add(&b))
    }

    /// Evaluates the form on `k` vector fields.
    pub fn eval_on(&self, vectors: &[&VectorField]) -> Result<Scalar> {
        if vectors.len() != self.degree {
            return Err(Error::ArityMismatch { expected: self.degree, found: vectors.len() });
        }
        for v in vectors {
            self.chart.check(&v.chart)?;
        }
        let mut total = Scalar::zero();
        for (b, c) in &self.terms {
            let idx = b.indices();
            let minor: Vec<Vec<Scalar>> = idx
                .iter()
                .map(|&i| vectors.iter().map(|v| v.comps[i].clone()).collect())
                .collect();
            total = total.add(&c.mul(&crate::linalg::determinant(&minor)));
        }
        Ok(total)
    }

    pub fn fmt_pretty(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, c)| {
                let coef = self.chart.fmt_scalar(c);
                if b.is_empty() {
                    coef
                } else {
                    let dxs: Vec<String> = b.indices().iter().map(|&i| format!("d{}", self.chart.names[i])).collect();
                    format!("({coef}) {}", dxs.join("∧"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_pretty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r3() -> Chart {
        Chart::new(&["x", "y", "z"]).unwrap()
    }

    fn s(c: &Chart, t: &str) -> Scalar {
        c.parse(t).unwrap()
    }

    fn vf(c: &Chart, comps: &[&str]) -> VectorField {
        VectorField::parse(c, comps).unwrap()
    }

    #[test]
    fn wedge_examples() {
        let c = r3();
        let (dx, dy, dz) = (KForm::dx(&c, 0), KForm::dx(&c, 1), KForm::dx(&c, 2));
        let xy = dx.wedge(&dy).unwrap();
        assert_eq!(xy.coeff(&[0, 1]), Scalar::one());
        assert_eq!(xy.coeff(&[1, 0]), Scalar::int(-1));
        assert!(dx.wedge(&dx).unwrap().is_zero());
        let xdy = dy.scale(&s(&c, "x"));
        assert_eq!(xdy.wedge(&dz).unwrap().coeff(&[1, 2]), s(&c, "x"));
        // clamped above the top degree
        let top = xy.wedge(&dz).unwrap();
        assert!(top.wedge(&dx).unwrap().is_zero());
        assert_eq!(top.wedge(&dx).unwrap().degree(), 4);
    }

    #[test]
    fn d_examples() {
        let c = r3();
        let xdy = KForm::dx(&c, 1).scale(&s(&c, "x"));
        assert_eq!(xdy.d(), KForm::dx(&c, 0).wedge(&KForm::dx(&c, 1)).unwrap());
        assert!(KForm::dx(&c, 0).wedge(&KForm::dx(&c, 1)).unwrap().d().is_zero());
        let f = KForm::function(&c, s(&c, "x*y"));
        let expected = KForm::dx(&c, 0).scale(&s(&c, "y")).add(&KForm::dx(&c, 1).scale(&s(&c, "x")));
        assert_eq!(f.d(), expected);
    }

    #[test]
    fn contract_examples() {
        let c = r3();
        let dxdy = KForm::dx(&c, 0).wedge(&KForm::dx(&c, 1)).unwrap();
        assert_eq!(dxdy.contract(&VectorField::coordinate(&c, 0)).unwrap(), KForm::dx(&c, 1));
        assert!(dxdy.contract(&VectorField::coordinate(&c, 2)).unwrap().is_zero());
        let x_dy = vf(&c, &["0", "x", "0"]);
        assert_eq!(KForm::dx(&c, 1).contract(&x_dy).unwrap(), KForm::function(&c, s(&c, "x")));
    }

    #[test]
    fn lie_bracket_examples() {
        let c = r3();
        let dx = VectorField::coordinate(&c, 0);
        let h = vf(&c, &["0", "1", "x"]);
        assert_eq!(dx.lie_bracket(&h).unwrap(), VectorField::coordinate(&c, 2));
        assert!(h.lie_bracket(&h).unwrap().is_zero());
        let xdx = vf(&c, &["x", "0", "0"]);
        assert_eq!(xdx.lie_bracket(&dx).unwrap(), dx.neg());
    }

    #[test]
    fn lie_derivative_examples() {
        let c = r3();
        let gamma = KForm::dx(&c, 2).sub(&KForm::dx(&c, 1).scale(&s(&c, "x")));
        assert!(gamma.lie_derivative(&VectorField::coordinate(&c, 2)).unwrap().is_zero());
        let xdy = KForm::dx(&c, 1).scale(&s(&c, "x"));
        assert_eq!(xdy.lie_derivative(&VectorField::coordinate(&c, 0)).unwrap(), KForm::dx(&c, 1));
        let f = KForm::function(&c, s(&c, "x^2*z"));
        let x = vf(&c, &["y", "1", "z"]);
        assert_eq!(f.lie_derivative(&x).unwrap().as_function(), f.d().eval_on(&[&x]).unwrap());
    }

    #[test]
    fn chart_mismatch_is_reported() {
        let a = r3();
        let b = Chart::new(&["u", "v", "w"]).unwrap();
        assert_eq!(KForm::dx(&a, 0).wedge(&KForm::dx(&b, 1)), Err(Error::ChartMismatch));
        assert_eq!(
            VectorField::coordinate(&a, 0).lie_bracket(&VectorField::coordinate(&b, 0)),
            Err(Error::ChartMismatch)
        );
        assert!(matches!(a.partial(&Scalar::var(0), 3), Err(Error::IndexOutOfRange { .. })));
        assert!(Chart::new(&["x", "x"]).is_err());
    }
}
