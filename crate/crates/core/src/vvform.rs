//! Tangent-valued differential forms `Λ^k M ⊗ TM`.
//!
//! A [`VVForm`] stores one k-form per coordinate direction: component `i` is
//! the coefficient of `∂/∂x_i`. In degree one the same data is an
//! endomorphism of `TM` with matrix entry `(i, j)` equal to the `dx_j`
//! coefficient of component `i`, so `(σ ⊗ X)(Y) = σ(Y) X`.

use std::fmt;

use crate::error::{Error, Result};
use crate::forms::{Chart, KForm, VectorField};
use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct VVForm {
    chart: Chart,
    degree: usize,
    comps: Vec<KForm>,
}

impl VVForm {
    pub fn new(chart: &Chart, degree: usize, comps: Vec<KForm>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::ArityMismatch { expected: chart.dim(), found: comps.len() });
        }
        for c in &comps {
            if c.chart() != chart {
                return Err(Error::ChartMismatch);
            }
            if c.degree() != degree {
                return Err(Error::DegreeMismatch { expected: degree as i32, found: c.degree() as i32 });
            }
        }
        Ok(VVForm { chart: chart.clone(), degree, comps })
    }

    pub fn zero(chart: &Chart, degree: usize) -> Self {
        VVForm { chart: chart.clone(), degree, comps: vec![KForm::zero(chart, degree); chart.dim()] }
    }

    /// `Id_TM = Σ dx_i ⊗ ∂_i`.
    pub fn identity(chart: &Chart) -> Self {
        let comps = (0..chart.dim()).map(|i| KForm::dx(chart, i)).collect();
        VVForm { chart: chart.clone(), degree: 1, comps }
    }

    /// `α ⊗ X`.
    pub fn decomposable(alpha: &KForm, x: &VectorField) -> Result<Self> {
        if alpha.chart() != x.chart() {
            return Err(Error::ChartMismatch);
        }
        let comps = x.comps().iter().map(|c| alpha.scale(c)).collect();
        Ok(VVForm { chart: alpha.chart().clone(), degree: alpha.degree(), comps })
    }

    /// A degree-0 tangent-valued form is a vector field.
    pub fn from_vector_field(x: &VectorField) -> Self {
        let chart = x.chart();
        let comps = x.comps().iter().map(|c| KForm::function(chart, c.clone())).collect();
        VVForm { chart: chart.clone(), degree: 0, comps }
    }

    pub fn from_endo_matrix(chart: &Chart, m: &Matrix) -> Result<Self> {
        let n = chart.dim();
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::ArityMismatch { expected: n, found: m.len() });
        }
        let comps = m
            .iter()
            .map(|row| KForm::from_terms(chart, 1, row.iter().enumerate().map(|(j, c)| (vec![j], c.clone()))))
            .collect::<Result<_>>()?;
        Ok(VVForm { chart: chart.clone(), degree: 1, comps })
    }

    pub fn as_endo_matrix(&self) -> Result<Matrix> {
        self.expect_degree(1)?;
        let n = self.chart.dim();
        Ok(self.comps.iter().map(|c| (0..n).map(|j| c.coeff(&[j])).collect()).collect())
    }

    pub fn expect_degree(&self, k: usize) -> Result<()> {
        if self.degree == k {
            Ok(())
        } else {
            Err(Error::DegreeMismatch { expected: k as i32, found: self.degree as i32 })
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn comps(&self) -> &[KForm] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &KForm {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(KForm::is_zero)
    }

    fn zip_with(&self, other: &VVForm, f: impl Fn(&KForm, &KForm) -> KForm) -> VVForm {
        assert_eq!(self.chart, other.chart, "chart mismatch");
        assert_eq!(self.degree, other.degree, "degree mismatch");
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect();
        VVForm { chart: self.chart.clone(), degree: self.degree, comps }
    }

    pub fn add(&self, other: &VVForm) -> VVForm {
        self.zip_with(other, KForm::add)
    }

    pub fn sub(&self, other: &VVForm) -> VVForm {
        self.zip_with(other, KForm::sub)
    }

    pub fn neg(&self) -> VVForm {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, f: &Scalar) -> VVForm {
        VVForm {
            chart: self.chart.clone(),
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.scale(f)).collect(),
        }
    }

    pub fn scale_rational(&self, q: &Rational) -> VVForm {
        self.scale(&Scalar::rational(q.clone()))
    }

    /// Evaluates on `k` vector fields.
    pub fn apply(&self, vectors: &[&VectorField]) -> Result<VectorField> {
        if vectors.len() != self.degree {
            return Err(Error::ArityMismatch { expected: self.degree, found: vectors.len() });
        }
        let comps = self.comps.iter().map(|c| c.eval_on(vectors)).collect::<Result<_>>()?;
        VectorField::new(&self.chart, comps)
    }

    /// `(Φσ)(V_1..V_p) = σ(ΦV_1..ΦV_p)`, with `Φσ = σ` on functions.
    pub fn act_on_form(&self, sigma: &KForm) -> Result<KForm> {
        self.expect_degree(1)?;
        if sigma.chart() != &self.chart {
            return Err(Error::ChartMismatch);
        }
        if sigma.degree() == 0 {
            return Ok(sigma.clone());
        }
        // Φ(dx_i) = dx_i ∘ Φ is the i-th component, extended multiplicatively.
        let mut out = KForm::zero(&self.chart, sigma.degree());
        for (b, c) in sigma.terms() {
            let mut acc = KForm::function(&self.chart, c.clone());
            for i in b.indices() {
                acc = acc.wedge(&self.comps[i])?;
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// `(ΦΨ)(V_1..V_p) = Φ(Ψ(V_1..V_p))`; degree-0 `Ψ` is returned unchanged.
    pub fn compose(&self, psi: &VVForm) -> Result<VVForm> {
        self.expect_degree(1)?;
        if psi.chart != self.chart {
            return Err(Error::ChartMismatch);
        }
        if psi.degree == 0 {
            return Ok(psi.clone());
        }
        let m = self.as_endo_matrix()?;
        let comps = m
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&psi.comps)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(KForm::zero(&self.chart, psi.degree), |acc, (a, c)| acc.add(&c.scale(a)))
            })
            .collect();
        Ok(VVForm { chart: self.chart.clone(), degree: psi.degree, comps })
    }

    /// The insertion operator on forms, `Σ_i ψ^i ∧ ι_{∂_i} σ`.
    pub fn insert(&self, sigma: &KForm) -> Result<KForm> {
        if sigma.chart() != &self.chart {
            return Err(Error::ChartMismatch);
        }
        let target = (self.degree + sigma.degree()).saturating_sub(1);
        if sigma.degree() == 0 {
            return Ok(KForm::zero(&self.chart, target));
        }
        let mut out = KForm::zero(&self.chart, target);
        for (i, psi) in self.comps.iter().enumerate() {
            if psi.is_zero() {
                continue;
            }
            let inner = sigma.contract(&VectorField::coordinate(&self.chart, i))?;
            if inner.is_zero() {
                continue;
            }
            out = out.add(&psi.wedge(&inner)?);
        }
        Ok(out)
    }

    /// Insertion into the form part of another tangent-valued form.
    pub fn insert_vv(&self, phi: &VVForm) -> Result<VVForm> {
        if phi.chart != self.chart {
            return Err(Error::ChartMismatch);
        }
        if phi.degree == 0 {
            let deg = self.degree.saturating_sub(1);
            return Ok(VVForm::zero(&self.chart, deg));
        }
        let comps = phi.comps.iter().map(|c| self.insert(c)).collect::<Result<_>>()?;
        Ok(VVForm { chart: self.chart.clone(), degree: self.degree + phi.degree - 1, comps })
    }

    /// `I_Ψ Φ` for `Ψ` of degree 2 and `Φ` of degree 1.
    pub fn i_product(psi: &VVForm, phi: &VVForm) -> Result<VVForm> {
        psi.expect_degree(2)?;
        phi.expect_degree(1)?;
        psi.insert_vv(phi)
    }

    pub fn fmt_pretty(&self) -> String {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("[{}] ⊗ ∂{}", c.fmt_pretty(), self.chart.names()[i]))
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

impl fmt::Display for VVForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_pretty())
    }
}
