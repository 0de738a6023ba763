//! Real hypersurfaces in `ℂⁿ` with the standard complex structure.
//!
//! Coordinates are ordered `(x₁, y₁, …, x_n, y_n)` with `J∂x_i = ∂y_i`
//! and `J∂y_i = -∂x_i`. On 1-forms `J` acts by precomposition, and
//! `d^c f = -J df`, so `d^c f (V) = -df(JV)`.

use num::complex::Complex64;
use num::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::foliation::DefiningCouple;
use crate::forms::{Chart, KForm, VectorField};
use crate::linalg::{self, Matrix};
use crate::sample;
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexChart {
    chart: Chart,
    metric: Matrix,
}

impl ComplexChart {
    pub fn new(chart: &Chart, metric: Option<Matrix>) -> Result<Self> {
        let m = chart.dim();
        if m % 2 != 0 {
            return Err(Error::OddDimension);
        }
        let metric = metric.unwrap_or_else(|| linalg::identity(m));
        if metric.len() != m || metric.iter().any(|r| r.len() != m) {
            return Err(Error::ArityMismatch { expected: m, found: metric.len() });
        }
        for i in 0..m {
            for j in 0..i {
                if metric[i][j] != metric[j][i] {
                    return Err(Error::Precondition("metric is not symmetric".into()));
                }
            }
        }
        let origin = vec![Rational::zero(); m];
        for k in 1..=m {
            let minor: Matrix = metric[..k].iter().map(|r| r[..k].to_vec()).collect();
            let v = linalg::determinant(&minor).eval(&origin)?;
            if v <= Rational::zero() {
                return Err(Error::Precondition("metric is not positive definite at the origin".into()));
            }
        }
        Ok(ComplexChart { chart: chart.clone(), metric })
    }

    /// `ℂⁿ` with coordinates `x1, y1, …, xn, yn` and the Euclidean metric.
    pub fn standard(n: usize) -> Result<Self> {
        let names: Vec<String> = (1..=n).flat_map(|i| [format!("x{i}"), format!("y{i}")]).collect();
        Self::new(&Chart::new(&names)?, None)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn metric(&self) -> &Matrix {
        &self.metric
    }

    pub fn complex_dim(&self) -> usize {
        self.chart.dim() / 2
    }

    pub fn j_vector(&self, v: &VectorField) -> VectorField {
        let c = v.comps();
        let mut out = vec![Scalar::zero(); c.len()];
        for i in 0..self.complex_dim() {
            out[2 * i + 1] = c[2 * i].clone();
            out[2 * i] = c[2 * i + 1].neg();
        }
        VectorField::new(&self.chart, out).expect("same arity")
    }

    /// `(Jσ)(V) = σ(JV)` on 1-forms.
    pub fn j_form(&self, sigma: &KForm) -> Result<KForm> {
        if sigma.degree() != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: sigma.degree() as i32 });
        }
        let terms = (0..self.complex_dim()).flat_map(|i| {
            [(vec![2 * i], sigma.coeff(&[2 * i + 1])), (vec![2 * i + 1], sigma.coeff(&[2 * i]).neg())]
        });
        KForm::from_terms(&self.chart, 1, terms)
    }

    pub fn dc(&self, f: &Scalar) -> KForm {
        self.j_form(&KForm::function(&self.chart, f.clone()).d()).expect("1-form").neg()
    }

    /// `∂²r/∂z_i∂z̄_j`, split into real and imaginary parts.
    pub fn levi_form(&self, r: &Scalar) -> LeviMatrix {
        let n = self.complex_dim();
        let d2 = |a: usize, b: usize| r.partial(a).partial(b);
        let quarter = Rational::new(1.into(), 4.into());
        let mut re = linalg::zeros(n, n);
        let mut im = linalg::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                re[i][j] = d2(xi, xj).add(&d2(yi, yj)).scale(&quarter);
                im[i][j] = d2(xi, yj).sub(&d2(yi, xj)).scale(&quarter);
            }
        }
        LeviMatrix { re, im }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeviMatrix {
    pub re: Matrix,
    pub im: Matrix,
}

impl LeviMatrix {
    pub fn is_zero(&self) -> bool {
        linalg::is_zero(&self.re) && linalg::is_zero(&self.im)
    }

    fn eval(&self, point: &[Rational]) -> Result<Vec<Vec<Complex64>>> {
        let n = self.re.len();
        let mut out = vec![vec![Complex64::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                out[i][j] = Complex64::new(self.re[i][j].eval_f64(point)?, self.im[i][j].eval_f64(point)?);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypersurface {
    cchart: ComplexChart,
    r: Scalar,
}

impl Hypersurface {
    pub fn new(cchart: &ComplexChart, r: &Scalar) -> Result<Self> {
        if (0..cchart.chart.dim()).all(|i| r.partial(i).is_zero()) {
            return Err(Error::NullGradient);
        }
        Ok(Hypersurface { cchart: cchart.clone(), r: r.clone() })
    }

    pub fn complex_chart(&self) -> &ComplexChart {
        &self.cchart
    }

    pub fn chart(&self) -> &Chart {
        &self.cchart.chart
    }

    pub fn r(&self) -> &Scalar {
        &self.r
    }

    pub fn dr(&self) -> KForm {
        KForm::function(self.chart(), self.r.clone()).d()
    }

    /// `d^c r`, the defining form `γ` of the Levi couple.
    pub fn gamma(&self) -> KForm {
        self.cchart.dc(&self.r)
    }

    /// True when `f` vanishes identically or on `{r = 0}` by divisibility.
    fn vanishes_on(&self, f: &Scalar) -> bool {
        if f.is_zero() {
            return true;
        }
        let rn = self.r.numerator();
        !rn.is_constant() && f.numerator().div_exact(rn).is_some()
    }
}

#[derive(Clone, Debug)]
pub struct CanonicalCouple {
    pub couple: DefiningCouple,
    pub z: VectorField,
    pub warnings: Vec<String>,
}

impl CanonicalCouple {
    pub fn x_field(&self) -> &VectorField {
        self.couple.x_field()
    }

    pub fn gamma(&self) -> &KForm {
        self.couple.gamma()
    }
}

/// `Z = grad_g r / |grad_g r|²`, `X = JZ`, `γ = d^c r`.
pub fn canonical_couple(h: &Hypersurface) -> Result<CanonicalCouple> {
    let chart = h.chart();
    let m = chart.dim();
    let dr: Vec<Scalar> = (0..m).map(|i| h.r.partial(i)).collect();
    let g_inv = linalg::inverse(&h.cchart.metric).ok_or(Error::NotInvertible)?;
    let grad = linalg::matmul(&g_inv, &linalg::transpose(&vec![dr.clone()]));
    let grad: Vec<Scalar> = grad.into_iter().map(|r| r[0].clone()).collect();
    let norm = dr.iter().zip(&grad).fold(Scalar::zero(), |acc, (a, b)| acc.add(&a.mul(b)));
    if norm.is_zero() {
        return Err(Error::NullGradient);
    }
    let inv = norm.recip()?;
    let z = VectorField::new(chart, grad.iter().map(|g| g.mul(&inv)).collect())?;
    let x = h.cchart.j_vector(&z);
    let couple = DefiningCouple::new(&h.gamma(), &x)?;
    let mut warnings = Vec::new();
    let drx = h.dr().eval_on(&[&x])?;
    if !drx.is_zero() {
        warnings.push(format!("dr(X) = {} (metric not J-invariant)", chart.fmt_scalar(&drx)));
    }
    Ok(CanonicalCouple { couple, z, warnings })
}

/// `p^Y = dr(Y) = ⟨Y, grad_g r⟩_g`.
pub fn p_of_y(h: &Hypersurface, y: &VectorField) -> Result<Scalar> {
    h.dr().eval_on(&[y])
}

/// `-d^c p`, the first-order variation of `γ` along the deformation with velocity `p`.
pub fn dgamma_dt(h: &Hypersurface, p: &Scalar) -> KForm {
    h.cchart.dc(p).neg()
}

#[derive(Clone, Debug)]
pub struct Residual {
    pub value: Scalar,
    pub warnings: Vec<String>,
}

/// `(dd^c p + ι_X dγ ∧ d^c p)(V, W)`.
pub fn deformation_residual(h: &Hypersurface, p: &Scalar, v: &VectorField, w: &VectorField) -> Result<Residual> {
    let cc = canonical_couple(h)?;
    let mut warnings = cc.warnings.clone();
    let gamma = cc.gamma();
    let dr = h.dr();
    for (name, u) in [("V", v), ("W", w)] {
        let tangent = h.vanishes_on(&gamma.eval_on(&[u])?) && h.vanishes_on(&dr.eval_on(&[u])?);
        if !tangent {
            warnings.push(format!("{name} is not tangent to the Levi distribution"));
        }
    }
    let dcp = h.cchart.dc(p);
    let form = dcp.d().add(&gamma.d().contract(cc.x_field())?.wedge(&dcp)?);
    Ok(Residual { value: form.eval_on(&[v, w])?, warnings })
}

#[derive(Clone, Debug)]
pub struct LeviFlatReport {
    /// Restricted Levi form below tolerance at every sampled point.
    pub numeric: bool,
    /// `TL ∩ JTL` closed under brackets modulo `r`.
    pub symbolic: bool,
    pub points: usize,
    pub max_restricted: f64,
    pub witness: Option<String>,
}

impl LeviFlatReport {
    pub fn flat(&self) -> bool {
        self.numeric && self.symbolic
    }

    pub fn agree(&self) -> bool {
        self.numeric == self.symbolic
    }
}

const BOX: i64 = 2;
const STEPS: i64 = 64;
const NUMERIC_TOL: f64 = 1e-6;

fn sign_at(r: &Scalar, p: &[Rational]) -> Option<std::cmp::Ordering> {
    r.eval(p).ok().map(|v| v.cmp(&Rational::zero()))
}

/// Roots of `r` along random coordinate lines in `[-2, 2]^{2n}`, refined by
/// exact bisection to width below `1e-9`.
pub fn sample_points(h: &Hypersurface, count: usize, seed: u64) -> Result<Vec<Vec<Rational>>> {
    use std::cmp::Ordering::*;
    let m = h.chart().dim();
    let mut rng = sample::rng(seed);
    let tol = Rational::new(1.into(), 1_000_000_000.into());
    let step = Rational::new((2 * BOX).into(), STEPS.into());
    let mut out = Vec::new();
    for _ in 0..count * 64 {
        if out.len() == count {
            break;
        }
        let mut base: Vec<Rational> =
            (0..m).map(|_| Rational::new(rng.gen_range(-8 * BOX..=8 * BOX).into(), 8.into())).collect();
        let axis = rng.gen_range(0..m);
        let mut prev: Option<(Rational, std::cmp::Ordering)> = None;
        for k in 0..=STEPS {
            let t = Rational::from_integer((-BOX).into()) + &step * Rational::from_integer(k.into());
            base[axis] = t.clone();
            let Some(s) = sign_at(&h.r, &base) else {
                prev = None;
                continue;
            };
            if s == Equal {
                out.push(base.clone());
                break;
            }
            if let Some((lo_t, lo_s)) = &prev {
                if *lo_s != s {
                    let (mut lo, mut hi) = (lo_t.clone(), t.clone());
                    let mut ok = true;
                    while &hi - &lo >= tol {
                        let mid = (&lo + &hi) / Rational::from_integer(2.into());
                        base[axis] = mid.clone();
                        match sign_at(&h.r, &base) {
                            Some(Equal) => {
                                lo = mid.clone();
                                hi = mid;
                            }
                            Some(ms) if ms == *lo_s => lo = mid,
                            Some(_) => hi = mid,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        base[axis] = (&lo + &hi) / Rational::from_integer(2.into());
                        out.push(base.clone());
                    }
                    break;
                }
            }
            prev = Some((t, s));
        }
    }
    if out.is_empty() {
        return Err(Error::NoRealPoints);
    }
    Ok(out)
}

/// Largest entry of the Levi form restricted to the complex tangent space at `p`.
fn restricted_levi_norm(h: &Hypersurface, levi: &LeviMatrix, p: &[Rational]) -> Result<f64> {
    let n = h.cchart.complex_dim();
    let grad: Vec<f64> = (0..2 * n).map(|i| h.r.partial(i).eval_f64(p)).collect::<Result<_>>()?;
    // ∂r/∂z_i = ½(r_x - i r_y)
    let a: Vec<Complex64> = (0..n).map(|i| Complex64::new(grad[2 * i], -grad[2 * i + 1]) * 0.5).collect();
    let pivot = (0..n).max_by(|&i, &j| a[i].norm().total_cmp(&a[j].norm())).expect("n ≥ 1");
    if a[pivot].norm() == 0.0 {
        return Err(Error::NullGradient);
    }
    let basis: Vec<Vec<Complex64>> = (0..n)
        .filter(|&j| j != pivot)
        .map(|j| {
            let mut v = vec![Complex64::zero(); n];
            v[j] = Complex64::new(1.0, 0.0);
            v[pivot] = -a[j] / a[pivot];
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|c| c / norm).collect()
        })
        .collect();
    let hm = levi.eval(p)?;
    let mut worst = 0.0f64;
    for u in &basis {
        for w in &basis {
            let mut s = Complex64::zero();
            for i in 0..n {
                for l in 0..n {
                    s += hm[i][l] * u[i] * w[l].conj();
                }
            }
            worst = worst.max(s.norm());
        }
    }
    Ok(worst)
}

/// Obstruction `d^c r([V_i, V_j])` over generators of `ker dr ∩ ker d^c r`.
fn symbolic_obstruction(h: &Hypersurface) -> Result<Option<String>> {
    let chart = h.chart();
    let m = chart.dim();
    let dr = h.dr();
    let gamma = h.gamma();
    let row = |f: &KForm| (0..m).map(|i| f.coeff(&[i])).collect::<Vec<_>>();
    let gens: Vec<VectorField> = linalg::nullspace(&vec![row(&dr), row(&gamma)], m)
        .into_iter()
        .map(|v| VectorField::new(chart, v))
        .collect::<Result<_>>()?;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let b = gens[i].lie_bracket(&gens[j])?;
            let q = gamma.eval_on(&[&b])?;
            if !h.vanishes_on(&q) {
                return Ok(Some(format!("d^c r([V{i}, V{j}]) = {}", chart.fmt_scalar(&q))));
            }
        }
    }
    Ok(None)
}

pub fn is_levi_flat(h: &Hypersurface, samples: usize, seed: u64) -> Result<LeviFlatReport> {
    let levi = h.cchart.levi_form(&h.r);
    let points = sample_points(h, samples.max(1), seed)?;
    let mut max_restricted = 0.0f64;
    let mut witness = None;
    for p in &points {
        let v = restricted_levi_norm(h, &levi, p)?;
        if v > max_restricted {
            max_restricted = v;
            if v > NUMERIC_TOL {
                let coords: Vec<String> = p.iter().map(|c| format!("{:.6}", c.to_f64().unwrap_or(f64::NAN))).collect();
                witness = Some(format!("restricted Levi form {v:.6} at ({})", coords.join(", ")));
            }
        }
    }
    let obstruction = symbolic_obstruction(h)?;
    let symbolic = obstruction.is_none();
    Ok(LeviFlatReport {
        numeric: max_restricted <= NUMERIC_TOL,
        symbolic,
        points: points.len(),
        max_restricted,
        witness: witness.or(obstruction),
    })
}
