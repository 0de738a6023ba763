//! Canonical Maurer–Cartan solutions `e_Φ = L_Φ + I_{b(Φ)}` and finite type.

use crate::dgla::{fn_bracket, Derivation};
use crate::error::{Error, Result};
use crate::forms::{KForm, VectorField};
use crate::linalg;
use crate::scalar::{Rational, Scalar};
use crate::vvform::VVForm;

/// `R_Φ = Id + Φ`.
pub fn r_phi(phi: &VVForm) -> Result<VVForm> {
    phi.expect_degree(1)?;
    Ok(VVForm::identity(phi.chart()).add(phi))
}

#[derive(Clone, Debug)]
pub struct Inverse {
    pub inverse: VVForm,
    pub determinant: Scalar,
}

impl Inverse {
    /// The inverse has poles where a non-constant determinant vanishes.
    pub fn warning(&self) -> Option<String> {
        (!self.determinant.is_constant()).then(|| {
            format!("determinant {} vanishes somewhere", self.determinant.fmt_with(self.inverse.chart().names()))
        })
    }
}

pub fn invert_endo(phi: &VVForm) -> Result<Inverse> {
    let m = phi.as_endo_matrix()?;
    let determinant = linalg::determinant(&m);
    if determinant.is_zero() {
        return Err(Error::NotInvertible);
    }
    let inv = linalg::inverse(&m).ok_or(Error::NotInvertible)?;
    Ok(Inverse { inverse: VVForm::from_endo_matrix(phi.chart(), &inv)?, determinant })
}

/// `d_Φ σ = R_Φ d (R_Φ⁻¹ σ)` with the pointwise action on forms.
pub fn d_phi_apply(phi: &VVForm, sigma: &KForm) -> Result<KForm> {
    let r = r_phi(phi)?;
    let r_inv = invert_endo(&r)?.inverse;
    r.act_on_form(&r_inv.act_on_form(sigma)?.d())
}

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

/// `b(Φ) = -½ R_Φ⁻¹ [Φ,Φ]`.
pub fn b_of_phi(phi: &VVForm) -> Result<VVForm> {
    let r_inv = invert_endo(&r_phi(phi)?)?.inverse;
    let bracket = fn_bracket(phi, phi)?;
    Ok(r_inv.compose(&bracket)?.scale_rational(&-half()))
}

#[derive(Clone, Debug)]
pub struct McSolution {
    pub phi: VVForm,
    pub b_phi: VVForm,
    pub e_phi: Derivation,
}

pub fn e_phi(phi: &VVForm) -> Result<McSolution> {
    let b_phi = b_of_phi(phi)?;
    let e_phi = Derivation::new(phi, &b_phi)?;
    Ok(McSolution { phi: phi.clone(), b_phi, e_phi })
}

/// `ℸD + ½[D,D]`.
pub fn mc_residual(d: &Derivation) -> Result<Derivation> {
    let sq = d.bracket(d)?;
    Ok(d.daleth()?.add(&sq.scale(&half())))
}

/// `Φ^k B` by repeated composition.
fn power_apply(phi: &VVForm, b: &VVForm, k: usize) -> Result<VVForm> {
    (0..k).try_fold(b.clone(), |acc, _| phi.compose(&acc))
}

/// Closed form: `γ₁ = L_Φ`, `γ_k = (-1)^{k+1} ½ I_{Φ^{k-2}[Φ,Φ]}`.
pub fn gamma_k(phi: &VVForm, k: usize) -> Result<Derivation> {
    phi.expect_degree(1)?;
    match k {
        0 => Err(Error::Precondition("gamma index starts at 1".into())),
        1 => Ok(Derivation::lie(phi)),
        _ => {
            let b = power_apply(phi, &fn_bracket(phi, phi)?, k - 2)?;
            let c = if k % 2 == 1 { half() } else { -half() };
            Ok(Derivation::insertion(&b.scale_rational(&c)))
        }
    }
}

/// `γ₁, …, γ_kmax` via `γ_k = -½ Σ_{p+q=k} ℵ[γ_p, γ_q]`.
///
/// Every bracket here has degree 2, so an extra `(-1)^k` would flip the odd
/// terms against the closed form and against `e_Φ = Σ γ_k`.
pub fn gamma_series_recursive(phi: &VVForm, kmax: usize) -> Result<Vec<Derivation>> {
    phi.expect_degree(1)?;
    let mut out = vec![Derivation::lie(phi)];
    for k in 2..=kmax {
        let mut sum = Derivation::zero(phi.chart(), 2);
        for p in 1..k {
            sum = sum.add(&out[p - 1].bracket(&out[k - p - 1])?);
        }
        out.push(sum.aleph().scale(&-half()));
    }
    out.truncate(kmax);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeValue {
    Finite(usize),
    /// `Φ^{k+1} = Φ^k` for `k = stable_from`, and `Φ^k[Φ,Φ] ≠ 0`.
    Infinite { stable_from: usize },
    ExceedsCap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub level: usize,
    pub pair: (usize, usize),
    pub value: VectorField,
}

#[derive(Clone, Debug)]
pub struct TypeReport {
    pub type_value: TypeValue,
    pub cap: usize,
    pub witness: Option<Witness>,
}

fn witness(b: &VVForm, level: usize) -> Option<Witness> {
    let chart = b.chart();
    let n = chart.dim();
    for a in 0..n {
        for c in a + 1..n {
            let (x, y) = (VectorField::coordinate(chart, a), VectorField::coordinate(chart, c));
            let v = b.apply(&[&x, &y]).expect("degree 2");
            if !v.is_zero() {
                return Some(Witness { level, pair: (a, c), value: v });
            }
        }
    }
    None
}

/// Least `r` with `Φ^r [Φ,Φ] = 0`.
pub fn finite_type(phi: &VVForm, cap: usize) -> Result<TypeReport> {
    if cap == 0 {
        return Err(Error::Precondition("cap must be at least 1".into()));
    }
    let m = phi.as_endo_matrix()?;
    let n = m.len();
    let mut stable = None;
    let mut pow = linalg::identity(n);
    for k in 0..=n {
        let next = linalg::matmul(&pow, &m);
        if next == pow {
            stable = Some(k);
            break;
        }
        pow = next;
    }
    let limit = stable.unwrap_or(cap);
    let mut b = fn_bracket(phi, phi)?;
    for level in 0..=limit {
        if b.is_zero() {
            let w = if level == 0 { None } else { witness(&power_apply(phi, &fn_bracket(phi, phi)?, level - 1)?, level - 1) };
            return Ok(TypeReport { type_value: TypeValue::Finite(level), cap, witness: w });
        }
        if level < limit {
            b = phi.compose(&b)?;
        }
    }
    let type_value = match stable {
        Some(k) => TypeValue::Infinite { stable_from: k },
        None => TypeValue::ExceedsCap,
    };
    Ok(TypeReport { type_value, cap, witness: witness(&b, limit) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgla::generators;
    use crate::forms::Chart;
    use crate::sample;

    fn r3() -> Chart {
        Chart::new(&["x", "y", "z"]).unwrap()
    }

    fn k_nil(c: &Chart) -> VVForm {
        VVForm::decomposable(&KForm::dx(c, 2), &VectorField::coordinate(c, 0)).unwrap()
    }

    fn heisenberg_flag(c: &Chart) -> VVForm {
        let m = vec![
            vec![Scalar::zero(), c.parse("-x").unwrap(), Scalar::one()],
            vec![Scalar::zero(); 3],
            vec![Scalar::zero(); 3],
        ];
        VVForm::from_endo_matrix(c, &m).unwrap()
    }

    fn proj(c: &Chart, gamma: &[(usize, &str)]) -> VVForm {
        let g = KForm::from_terms(c, 1, gamma.iter().map(|(i, s)| (vec![*i], c.parse(s).unwrap()))).unwrap();
        VVForm::decomposable(&g, &VectorField::coordinate(c, 2)).unwrap()
    }

    #[test]
    fn invert_examples() {
        let c = r3();
        let id = VVForm::identity(&c);
        let k = k_nil(&c);
        assert_eq!(invert_endo(&id.add(&k)).unwrap().inverse, id.sub(&k));
        assert_eq!(invert_endo(&id).unwrap().inverse, id);
        let singular = proj(&c, &[(2, "1")]).add(&VVForm::decomposable(&KForm::dx(&c, 0), &VectorField::coordinate(&c, 0)).unwrap());
        assert_eq!(invert_endo(&singular).unwrap_err(), Error::NotInvertible);
        let m = vec![
            vec![c.parse("x").unwrap(), Scalar::zero(), Scalar::zero()],
            vec![Scalar::zero(), Scalar::one(), Scalar::zero()],
            vec![Scalar::zero(), Scalar::zero(), Scalar::one()],
        ];
        let inv = invert_endo(&VVForm::from_endo_matrix(&c, &m).unwrap()).unwrap();
        assert!(inv.warning().is_some());
    }

    #[test]
    fn d_phi_examples() {
        let c = r3();
        let mut r = sample::rng(1);
        let sigma = sample::form(&mut r, &c, 1, 2);
        assert_eq!(d_phi_apply(&VVForm::zero(&c, 1), &sigma).unwrap(), sigma.d());
        let k = k_nil(&c);
        let f = KForm::function(&c, c.parse("x^2*z").unwrap());
        let v = sample::vector_field(&mut r, &c, 1);
        let lhs = d_phi_apply(&k, &f).unwrap().eval_on(&[&v]).unwrap();
        let df = f.d();
        let rhs = df.eval_on(&[&v]).unwrap().add(&df.eval_on(&[&k.apply(&[&v]).unwrap()]).unwrap());
        assert_eq!(lhs, rhs);
        let x_dy = KForm::dx(&c, 1).scale(&c.coord(0));
        assert!(d_phi_apply(&k, &d_phi_apply(&k, &x_dy).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn b_examples() {
        let c = r3();
        assert!(b_of_phi(&proj(&c, &[(2, "1")])).unwrap().is_zero());
        assert!(b_of_phi(&VVForm::zero(&c, 1)).unwrap().is_zero());
        let phi = heisenberg_flag(&c);
        let b = b_of_phi(&phi).unwrap();
        let y = VectorField::parse(&c, &["0", "1", "x"]).unwrap();
        let z = VectorField::coordinate(&c, 2);
        assert_eq!(b.apply(&[&y, &z]).unwrap(), VectorField::parse(&c, &["-1", "0", "0"]).unwrap());
    }

    #[test]
    fn e_phi_matches_conjugated_differential() {
        let c = r3();
        assert!(e_phi(&VVForm::zero(&c, 1)).unwrap().e_phi.is_zero());
        let mut r = sample::rng(2);
        for phi in [k_nil(&c), sample::nilpotent_endo(&mut r, &c, 2)] {
            let e = e_phi(&phi).unwrap().e_phi;
            for sigma in generators(&c) {
                let expected = d_phi_apply(&phi, &sigma).unwrap().sub(&sigma.d());
                assert_eq!(e.apply(&sigma).unwrap(), expected);
            }
            assert!(mc_residual(&e).unwrap().is_zero());
        }
    }

    #[test]
    fn perturbed_solution_fails() {
        let c = r3();
        let phi = k_nil(&c);
        let b = b_of_phi(&phi).unwrap();
        let area = KForm::dx(&c, 0).wedge(&KForm::dx(&c, 1)).unwrap();
        let delta = VVForm::decomposable(&area, &VectorField::coordinate(&c, 0)).unwrap();
        let d = Derivation::new(&phi, &b.add(&delta)).unwrap();
        assert!(!mc_residual(&d).unwrap().is_zero());
        assert!(mc_residual(&Derivation::zero(&c, 1)).unwrap().is_zero());
    }

    #[test]
    fn gamma_paths_agree() {
        let c = r3();
        let mut r = sample::rng(3);
        for phi in [heisenberg_flag(&c), sample::nilpotent_endo(&mut r, &c, 1), sample::endo(&mut r, &c, 1)] {
            let rec = gamma_series_recursive(&phi, 5).unwrap();
            for (k, g) in rec.iter().enumerate() {
                assert!(g.same_as(&gamma_k(&phi, k + 1).unwrap()), "k = {}", k + 1);
            }
        }
        let phi = heisenberg_flag(&c);
        assert!(gamma_k(&phi, 3).unwrap().is_zero());
        let sum = gamma_k(&phi, 1).unwrap().add(&gamma_k(&phi, 2).unwrap());
        assert!(sum.same_as(&e_phi(&phi).unwrap().e_phi));
        // nilpotent of index 3: the series stops after γ₄
        let phi = sample::nilpotent_endo(&mut r, &c, 1);
        let sum = (1..=4).fold(Derivation::zero(&c, 1), |acc, k| acc.add(&gamma_k(&phi, k).unwrap()));
        assert!(sum.same_as(&e_phi(&phi).unwrap().e_phi));
    }

    #[test]
    fn type_examples() {
        let c = r3();
        assert_eq!(finite_type(&proj(&c, &[(2, "1")]), 16).unwrap().type_value, TypeValue::Finite(0));
        let t = finite_type(&heisenberg_flag(&c), 16).unwrap();
        assert_eq!(t.type_value, TypeValue::Finite(1));
        assert_eq!(t.witness.unwrap().level, 0);
        let t = finite_type(&proj(&c, &[(2, "1"), (1, "-x")]), 16).unwrap();
        assert!(matches!(t.type_value, TypeValue::Infinite { .. }));
        let w = t.witness.unwrap();
        assert_eq!((w.pair, w.value), ((0, 1), VectorField::parse(&c, &["0", "0", "2"]).unwrap()));
    }
}
