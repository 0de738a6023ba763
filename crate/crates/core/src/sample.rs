//! Seeded random objects for property tests and the scenario runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dgla::Derivation;
use crate::forms::{Chart, KForm, VectorField};
use crate::linalg::{self, Matrix};
use crate::scalar::{Monomial, Poly, Rational, Scalar};
use crate::vvform::VVForm;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_int(rng: &mut SampleRng, bound: i64) -> i64 {
    loop {
        let v = rng.gen_range(-bound..=bound);
        if v != 0 {
            return v;
        }
    }
}

/// A polynomial with up to `max_terms` terms of total degree `≤ max_degree`.
pub fn poly(rng: &mut SampleRng, nvars: usize, max_degree: u16, max_terms: usize) -> Poly {
    let count = rng.gen_range(1..=max_terms.max(1));
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let mut exps = vec![0u16; nvars];
        let total = rng.gen_range(0..=max_degree);
        for _ in 0..total {
            exps[rng.gen_range(0..nvars)] += 1;
        }
        terms.push((Monomial::from_exponents(&exps), Rational::from_integer(small_int(rng, 3).into())));
    }
    Poly::from_terms(terms)
}

pub fn polynomial(rng: &mut SampleRng, chart: &Chart, max_degree: u16, max_terms: usize) -> Scalar {
    Scalar::from_poly(poly(rng, chart.dim(), max_degree, max_terms))
}

/// A sparse coefficient: zero with probability `1 - density`.
fn sparse(rng: &mut SampleRng, chart: &Chart, max_degree: u16, density: f64) -> Scalar {
    if rng.gen_bool(density) {
        polynomial(rng, chart, max_degree, 2)
    } else {
        Scalar::zero()
    }
}

pub fn vector_field(rng: &mut SampleRng, chart: &Chart, max_degree: u16) -> VectorField {
    let comps = (0..chart.dim()).map(|_| sparse(rng, chart, max_degree, 0.6)).collect();
    VectorField::new(chart, comps).expect("arity")
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

pub fn form(rng: &mut SampleRng, chart: &Chart, degree: usize, max_degree: u16) -> KForm {
    let terms: Vec<_> = subsets(chart.dim(), degree)
        .into_iter()
        .map(|idx| (idx, sparse(rng, chart, max_degree, 0.5)))
        .collect();
    KForm::from_terms(chart, degree, terms).expect("valid indices")
}

pub fn vvform(rng: &mut SampleRng, chart: &Chart, degree: usize, max_degree: u16) -> VVForm {
    let comps = (0..chart.dim()).map(|_| form(rng, chart, degree, max_degree)).collect();
    VVForm::new(chart, degree, comps).expect("consistent components")
}

pub fn endo(rng: &mut SampleRng, chart: &Chart, max_degree: u16) -> VVForm {
    vvform(rng, chart, 1, max_degree)
}

/// A constant integer matrix with determinant one.
pub fn unimodular(rng: &mut SampleRng, n: usize) -> (Matrix, Matrix) {
    let mut lower = linalg::identity(n);
    let mut upper = linalg::identity(n);
    for i in 0..n {
        for j in 0..i {
            lower[i][j] = Scalar::int(rng.gen_range(-2..=2));
            upper[j][i] = Scalar::int(rng.gen_range(-2..=2));
        }
    }
    let p = linalg::matmul(&lower, &upper);
    let inv = linalg::inverse(&p).expect("unimodular");
    (p, inv)
}

/// `P N P⁻¹` with `N` strictly upper triangular with polynomial entries of
/// degree `≤ max_degree` and `P` constant, so the matrix part is nilpotent.
pub fn nilpotent_endo(rng: &mut SampleRng, chart: &Chart, max_degree: u16) -> VVForm {
    let n = chart.dim();
    let mut nil = linalg::zeros(n, n);
    for (i, row) in nil.iter_mut().enumerate() {
        for entry in row.iter_mut().skip(i + 1) {
            *entry = sparse(rng, chart, max_degree, 0.7);
        }
    }
    let (p, inv) = unimodular(rng, n);
    let m = linalg::matmul(&linalg::matmul(&p, &nil), &inv);
    VVForm::from_endo_matrix(chart, &m).expect("square matrix")
}

/// A derivation `L_Φ + I_Ψ` of degree `k ∈ [-1, n]`.
pub fn derivation(rng: &mut SampleRng, chart: &Chart, degree: i32, max_degree: u16) -> Derivation {
    let psi = vvform(rng, chart, (degree + 1) as usize, max_degree);
    if degree < 0 {
        return Derivation::insertion(&psi);
    }
    let phi = vvform(rng, chart, degree as usize, max_degree);
    Derivation::new(&phi, &psi).expect("consistent degrees")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nilpotent_matrix_part() {
        let c = Chart::new(&["x", "y", "z"]).unwrap();
        let mut r = rng(7);
        for _ in 0..5 {
            let m = nilpotent_endo(&mut r, &c, 2).as_endo_matrix().unwrap();
            assert!(linalg::is_zero(&linalg::mat_pow(&m, 3)));
        }
    }

    #[test]
    fn seeded_reproducibility() {
        let c = Chart::numbered(3).unwrap();
        let a = vvform(&mut rng(11), &c, 2, 2);
        let b = vvform(&mut rng(11), &c, 2, 2);
        assert_eq!(a, b);
    }
}
