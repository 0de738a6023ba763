//! Sparse multivariate polynomials over the rationals.
//!
//! Terms are kept sorted in descending graded-lexicographic order with no
//! zero coefficients, so structural equality is polynomial equality.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Maximum number of chart coordinates a polynomial may reference.
pub const MAX_VARS: usize = 12;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial([u16; MAX_VARS]);

impl Monomial {
    pub fn one() -> Self {
        Monomial([0; MAX_VARS])
    }

    pub fn var(i: usize) -> Self {
        let mut e = [0; MAX_VARS];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exps: &[u16]) -> Self {
        let mut e = [0; MAX_VARS];
        e[..exps.len()].copy_from_slice(exps);
        Monomial(e)
    }

    pub fn exp(&self, i: usize) -> u16 {
        self.0[i]
    }

    pub fn exponents(&self) -> &[u16; MAX_VARS] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
        Monomial(e)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming `self.divides(other)`.
    pub fn quotient_of(&self, other: &Monomial) -> Monomial {
        let mut e = other.0;
        for (a, b) in e.iter_mut().zip(self.0.iter()) {
            *a -= *b;
        }
        Monomial(e)
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a = (*a).min(*b);
        }
        Monomial(e)
    }

    fn with_exp(&self, i: usize, value: u16) -> Monomial {
        let mut e = self.0;
        e[i] = value;
        Monomial(e)
    }

    pub fn var_mask(&self) -> u32 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .fold(0, |m, (i, _)| m | (1 << i))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    terms: Vec<(Monomial, Rational)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    pub fn var(i: usize) -> Self {
        Self::term(Monomial::var(i), Rational::one())
    }

    /// Builds a polynomial from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m, c) in terms {
            *acc.entry(m).or_insert_with(Rational::zero) += c;
        }
        let terms = acc.into_iter().rev().filter(|(_, c)| !c.is_zero()).collect();
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn lead(&self) -> Option<&(Monomial, Rational)> {
        self.terms.first()
    }

    pub fn lead_coeff(&self) -> Rational {
        self.terms.first().map(|t| t.1.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.first().map(|t| t.0.degree()).unwrap_or(0)
    }

    pub fn var_mask(&self) -> u32 {
        self.terms.iter().fold(0, |m, (mono, _)| m | mono.var_mask())
    }

    pub fn degree_in(&self, v: usize) -> u16 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    fn merge(&self, other: &Poly, negate_other: bool) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate_other { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0, c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate_other { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        for t in &b[j..] {
            let c = if negate_other { -&t.1 } else { t.1.clone() };
            out.push((t.0, c));
        }
        Poly { terms: out }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.merge(other, true)
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn scale(&self, q: &Rational) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, c * q)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, q: &Rational) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        // multiplying by a monomial preserves the grlex order
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * q)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if other.terms.len() == 1 {
            let (m, c) = &other.terms[0];
            return self.mul_term(m, c);
        }
        if self.terms.len() == 1 {
            let (m, c) = &self.terms[0];
            return other.mul_term(m, c);
        }
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let prod = ca * cb;
                acc.entry(ma.mul(mb))
                    .and_modify(|c| *c += &prod)
                    .or_insert(prod);
            }
        }
        Poly {
            terms: acc.into_iter().rev().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn partial(&self, v: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.exp(v) > 0)
            .map(|(m, c)| {
                let e = m.exp(v);
                (m.with_exp(v, e - 1), c * Rational::from_integer(BigInt::from(e)))
            });
        Poly::from_terms(terms)
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let x = point.get(i).ok_or(Error::IndexOutOfRange {
                    index: i,
                    dim: point.len(),
                })?;
                t *= num::pow::pow(x.clone(), e as usize);
            }
            total += t;
        }
        Ok(total)
    }

    /// Replaces the variable `v` by the constant `value`.
    pub fn substitute(&self, v: usize, value: &Rational) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            let e = m.exp(v) as usize;
            (m.with_exp(v, 0), c * num::pow::pow(value.clone(), e))
        }))
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        let (lm, lc) = divisor.lead()?;
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let mut rem = self.clone();
        let mut quotient = Vec::new();
        while let Some((m, c)) = rem.lead().cloned() {
            if !lm.divides(&m) {
                return None;
            }
            let qm = lm.quotient_of(&m);
            let qc = c / lc;
            rem = rem.sub(&divisor.mul_term(&qm, &qc));
            quotient.push((qm, qc));
        }
        Some(Poly { terms: quotient })
    }

    /// Scales so the grlex-leading coefficient is one.
    pub fn monic(&self) -> Poly {
        match self.lead() {
            Some((_, c)) if !c.is_one() => self.scale(&c.recip()),
            _ => self.clone(),
        }
    }

    pub fn is_positive_lead(&self) -> bool {
        self.lead().is_some_and(|(_, c)| c.is_positive())
    }

    fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter().map(|t| t.0);
        let first = it.next().unwrap_or_default();
        it.fold(first, |g, m| g.gcd(&m))
    }

    pub fn fmt_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            for (i, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
                if e == 1 {
                    factors.push(name);
                } else {
                    factors.push(format!("{name}^{e}"));
                }
            }
            if factors.is_empty() {
                let _ = write!(out, "{abs}");
            } else {
                if !abs.is_one() {
                    let _ = write!(out, "{abs}*");
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

fn to_univariate(p: &Poly, v: usize) -> Vec<Poly> {
    let mut coeffs = vec![Poly::zero(); p.degree_in(v) as usize + 1];
    for (m, c) in &p.terms {
        let e = m.exp(v) as usize;
        coeffs[e].terms.push((m.with_exp(v, 0), c.clone()));
    }
    coeffs
}

fn from_univariate(u: &[Poly], v: usize) -> Poly {
    let mut acc = Poly::zero();
    for (e, c) in u.iter().enumerate() {
        if !c.is_zero() {
            acc = acc.add(&c.mul_term(&Monomial::one().with_exp(v, e as u16), &Rational::one()));
        }
    }
    acc
}

fn udeg(u: &[Poly]) -> Option<usize> {
    u.iter().rposition(|c| !c.is_zero())
}

fn content(u: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in u {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, c);
        if g.is_constant() {
            return Poly::one();
        }
    }
    g
}

fn primitive(u: &[Poly], cont: &Poly) -> Vec<Poly> {
    u.iter()
        .map(|c| c.div_exact(cont).expect("content divides every coefficient"))
        .collect()
}

/// Scales a univariate polynomial to integer coefficients with unit content.
fn numeric_primitive(u: Vec<Poly>) -> Vec<Poly> {
    let mut lcm = BigInt::one();
    let mut g = BigInt::zero();
    for (_, c) in u.iter().flat_map(|p| p.terms.iter()) {
        lcm = lcm.lcm(c.denom());
        g = g.gcd(c.numer());
    }
    if g.is_zero() {
        return u;
    }
    let factor = Rational::new(lcm, g);
    if factor.is_one() {
        return u;
    }
    u.iter().map(|p| p.scale(&factor)).collect()
}

fn pseudo_remainder(f: &[Poly], g: &[Poly]) -> Vec<Poly> {
    let dg = udeg(g).expect("nonzero divisor");
    let lcg = &g[dg];
    let mut r: Vec<Poly> = f.to_vec();
    while let Some(dr) = udeg(&r) {
        if dr < dg {
            break;
        }
        let lcr = r[dr].clone();
        let shift = dr - dg;
        for c in r.iter_mut() {
            *c = c.mul(lcg);
        }
        for (i, gc) in g[..=dg].iter().enumerate() {
            let t = gc.mul(&lcr);
            r[i + shift] = r[i + shift].sub(&t);
        }
        r.truncate(dr);
    }
    r
}

/// Monic greatest common divisor; `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a.terms.len() == 1 || b.terms.len() == 1 {
        let m = a.monomial_content().gcd(&b.monomial_content());
        return Poly::term(m, Rational::one());
    }
    let common = a.var_mask() & b.var_mask();
    if common == 0 {
        return Poly::one();
    }
    if a.div_exact(b).is_some() {
        return b.monic();
    }
    if b.div_exact(a).is_some() {
        return a.monic();
    }
    let v = common.trailing_zeros() as usize;
    let ua = to_univariate(a, v);
    let ub = to_univariate(b, v);
    let ca = content(&ua);
    let cb = content(&ub);
    let c = gcd(&ca, &cb);
    let pa = numeric_primitive(primitive(&ua, &ca));
    let pb = numeric_primitive(primitive(&ub, &cb));
    let (mut f, mut g) = if udeg(&pa) >= udeg(&pb) { (pa, pb) } else { (pb, pa) };
    loop {
        let r = pseudo_remainder(&f, &g);
        match udeg(&r) {
            None => break,
            Some(0) => {
                g = vec![Poly::one()];
                break;
            }
            Some(_) => {
                let cr = content(&r);
                f = g;
                g = numeric_primitive(primitive(&r, &cr));
            }
        }
    }
    from_univariate(&g, v).mul(&c).monic()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn x() -> Poly {
        Poly::var(0)
    }
    fn y() -> Poly {
        Poly::var(1)
    }

    #[test]
    fn grlex_order() {
        let x2 = Monomial::from_exponents(&[2]);
        let xy = Monomial::from_exponents(&[1, 1]);
        let y2 = Monomial::from_exponents(&[0, 2]);
        let x = Monomial::var(0);
        assert!(x2 > xy && xy > y2 && y2 > x);
    }

    #[test]
    fn exact_division() {
        let a = x().mul(&x()).sub(&Poly::one());
        let b = x().sub(&Poly::one());
        assert_eq!(a.div_exact(&b), Some(x().add(&Poly::one())));
        assert_eq!(a.div_exact(&y()), None);
    }

    #[test]
    fn gcd_multivariate() {
        // (x + y)(x - y)^2 and (x + y)^2 (x + 1)
        let s = x().add(&y());
        let d = x().sub(&y());
        let a = s.mul(&d).mul(&d);
        let b = s.mul(&s).mul(&x().add(&Poly::one()));
        assert_eq!(gcd(&a, &b), s.monic());
    }

    #[test]
    fn gcd_with_scaling_and_monomials() {
        let a = x().mul(&y()).scale(&q(6));
        let b = x().mul(&x()).add(&x()).scale(&q(4));
        assert_eq!(gcd(&a, &b), x());
        let z = Poly::var(2);
        let a = z.mul(&z).mul(&x()).add(&y().mul(&z));
        let b = z.mul(&x().add(&Poly::one()));
        assert_eq!(gcd(&a, &b), z);
    }

    #[test]
    fn gcd_coprime() {
        let a = x().mul(&x()).add(&y());
        let b = x().add(&y().mul(&y()));
        assert!(gcd(&a, &b).is_one());
    }
}
