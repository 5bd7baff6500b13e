//! Sparse multivariate polynomials keyed by exponent vector.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::multiindex::MultiIndex;
use crate::scalar::Scalar;

pub type Exponent = Vec<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly<S: Scalar> {
    dim: usize,
    terms: BTreeMap<Exponent, S>,
}

impl<S: Scalar> MultiPoly<S> {
    pub fn zero(dim: usize) -> Self {
        MultiPoly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, S::one())
    }

    pub fn monomial(exp: Exponent, c: S) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    /// The coordinate `x_i` (0-based).
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(e, S::one())
    }

    /// Univariate polynomial from coefficients in increasing degree.
    pub fn univariate(coeffs: &[S]) -> Self {
        let mut p = Self::zero(1);
        for (k, c) in coeffs.iter().enumerate() {
            p.add_term(vec![k as u32], c.clone());
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &[u32]) -> S {
        self.terms.get(exp).cloned().unwrap_or_else(S::zero)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn add_term(&mut self, exp: Exponent, c: S) {
        assert_eq!(exp.len(), self.dim, "exponent dimension");
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(v) => {
                let nv = v.clone() + c;
                if nv.is_zero() {
                    self.terms.remove(&exp);
                } else {
                    *v = nv;
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut p = Self::zero(self.dim);
        for (e, v) in &self.terms {
            p.add_term(e.clone(), v.clone() * c.clone());
        }
        p
    }

    /// `∂/∂x_i` (0-based coordinate).
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.dim);
        for (e, v) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[i] -= 1;
            p.add_term(ne, v.clone() * S::from_i64(e[i] as i64));
        }
        p
    }

    /// `∂_α` for a 1-based multiindex.
    pub fn derivative_multi(&self, alpha: &MultiIndex) -> Self {
        let mut p = self.clone();
        for &c in alpha.entries() {
            p = p.derivative((c - 1) as usize);
            if p.is_zero() {
                break;
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point dimension");
        self.terms
            .iter()
            .map(|(e, v)| {
                v.to_f64() * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()
            })
            .sum()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.dim);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn to_f64(&self) -> MultiPoly<f64> {
        let mut p = MultiPoly::zero(self.dim);
        for (e, v) in &self.terms {
            p.add_term(e.clone(), v.to_f64());
        }
        p
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &MultiPoly<S>) -> f64 {
        let diff = self - other;
        diff.terms.values().map(|v| v.to_f64().abs()).fold(0.0, f64::max)
    }
}

impl<S: Scalar> Add for &MultiPoly<S> {
    type Output = MultiPoly<S>;
    fn add(self, rhs: &MultiPoly<S>) -> MultiPoly<S> {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension");
        let mut p = self.clone();
        for (e, v) in &rhs.terms {
            p.add_term(e.clone(), v.clone());
        }
        p
    }
}

impl<S: Scalar> Sub for &MultiPoly<S> {
    type Output = MultiPoly<S>;
    fn sub(self, rhs: &MultiPoly<S>) -> MultiPoly<S> {
        self + &(-rhs)
    }
}

impl<S: Scalar> Neg for &MultiPoly<S> {
    type Output = MultiPoly<S>;
    fn neg(self) -> MultiPoly<S> {
        self.scale(&-S::one())
    }
}

impl<S: Scalar> Mul for &MultiPoly<S> {
    type Output = MultiPoly<S>;
    fn mul(self, rhs: &MultiPoly<S>) -> MultiPoly<S> {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension");
        let mut p = MultiPoly::zero(self.dim);
        for (ea, va) in &self.terms {
            for (eb, vb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, va.clone() * vb.clone());
            }
        }
        p
    }
}

impl<S: Scalar> fmt::Display for MultiPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, v)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{v}")?;
            for (i, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{}", i + 1, p)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rint, Rational};

    #[test]
    fn arithmetic_and_derivatives() {
        let x = MultiPoly::<Rational>::var(2, 0);
        let y = MultiPoly::<Rational>::var(2, 1);
        let p = &(&x * &x) * &y; // x²y
        assert_eq!(p.derivative(0), (&x * &y).scale(&rint(2)));
        assert_eq!(p.derivative_multi(&MultiIndex::from([1, 1, 2])), MultiPoly::constant(2, rint(2)));
        assert!(p.derivative_multi(&MultiIndex::from([2, 2])).is_zero());
        assert_eq!((&p - &p), MultiPoly::zero(2));
        assert_eq!(p.degree(), Some(3));
        assert!((p.eval(&[2.0, 3.0]) - 12.0).abs() < 1e-15);
    }
}
