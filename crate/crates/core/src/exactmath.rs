//! Exact rational combinatorics behind the coefficient recursions:
//! Bernoulli numbers (second convention, `B_1 = +1/2`), power sums,
//! the `b_{l,q}` and `a_{i,p}` tables, and the counting polynomials
//! `Q_l(k)` and `P_i(n)`.
//!
//! No floating point is used here. [`CoeffTables`] memoizes per caller; the
//! free functions build a throwaway table.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Zero};

use crate::scalar::Rational;

pub use crate::multiindex::{splits2, theta, MultiIndex};

fn binom(n: usize, k: usize) -> Rational {
    if k > n {
        return Rational::zero();
    }
    Rational::from_integer(binomial(BigInt::from(n), BigInt::from(k)))
}

fn pow(base: usize, exp: usize) -> Rational {
    Rational::from_integer(num_traits::pow(BigInt::from(base), exp))
}

/// Lazily grown tables of `B_m`, `b_{l,·}`, `a_{i,·}` and `Q_l(k)`.
#[derive(Debug, Default, Clone)]
pub struct CoeffTables {
    bernoulli: Vec<Rational>,
    b: Vec<Vec<Rational>>,
    // a[0] is row i = 1.
    a: Vec<Vec<Rational>>,
    // q[l][k] for k = 0..q[l].len().
    q: Vec<Vec<Rational>>,
}

impl CoeffTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bernoulli(&mut self, m: usize) -> Rational {
        // Σ_{k=0}^{j} C(j+1,k) B_k = j+1 is (SL) evaluated at L = 1.
        while self.bernoulli.len() <= m {
            let j = self.bernoulli.len();
            let mut acc = Rational::from_integer(BigInt::from(j + 1));
            for (k, bk) in self.bernoulli.iter().enumerate() {
                acc -= binom(j + 1, k) * bk;
            }
            self.bernoulli.push(acc / binom(j + 1, j));
        }
        self.bernoulli[m].clone()
    }

    /// `Σ_{k=1}^{L} k^l` through the Bernoulli closed form.
    pub fn power_sum(&mut self, l: usize, upper: usize) -> Rational {
        let mut acc = Rational::zero();
        for p in 1..=l + 1 {
            acc += binom(l + 1, p) * self.bernoulli(l + 1 - p) * pow(upper, p);
        }
        acc / Rational::from_integer(BigInt::from(l + 1))
    }

    /// `(b_{l,0}, …, b_{l,l+1})` with `Σ_{k=1}^{n-1} k^l = Σ_q b_{l,q} n^q`.
    pub fn b_row(&mut self, l: usize) -> Vec<Rational> {
        while self.b.len() <= l {
            let ll = self.b.len();
            let mut row = Vec::with_capacity(ll + 2);
            for q in 0..=ll + 1 {
                let mut acc = Rational::zero();
                for p in q.max(1)..=ll + 1 {
                    let term = binom(ll + 1, p) * self.bernoulli(ll + 1 - p) * binom(p, q);
                    if (p - q) % 2 == 0 {
                        acc += term;
                    } else {
                        acc -= term;
                    }
                }
                row.push(acc / Rational::from_integer(BigInt::from(ll + 1)));
            }
            self.b.push(row);
        }
        self.b[l].clone()
    }

    /// `(a_{i,0}, …, a_{i,i})`, the coefficients of `P_i(n) = Σ_p a_{i,p} n^p`.
    pub fn a_row(&mut self, i: usize) -> Vec<Rational> {
        assert!(i >= 1, "a_{{i,p}} is defined for i >= 1");
        if self.a.is_empty() {
            self.a.push(vec![Rational::zero(), Rational::one()]);
        }
        while self.a.len() < i {
            let cur = self.a.len(); // building row cur + 1 from row cur
            let prev = self.a[cur - 1].clone();
            let mut row = vec![Rational::zero(); cur + 2];
            let mut a0 = Rational::zero();
            for (l, al) in prev.iter().enumerate() {
                let bl = self.b_row(l);
                a0 += al * &bl[0];
                a0 -= al * self.power_sum(l, cur - 1);
            }
            row[0] = a0;
            for (p, slot) in row.iter_mut().enumerate().skip(1) {
                let mut acc = Rational::zero();
                for (l, al) in prev.iter().enumerate().skip(p - 1) {
                    acc += al * &self.b_row(l)[p];
                }
                *slot = acc;
            }
            self.a.push(row);
        }
        self.a[i - 1].clone()
    }

    /// `a_{i,p}`, zero outside `0 ≤ p ≤ i`.
    pub fn a(&mut self, i: usize, p: usize) -> Rational {
        if i == 0 || p > i {
            return Rational::zero();
        }
        self.a_row(i)[p].clone()
    }

    /// `P_i(n)` evaluated from the `a` row.
    pub fn p_value(&mut self, i: usize, n: usize) -> Rational {
        self.a_row(i)
            .iter()
            .enumerate()
            .map(|(p, a)| a * pow(n, p))
            .sum()
    }

    /// `Q_0(k) = 1`, `Q_l(k) = Σ_{j=l+1}^{k} Q_{l-1}(j-1)`.
    pub fn q_value(&mut self, l: usize, k: usize) -> Rational {
        while self.q.len() <= l {
            self.q.push(Vec::new());
        }
        for ll in 0..=l {
            let have = self.q[ll].len();
            for kk in have..=k {
                let v = if ll == 0 {
                    Rational::one()
                } else {
                    let mut acc = Rational::zero();
                    for j in ll + 1..=kk {
                        acc += self.q[ll - 1][j - 1].clone();
                    }
                    acc
                };
                self.q[ll].push(v);
            }
        }
        self.q[l][k].clone()
    }
}

pub fn bernoulli(m: usize) -> Rational {
    CoeffTables::new().bernoulli(m)
}

pub fn power_sum_eval(l: usize, upper: usize) -> Rational {
    CoeffTables::new().power_sum(l, upper)
}

pub fn b_coeffs(l: usize) -> Vec<Rational> {
    CoeffTables::new().b_row(l)
}

pub fn a_coeffs(i: usize) -> Vec<Rational> {
    CoeffTables::new().a_row(i)
}

pub fn q_value(l: usize, k: usize) -> Rational {
    CoeffTables::new().q_value(l, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rint};

    fn direct_power_sum(l: usize, upper: usize) -> Rational {
        (1..=upper).map(|k| pow(k, l)).sum()
    }

    // P_1(n) = n, P_i(n) = Σ_{k=i-1}^{n-1} P_{i-1}(k); P_i(n) = 0 for n < i.
    fn iterated_p(i: usize, n: usize) -> Rational {
        if n < i {
            return Rational::zero();
        }
        if i == 1 {
            return rint(n as i64);
        }
        (i - 1..n).map(|k| iterated_p(i - 1, k)).sum()
    }

    #[test]
    fn bernoulli_printed_values() {
        let expected = [
            rint(1),
            rat(1, 2),
            rat(1, 6),
            rint(0),
            rat(-1, 30),
            rint(0),
            rat(1, 42),
            rint(0),
            rat(-1, 30),
        ];
        for (m, e) in expected.iter().enumerate() {
            assert_eq!(&bernoulli(m), e, "B_{m}");
        }
    }

    #[test]
    fn bernoulli_odd_vanish() {
        let mut t = CoeffTables::new();
        for m in (3..40).step_by(2) {
            assert!(t.bernoulli(m).is_zero(), "B_{m}");
        }
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(power_sum_eval(1, 3), rint(6));
        assert_eq!(power_sum_eval(0, 5), rint(5));
        assert_eq!(power_sum_eval(2, 3), rint(14));
        assert_eq!(power_sum_eval(4, 0), rint(0));
        for l in 0..10 {
            for upper in 0..30 {
                assert_eq!(power_sum_eval(l, upper), direct_power_sum(l, upper));
            }
        }
    }

    #[test]
    fn b_printed_rows() {
        assert_eq!(b_coeffs(0), vec![rint(-1), rint(1)]);
        assert_eq!(b_coeffs(1), vec![rint(0), rat(-1, 2), rat(1, 2)]);
        assert_eq!(b_coeffs(2), vec![rint(0), rat(1, 6), rat(-1, 2), rat(1, 3)]);
    }

    #[test]
    fn b_rows_match_direct_summation() {
        let mut t = CoeffTables::new();
        for l in 0..=8 {
            let row = t.b_row(l);
            assert_eq!(row.len(), l + 2);
            for n in 1..=100usize {
                let poly: Rational = row.iter().enumerate().map(|(q, b)| b * pow(n, q)).sum();
                assert_eq!(poly, direct_power_sum(l, n - 1), "l={l} n={n}");
            }
        }
    }

    #[test]
    fn a_rows() {
        assert_eq!(a_coeffs(1), vec![rint(0), rint(1)]);
        assert_eq!(a_coeffs(2), vec![rint(0), rat(-1, 2), rat(1, 2)]);
        assert_eq!(a_coeffs(3)[3], rat(1, 6));
        for i in 1..8 {
            assert_eq!(a_coeffs(i).len(), i + 1);
        }
    }

    #[test]
    fn p_matches_iterated_sums_and_q() {
        let mut t = CoeffTables::new();
        for i in 1..=6 {
            for n in 1..=50 {
                let p = t.p_value(i, n);
                assert_eq!(p, iterated_p(i, n), "i={i} n={n}");
                let via_q: Rational = (1..=n).map(|k| t.q_value(i - 1, k)).sum();
                assert_eq!(p, via_q, "i={i} n={n}");
            }
        }
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_value(0, 7), rint(1));
        assert_eq!(q_value(1, 4), rint(3));
        assert_eq!(q_value(2, 2), rint(0));
        let mut t = CoeffTables::new();
        for l in 0..6 {
            for k in 1..20 {
                let q = t.q_value(l, k);
                if k <= l {
                    assert!(q.is_zero());
                } else {
                    assert!(q > Rational::zero());
                }
            }
        }
    }
}
