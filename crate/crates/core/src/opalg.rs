//! Constant-coefficient differential operators `Σ_γ c_γ ∂_γ` and the
//! operator families driving the expansion: `Ψ_t`, `𝒜^i_t`, `Ψ^{(k)}_t`
//! and `T^n_t`.
//!
//! Keys are canonical (sorted) multiindices, so two operators are equal iff
//! their term maps are equal. With a [`Rational`](crate::scalar::Rational)
//! moment table every identity below holds exactly.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::error::Result;
use crate::exactmath::CoeffTables;
use crate::moments::MomentTable;
use crate::multiindex::{paired_indices, splits2, theta, MultiIndex};
use crate::poly::MultiPoly;
use crate::scalar::{factorial, pow2, Scalar};

pub use crate::poly::MultiPoly as Poly;

#[derive(Clone, Debug, PartialEq)]
pub struct DiffOperator<S: Scalar> {
    dim: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> DiffOperator<S> {
    pub fn zero(dim: usize) -> Self {
        DiffOperator { dim, terms: BTreeMap::new() }
    }

    /// `c ∂_γ`.
    pub fn derivative(dim: usize, gamma: &MultiIndex, c: S) -> Self {
        let mut op = Self::zero(dim);
        op.add_term(gamma, c);
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, gamma: &MultiIndex) -> S {
        self.terms.get(&gamma.canonical()).cloned().unwrap_or_else(S::zero)
    }

    pub fn add_term(&mut self, gamma: &MultiIndex, c: S) {
        debug_assert!(gamma.max_coord() as usize <= self.dim);
        if c.is_zero() {
            return;
        }
        let key = gamma.canonical();
        match self.terms.get_mut(&key) {
            Some(v) => {
                let nv = v.clone() + c;
                if nv.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *v = nv;
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, other: &DiffOperator<S>) -> DiffOperator<S> {
        assert_eq!(self.dim, other.dim, "operator dimension");
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &S) -> DiffOperator<S> {
        let mut out = Self::zero(self.dim);
        for (g, v) in &self.terms {
            out.add_term(g, v.clone() * c.clone());
        }
        out
    }

    /// `self ∘ other`: concatenation of multiindices with multiplied coefficients.
    pub fn compose(&self, other: &DiffOperator<S>) -> DiffOperator<S> {
        assert_eq!(self.dim, other.dim, "operator dimension");
        let mut out = Self::zero(self.dim);
        for (ga, ca) in &self.terms {
            for (gb, cb) in &other.terms {
                out.add_term(&ga.concat(gb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn apply(&self, f: &MultiPoly<S>) -> MultiPoly<S> {
        assert_eq!(self.dim, f.dim(), "operator/polynomial dimension");
        let mut out = MultiPoly::zero(self.dim);
        for (g, c) in &self.terms {
            out = &out + &f.derivative_multi(g).scale(c);
        }
        out
    }

    pub fn to_f64(&self) -> DiffOperator<f64> {
        DiffOperator {
            dim: self.dim,
            terms: self.terms.iter().map(|(g, c)| (g.clone(), c.to_f64())).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &DiffOperator<S>) -> f64 {
        self.add(&other.scale(&-S::one()))
            .terms
            .values()
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// CSV dump: `multiindex,numerator,denominator` for exact coefficients,
    /// `multiindex,value` otherwise. Multiindex entries are space separated.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let exact = self.terms.values().next().and_then(|c| c.as_fraction()).is_some()
            || (self.terms.is_empty() && S::one().as_fraction().is_some());
        if exact {
            wtr.write_record(["multiindex", "numerator", "denominator"])?;
        } else {
            wtr.write_record(["multiindex", "value"])?;
        }
        for (g, c) in &self.terms {
            let key = g.entries().iter().map(u8::to_string).collect::<Vec<_>>().join(" ");
            match c.as_fraction() {
                Some((n, d)) => wtr.write_record([key, n.to_string(), d.to_string()])?,
                None => wtr.write_record([key, format!("{:.17e}", c.to_f64())])?,
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn multinomial<S: Scalar>(alpha: &MultiIndex, dim: usize) -> S {
    let mut m: S = factorial(alpha.len());
    for c in alpha.counts(dim) {
        m = m / factorial::<S>(c);
    }
    m
}

/// `(−1)^q / (2^q p! q!)`, the weight attached to `Δ_α θ_β` with `|α| = p`, `|β| = 2q`.
fn weight<S: Scalar>(p: usize, q: usize) -> S {
    let sign = if q % 2 == 0 { S::one() } else { -S::one() };
    sign / (pow2::<S>(q) * factorial::<S>(p) * factorial::<S>(q))
}

/// `Ψ_t`; the zero operator for `t ≤ 2`.
pub fn psi_op<S: Scalar>(table: &MomentTable<S>, t: usize) -> DiffOperator<S> {
    let dim = table.dim();
    let mut op = DiffOperator::zero(dim);
    for p in 3..=t {
        if (t - p) % 2 != 0 {
            continue;
        }
        let q = (t - p) / 2;
        let w: S = weight(p, q);
        let betas = paired_indices(dim, q);
        // Σ_{|α|=p} Δ_α ∂_α, grouping orderings of the same sorted α.
        for alpha in MultiIndex::all_sorted(dim, p) {
            let d = table.delta(&alpha);
            if d.is_zero() {
                continue;
            }
            let c = w.clone() * d * multinomial::<S>(&alpha, dim);
            for beta in &betas {
                op.add_term(&beta.concat(&alpha), c.clone());
            }
        }
    }
    op
}

/// Memoized `c^i_γ` over ordered (not canonicalized) multiindices.
pub struct CCoefficients<'a, S: Scalar> {
    table: &'a MomentTable<S>,
    memo: HashMap<(usize, MultiIndex), S>,
}

impl<'a, S: Scalar> CCoefficients<'a, S> {
    pub fn new(table: &'a MomentTable<S>) -> Self {
        CCoefficients { table, memo: HashMap::new() }
    }

    pub fn get(&mut self, i: usize, gamma: &MultiIndex) -> S {
        assert!(i >= 1);
        if gamma.len() < 3 * i {
            return S::zero();
        }
        if let Some(v) = self.memo.get(&(i, gamma.clone())) {
            return v.clone();
        }
        let mut acc = S::zero();
        for (alpha, beta) in splits2(gamma) {
            if i == 1 {
                if beta.len() % 2 != 0 || alpha.len() < 3 || theta(&beta) == 0 {
                    continue;
                }
                let d = self.table.delta(&alpha);
                if !d.is_zero() {
                    acc = acc + weight::<S>(alpha.len(), beta.len() / 2) * d;
                }
            } else {
                if alpha.len() < 3 || beta.len() < 3 * (i - 1) {
                    continue;
                }
                let a = self.get(1, &alpha);
                if a.is_zero() {
                    continue;
                }
                acc = acc + a * self.get(i - 1, &beta);
            }
        }
        self.memo.insert((i, gamma.clone()), acc.clone());
        acc
    }
}

/// `c^i_γ`; zero when `|γ| < 3i`.
pub fn c_coeff<S: Scalar>(table: &MomentTable<S>, i: usize, gamma: &MultiIndex) -> S {
    CCoefficients::new(table).get(i, gamma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AMode {
    /// `𝒜^{i+1}_t = Σ_{p=3}^{t−3i} Ψ_p 𝒜^i_{t−p}`.
    Recursive,
    /// `𝒜^i_t = Σ_{|γ|=t} c^i_γ ∂_γ`.
    Direct,
}

pub fn a_op<S: Scalar>(table: &MomentTable<S>, i: usize, t: usize, mode: AMode) -> DiffOperator<S> {
    assert!(i >= 1);
    match mode {
        AMode::Direct => {
            let mut c = CCoefficients::new(table);
            a_direct(&mut c, i, t)
        }
        AMode::Recursive => {
            let psi: Vec<_> = (0..=t).map(|p| psi_op(table, p)).collect();
            a_recursive(table.dim(), &psi, i, t)
        }
    }
}

pub(crate) fn a_direct<S: Scalar>(c: &mut CCoefficients<'_, S>, i: usize, t: usize) -> DiffOperator<S> {
    let dim = c.table.dim();
    let mut op = DiffOperator::zero(dim);
    if t < 3 * i {
        return op;
    }
    for gamma in MultiIndex::all(dim, t) {
        let v = c.get(i, &gamma);
        op.add_term(&gamma, v);
    }
    op
}

fn a_recursive<S: Scalar>(dim: usize, psi: &[DiffOperator<S>], i: usize, t: usize) -> DiffOperator<S> {
    if i == 1 {
        return psi[t].clone();
    }
    let mut op = DiffOperator::zero(dim);
    if t < 3 * i {
        return op;
    }
    for p in 3..=t - 3 * (i - 1) {
        op = op.add(&psi[p].compose(&a_recursive(dim, psi, i - 1, t - p)));
    }
    op
}

/// `Ψ^{(k)}_t` for all `t ≤ t_max`, via `Ψ^{(k)}_t = Ψ^{(k−1)}_t + Σ_{p=3}^{t−3} Ψ_p Ψ^{(k−1)}_{t−p}`.
pub fn psi_k_family<S: Scalar>(table: &MomentTable<S>, k: usize, t_max: usize) -> Vec<DiffOperator<S>> {
    assert!(k >= 1);
    psi_k_families(table, k, t_max).pop().expect("k >= 1")
}

/// `[Ψ^{(k)}_t for t ≤ t_max]` for every `k = 1..=k_max`.
pub fn psi_k_families<S: Scalar>(table: &MomentTable<S>, k_max: usize, t_max: usize) -> Vec<Vec<DiffOperator<S>>> {
    let psi: Vec<_> = (0..=t_max).map(|p| psi_op(table, p)).collect();
    let mut out = Vec::with_capacity(k_max);
    let mut cur = psi.clone();
    for k in 1..=k_max {
        if k > 1 {
            cur = psi_k_step(&psi, &cur, false);
        }
        out.push(cur.clone());
    }
    out
}

fn psi_k_step<S: Scalar>(
    psi: &[DiffOperator<S>],
    prev: &[DiffOperator<S>],
    full_range: bool,
) -> Vec<DiffOperator<S>> {
    (0..prev.len())
        .map(|t| {
            let mut op = prev[t].clone();
            let (lo, hi) = if full_range { (0, t) } else { (3, t.saturating_sub(3)) };
            for p in lo..=hi {
                if p > t {
                    break;
                }
                op = op.add(&psi[p].compose(&prev[t - p]));
            }
            op
        })
        .collect()
}

pub fn psi_k_op<S: Scalar>(table: &MomentTable<S>, k: usize, t: usize) -> DiffOperator<S> {
    psi_k_family(table, k, t).swap_remove(t)
}

/// `T^n_t = Σ_{i=1}^{[t/3]} P_i(n) 𝒜^i_t`.
pub fn t_op<S: Scalar>(table: &MomentTable<S>, n: usize, t: usize) -> DiffOperator<S> {
    assert!(n >= 1);
    let mut coeffs = CoeffTables::new();
    let mut c = CCoefficients::new(table);
    let mut op = DiffOperator::zero(table.dim());
    for i in 1..=t / 3 {
        let p = S::from_rational(&coeffs.p_value(i, n));
        op = op.add(&a_direct(&mut c, i, t).scale(&p));
    }
    op
}

/// `T^n_t = Σ_{k=1}^n Ψ^{(k)}_t`, accumulated along the `Ψ^{(k)}` recursion.
pub fn t_op_by_summation<S: Scalar>(table: &MomentTable<S>, n: usize, t: usize) -> DiffOperator<S> {
    assert!(n >= 1);
    let psi: Vec<_> = (0..=t).map(|p| psi_op(table, p)).collect();
    let mut cur = psi.clone();
    let mut total = cur[t].clone();
    for _ in 2..=n {
        cur = psi_k_step(&psi, &cur, false);
        total = total.add(&cur[t]);
    }
    total
}

/// `Σ_{i=1}^{[t/3]} Q_{i−1}(k) 𝒜^i_t`, the closed form of `Ψ^{(k)}_t`.
pub fn psi_k_closed_form<S: Scalar>(table: &MomentTable<S>, k: usize, t: usize) -> DiffOperator<S> {
    let mut coeffs = CoeffTables::new();
    let mut c = CCoefficients::new(table);
    let mut op = DiffOperator::zero(table.dim());
    for i in 1..=t / 3 {
        let q = S::from_rational(&coeffs.q_value(i - 1, k));
        op = op.add(&a_direct(&mut c, i, t).scale(&q));
    }
    op
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rint, Rational};
    use proptest::prelude::*;

    fn exp_table() -> MomentTable<Rational> {
        // centered Exp(1): Δ_t = !t − (t−1)!! for t ≥ 3
        MomentTable::univariate(&[rint(2), rint(6), rint(44), rint(265 - 15), rint(1854), rint(14833 - 105)])
    }

    fn d(g: &[u8]) -> MultiIndex {
        MultiIndex::new(g.to_vec())
    }

    #[test]
    fn psi_low_orders_vanish() {
        let t = exp_table();
        for k in 0..=2 {
            assert!(psi_op(&t, k).is_zero());
        }
    }

    #[test]
    fn psi_3_and_4() {
        let t = exp_table();
        assert_eq!(psi_op(&t, 3), DiffOperator::derivative(1, &d(&[1, 1, 1]), rat(1, 3)));
        assert_eq!(psi_op(&t, 4), DiffOperator::derivative(1, &d(&[1, 1, 1, 1]), rat(6, 24)));
    }

    #[test]
    fn c_examples() {
        let t = exp_table();
        assert_eq!(c_coeff(&t, 1, &d(&[1, 1, 1])), rat(2, 6));
        assert_eq!(c_coeff(&t, 2, &MultiIndex::repeat(1, 6)), rat(1, 9));
        assert_eq!(c_coeff(&t, 1, &d(&[1, 1])), rint(0));
    }

    #[test]
    fn a_examples() {
        let t = exp_table();
        for tt in 0..=8 {
            for mode in [AMode::Recursive, AMode::Direct] {
                assert_eq!(a_op(&t, 1, tt, mode), psi_op(&t, tt));
            }
        }
        assert!(a_op(&t, 2, 5, AMode::Recursive).is_zero());
        assert!(a_op(&t, 2, 5, AMode::Direct).is_zero());
        let expect = DiffOperator::derivative(1, &MultiIndex::repeat(1, 6), rat(1, 9));
        assert_eq!(a_op(&t, 2, 6, AMode::Recursive), expect);
        assert_eq!(a_op(&t, 2, 6, AMode::Direct), expect);
    }

    #[test]
    fn psi_k_examples() {
        let t = exp_table();
        for k in 1..6 {
            assert_eq!(psi_k_op(&t, k, 3), psi_op(&t, 3));
            assert!(psi_k_op(&t, k, 2).is_zero());
        }
        assert_eq!(psi_k_op(&t, 1, 6), a_op(&t, 1, 6, AMode::Direct));
    }

    #[test]
    fn psi_k_short_and_full_recursions_agree() {
        let t = exp_table();
        let psi: Vec<_> = (0..=8).map(|p| psi_op(&t, p)).collect();
        let mut short = psi.clone();
        let mut full = psi.clone();
        for _ in 2..=5 {
            short = psi_k_step(&psi, &short, false);
            full = psi_k_step(&psi, &full, true);
            assert_eq!(short, full);
        }
    }

    #[test]
    fn t_examples() {
        let t = exp_table();
        for n in 1..6 {
            assert_eq!(t_op(&t, n, 3), psi_op(&t, 3).scale(&rint(n as i64)));
            assert!(t_op(&t, n, 2).is_zero());
        }
        assert_eq!(t_op(&t, 1, 6), a_op(&t, 1, 6, AMode::Direct));
    }

    #[test]
    fn apply_and_compose_examples() {
        let x = MultiPoly::<Rational>::var(1, 0);
        let d2 = DiffOperator::derivative(1, &d(&[1, 1]), rint(1));
        assert_eq!(d2.apply(&x.pow(3)), x.scale(&rint(6)));
        assert!(DiffOperator::<Rational>::zero(1).apply(&x.pow(3)).is_zero());
        let d3 = DiffOperator::derivative(1, &d(&[1, 1, 1]), rat(1, 3));
        assert_eq!(d3.apply(&x.pow(4)), x.scale(&rint(8)));

        let d1 = DiffOperator::derivative(2, &d(&[1]), rint(1));
        let e2 = DiffOperator::derivative(2, &d(&[2]), rint(1));
        assert_eq!(d1.compose(&e2), DiffOperator::derivative(2, &d(&[1, 2]), rint(1)));
        let a = DiffOperator::derivative(1, &d(&[1, 1, 1]), rint(2));
        let b = DiffOperator::derivative(1, &d(&[1, 1, 1]), rint(5));
        assert_eq!(a.compose(&b), DiffOperator::derivative(1, &MultiIndex::repeat(1, 6), rint(10)));
        assert!(DiffOperator::<Rational>::zero(1).compose(&a).is_zero());
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        psi_op(&exp_table(), 5).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("multiindex,numerator,denominator\n"));
        assert!(s.contains("1 1 1 1 1,"));
    }

    fn arb_poly() -> impl Strategy<Value = MultiPoly<Rational>> {
        prop::collection::vec(((0u32..=5, 0u32..=5), -20i64..=20), 1..8).prop_map(|ts| {
            let mut p = MultiPoly::zero(2);
            for ((a, b), c) in ts {
                p.add_term(vec![a, b], rint(c));
            }
            p
        })
    }

    fn arb_op() -> impl Strategy<Value = DiffOperator<Rational>> {
        prop::collection::vec((prop::collection::vec(1u8..=2, 0..4), -9i64..=9, 1i64..=4), 0..5).prop_map(|ts| {
            let mut op = DiffOperator::zero(2);
            for (g, n, den) in ts {
                op.add_term(&MultiIndex::new(g), rat(n, den));
            }
            op
        })
    }

    proptest! {
        #[test]
        fn compose_matches_sequential_application(a in arb_op(), b in arb_op(), f in arb_poly()) {
            prop_assert_eq!(a.compose(&b).apply(&f), a.apply(&b.apply(&f)));
        }
    }
}
