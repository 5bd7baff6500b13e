//! Hermite polynomials, the correctors `𝒦_m` and the signed measures
//! `Γ_{n,r}(dx) = γ(x)(1 + Σ_{m ≤ [r/3]} n^{−m/2} 𝒦_m(x)) dx`.
//!
//! `𝒦_m` is assembled from the operator coefficients,
//! `𝒦_m = Σ_t Σ_i a_{i,(t−m)/2} ℋ^i_t` with `ℋ^i_t = Σ_{|α|=t} c^i_α H_α`,
//! so the classical one-dimensional displays are recovered rather than typed in.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::exactmath::CoeffTables;
use crate::moments::{gaussian_moment, Distribution, MomentTable};
use crate::multiindex::MultiIndex;
use crate::numerics::{gauss_expect_checked, GaussHermite, GridDensity, GridSpec};
use crate::opalg::{a_direct, a_op, AMode, CCoefficients, DiffOperator};
use crate::poly::MultiPoly;
use crate::scalar::Scalar;

/// Probabilists' Hermite polynomial `H_m`.
pub fn hermite_1d<S: Scalar>(m: usize) -> MultiPoly<S> {
    univariate_embedded(&hermite_coeffs::<S>(m), 1, 0)
}

fn hermite_coeffs<S: Scalar>(m: usize) -> Vec<S> {
    // H_{k+1} = x H_k − k H_{k−1}
    let mut prev: Vec<S> = vec![];
    let mut cur: Vec<S> = vec![S::one()];
    for k in 0..m {
        let mut next = vec![S::zero(); k + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] = next[j + 1].clone() + c.clone();
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] = next[j].clone() - c.clone() * S::from_i64(k as i64);
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn univariate_embedded<S: Scalar>(coeffs: &[S], dim: usize, axis: usize) -> MultiPoly<S> {
    let mut p = MultiPoly::zero(dim);
    for (k, c) in coeffs.iter().enumerate() {
        let mut e = vec![0; dim];
        e[axis] = k as u32;
        p.add_term(e, c.clone());
    }
    p
}

/// `H_α(x) = Π_i H_{β_i(α)}(x_i)` with `β_i(α)` the multiplicity of `i` in `α`.
pub fn hermite_multi<S: Scalar>(alpha: &MultiIndex, dim: usize) -> MultiPoly<S> {
    assert!(alpha.max_coord() as usize <= dim, "multiindex entries within 1..=dim");
    alpha
        .counts(dim)
        .iter()
        .enumerate()
        .fold(MultiPoly::one(dim), |acc, (axis, &k)| {
            if k == 0 {
                acc
            } else {
                &acc * &univariate_embedded(&hermite_coeffs::<S>(k), dim, axis)
            }
        })
}

fn hermite_image<S: Scalar>(op: &DiffOperator<S>) -> MultiPoly<S> {
    let dim = op.dim();
    let mut p = MultiPoly::zero(dim);
    for (g, c) in op.terms() {
        p = &p + &hermite_multi::<S>(g, dim).scale(c);
    }
    p
}

/// `ℋ^i_t = Σ_{|α|=t} c^i_α H_α`.
pub fn h_poly<S: Scalar>(table: &MomentTable<S>, i: usize, t: usize) -> MultiPoly<S> {
    hermite_image(&a_op(table, i, t, AMode::Direct))
}

/// `(t, i, a_{i,(t−m)/2})` over the index range of `𝒦_m`.
fn k_terms(m: usize) -> Vec<(usize, usize, crate::scalar::Rational)> {
    let mut coeffs = CoeffTables::new();
    let mut out = Vec::new();
    for t in m.max(3)..=3 * m {
        if (t - m) % 2 != 0 {
            continue;
        }
        let q = (t - m) / 2;
        for i in q.max(1)..=t / 3 {
            let a = coeffs.a(i, q);
            if a != num_traits::Zero::zero() {
                out.push((t, i, a));
            }
        }
    }
    out
}

/// `𝒦_m`, built from the coefficient tables and the operator coefficients.
pub fn k_poly<S: Scalar>(table: &MomentTable<S>, m: usize) -> MultiPoly<S> {
    assert!(m >= 1, "m ≥ 1");
    let mut c = CCoefficients::new(table);
    let mut out = MultiPoly::zero(table.dim());
    for (t, i, a) in k_terms(m) {
        let h = hermite_image(&a_direct(&mut c, i, t));
        out = &out + &h.scale(&S::from_rational(&a));
    }
    out
}

/// `Γ_{n,r}` for a fixed standardized law.
#[derive(Clone, Debug)]
pub struct EdgeworthModel {
    label: String,
    dim: usize,
    r: usize,
    table: MomentTable<f64>,
    k_polys: Vec<MultiPoly<f64>>,
}

impl EdgeworthModel {
    pub fn new(dist: &Distribution, r: usize) -> Result<EdgeworthModel> {
        if !dist.is_standardized(1e-8) {
            return Err(Error::Unsupported(format!("`{}` is not standardized", dist.label())));
        }
        let table = MomentTable::from_distribution(dist, r)?;
        Self::from_table(dist.label(), table, r)
    }

    pub fn from_table(label: impl Into<String>, table: MomentTable<f64>, r: usize) -> Result<EdgeworthModel> {
        if r < 2 {
            return Err(Error::Config(format!("expansion order must be ≥ 2, got {r}")));
        }
        if table.max_order() < r && r >= 3 {
            return Err(Error::OrderExceeded { requested: r, max: table.max_order() });
        }
        let k_polys = (1..=r / 3).map(|m| k_poly(&table, m)).collect();
        Ok(EdgeworthModel { label: label.into(), dim: table.dim(), r, table, k_polys })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn table(&self) -> &MomentTable<f64> {
        &self.table
    }

    /// `𝒦_1, …, 𝒦_{[r/3]}`.
    pub fn k_polys(&self) -> &[MultiPoly<f64>] {
        &self.k_polys
    }

    /// `1 + Σ_m n^{−m/2} 𝒦_m(x)`.
    pub fn correction(&self, n: usize, x: &[f64]) -> f64 {
        let s = 1.0 / (n as f64).sqrt();
        let mut w = 1.0;
        let mut acc = 1.0;
        for k in &self.k_polys {
            w *= s;
            acc += w * k.eval(x);
        }
        acc
    }

    pub fn density(&self, n: usize, x: &[f64]) -> f64 {
        std_gaussian_density(x) * self.correction(n, x)
    }

    /// `Γ_{n,r}` on a grid, with a Cauchy–Schwarz bound on `|Γ_{n,r}|` outside it.
    pub fn grid(&self, n: usize, spec: &GridSpec) -> Result<GridDensity> {
        if spec.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: spec.dim });
        }
        let p_out: f64 = (0..self.dim)
            .map(|a| 0.5 * erfc(-spec.lo(a) / std::f64::consts::SQRT_2) + 0.5 * erfc(spec.hi(a) / std::f64::consts::SQRT_2))
            .sum::<f64>()
            .min(1.0);
        let s = 1.0 / (n as f64).sqrt();
        let mut tail = p_out;
        for (m, k) in self.k_polys.iter().enumerate() {
            let second = GaussHermite::standard().expect(self.dim, |x| k.eval(x).powi(2));
            tail += s.powi(m as i32 + 1) * (second * p_out).sqrt();
        }
        Ok(GridDensity::from_fn(spec.clone(), |x| self.density(n, x)).with_tail_mass_bound(tail))
    }
}

pub fn std_gaussian_density(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-0.5 * r2).exp() / (2.0 * std::f64::consts::PI).powf(0.5 * x.len() as f64)
}

/// Signed density of `Γ_{n,r}` at `x`.
pub fn edgeworth_density(model: &EdgeworthModel, n: usize, x: &[f64]) -> f64 {
    model.density(n, x)
}

/// Test function for [`d_m_functional`].
pub enum TestFunction<'a> {
    Poly(&'a MultiPoly<f64>),
    Func(&'a dyn Fn(&[f64]) -> f64),
}

/// `E p(G)` from exact Gaussian moments.
pub fn gaussian_expectation(p: &MultiPoly<f64>) -> f64 {
    p.terms()
        .map(|(e, c)| {
            let counts: Vec<usize> = e.iter().map(|&k| k as usize).collect();
            c * gaussian_moment(&MultiIndex::from_counts(&counts)).to_f64()
        })
        .sum()
}

/// Operator form `𝒟_m f = Σ a_{i,(t−m)/2} E(𝒜^i_t f(G))` for polynomial `f`.
pub fn d_m_operator_form(model: &EdgeworthModel, f: &MultiPoly<f64>, m: usize) -> Result<f64> {
    check_m(model, m)?;
    let mut c = CCoefficients::new(&model.table);
    let mut acc = 0.0;
    for (t, i, a) in k_terms(m) {
        let image = a_direct(&mut c, i, t).apply(f);
        acc += a.to_f64() * gaussian_expectation(&image);
    }
    Ok(acc)
}

fn check_m(model: &EdgeworthModel, m: usize) -> Result<()> {
    if m == 0 || m > model.r / 3 {
        return Err(Error::OrderExceeded { requested: 3 * m, max: model.r });
    }
    Ok(())
}

/// `𝒟_m f = E(f(G) 𝒦_m(G))` by Gauss–Hermite quadrature. For polynomial `f`
/// the operator form is evaluated as well and must agree to 1e−10.
pub fn d_m_functional(model: &EdgeworthModel, f: TestFunction<'_>, m: usize) -> Result<f64> {
    check_m(model, m)?;
    let k = &model.k_polys[m - 1];
    match f {
        TestFunction::Poly(p) => {
            let herm = gauss_expect_checked(|x| p.eval(x) * k.eval(x), model.dim)?;
            let op = d_m_operator_form(model, p, m)?;
            if (herm - op).abs() > 1e-10 * (1.0 + op.abs()) {
                return Err(Error::QuadratureNotConverged(format!(
                    "Hermite form {herm:e} disagrees with operator form {op:e}"
                )));
            }
            Ok(herm)
        }
        TestFunction::Func(g) => gauss_expect_checked(|x| g(x) * k.eval(x), model.dim),
    }
}
