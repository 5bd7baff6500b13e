//! Distribution registry, moment tensors `E(F^α)`, Gaussian moments and the
//! moment differences `Δ_α = E(F^α) − E(G^α)`.

mod family;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;

pub use family::Family;
pub use family::std_normal_pdf;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::poly::MultiPoly;
use crate::scalar::{rint, Rational, Scalar};

/// Default order up to which component moments are tabulated.
pub const DEFAULT_MAX_ORDER: usize = 24;

/// Law of `Y = M (X − E X) + c` where `X` has independent coordinates drawn
/// from [`Family`] laws.
#[derive(Clone, Debug)]
pub struct Distribution {
    label: String,
    components: Vec<Family>,
    map: DMatrix<f64>,
    offset: Vec<f64>,
    max_order: usize,
    comp_means: Vec<f64>,
    // central[k][j] = E (X_k − E X_k)^j
    central: Vec<Vec<f64>>,
}

impl Distribution {
    /// Independent product of the given coordinate laws (no transformation).
    pub fn product(label: impl Into<String>, components: Vec<Family>) -> Self {
        assert!(!components.is_empty() && components.len() <= 3, "1 ≤ N ≤ 3");
        let n = components.len();
        let comp_means: Vec<f64> = components.iter().map(Family::mean).collect();
        let central = components
            .iter()
            .map(|f| (0..=DEFAULT_MAX_ORDER).map(|j| f.central_moment(j)).collect())
            .collect();
        Distribution {
            label: label.into(),
            offset: comp_means.clone(),
            comp_means,
            central,
            components,
            map: DMatrix::identity(n, n),
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn univariate(family: Family) -> Self {
        let label = family.label();
        Self::product(label, vec![family])
    }

    /// Replace the affine map: `Y = map (X − E X) + offset`.
    pub fn with_affine(mut self, map: DMatrix<f64>, offset: Vec<f64>) -> Self {
        assert_eq!(map.nrows(), self.dim());
        assert_eq!(map.ncols(), self.dim());
        assert_eq!(offset.len(), self.dim());
        self.map = map;
        self.offset = offset;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Lower the declared maximum moment order.
    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order.min(DEFAULT_MAX_ORDER);
        self
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn components(&self) -> &[Family] {
        &self.components
    }

    pub fn map(&self) -> &DMatrix<f64> {
        &self.map
    }

    pub fn mean(&self) -> Vec<f64> {
        self.offset.clone()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.central.iter().map(|c| c[2]),
        ));
        &self.map * d * self.map.transpose()
    }

    /// `E(Y^α)` for a 1-based multiindex α.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64> {
        if alpha.len() > self.max_order {
            return Err(Error::OrderExceeded { requested: alpha.len(), max: self.max_order });
        }
        if alpha.max_coord() as usize > self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: alpha.max_coord() as usize });
        }
        let n = self.dim();
        // Expand Π_j (Σ_k M_{α_j k} x̃_k + c_{α_j}) as a polynomial in the centered components.
        let mut prod = MultiPoly::<f64>::one(n);
        for &c in alpha.entries() {
            let row = (c - 1) as usize;
            let mut lin = MultiPoly::constant(n, self.offset[row]);
            for k in 0..n {
                lin.add_term(unit(n, k), self.map[(row, k)]);
            }
            prod = &prod * &lin;
        }
        Ok(prod
            .terms()
            .map(|(e, v)| v * e.iter().enumerate().map(|(k, &p)| self.central[k][p as usize]).product::<f64>())
            .sum())
    }

    /// Density of the absolutely continuous part at `y`.
    pub fn ac_density(&self, y: &[f64]) -> f64 {
        let n = self.dim();
        let inv = self.map.clone().try_inverse().expect("invertible map");
        let shifted = DVector::from_iterator(n, y.iter().zip(&self.offset).map(|(a, b)| a - b));
        let x = inv * shifted;
        let jac = self.map.determinant().abs();
        self.components
            .iter()
            .enumerate()
            .map(|(k, f)| f.ac_density(x[k] + self.comp_means[k]))
            .product::<f64>()
            / jac
    }

    pub fn singular_mass(&self) -> f64 {
        1.0 - self.components.iter().map(|f| 1.0 - f.singular_mass()).product::<f64>()
    }

    pub fn has_singular_part(&self) -> bool {
        self.singular_mass() > 0.0
    }

    fn cf_with(&self, t: &[f64], component_cf: impl Fn(&Family, f64) -> Complex64) -> Complex64 {
        let n = self.dim();
        let tv = DVector::from_column_slice(t);
        let s = self.map.transpose() * &tv;
        // Y = M X + (c − M m)
        let m = DVector::from_column_slice(&self.comp_means);
        let shift = DVector::from_column_slice(&self.offset) - &self.map * m;
        let phase = Complex64::new(0.0, tv.dot(&shift)).exp();
        (0..n).fold(phase, |acc, k| acc * component_cf(&self.components[k], s[k]))
    }

    pub fn char_fn(&self, t: &[f64]) -> Complex64 {
        self.cf_with(t, Family::char_fn)
    }

    /// Characteristic function of the normalized a.c. component (all coordinates a.c.).
    pub fn ac_char_fn(&self, t: &[f64]) -> Complex64 {
        self.cf_with(t, Family::ac_char_fn)
    }

    /// Location of the atom for a 1-D atom mixture, after the affine map.
    pub fn atom(&self) -> Option<f64> {
        if self.dim() != 1 {
            return None;
        }
        self.components[0]
            .atom()
            .map(|a| self.map[(0, 0)] * (a - self.comp_means[0]) + self.offset[0])
    }

    /// Draw `Y`; the flag marks draws where some coordinate hit a singular part.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, bool) {
        let n = self.dim();
        let mut singular = false;
        let x: Vec<f64> = self
            .components
            .iter()
            .zip(&self.comp_means)
            .map(|(f, m)| {
                let (v, s) = f.sample(rng);
                singular |= s;
                v - m
            })
            .collect();
        let y = (0..n)
            .map(|i| self.offset[i] + (0..n).map(|k| self.map[(i, k)] * x[k]).sum::<f64>())
            .collect();
        (y, singular)
    }

    /// Law of `A(F)(F − E F)` with `A(F) = C(F)^{-1/2}`.
    pub fn standardize(&self) -> Result<Distribution> {
        let cov = self.covariance();
        let eig = cov.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        if !(min > 1e-8 * max) {
            return Err(Error::NonInvertibleCovariance { ratio: min / max });
        }
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let a = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
        let map = a * &self.map;
        let mut out = self.clone().with_affine(map, vec![0.0; self.dim()]);
        out.label = self.label.clone();
        Ok(out)
    }

    /// Zero mean and identity covariance, to `tol`.
    pub fn is_standardized(&self, tol: f64) -> bool {
        let cov = self.covariance();
        let id = DMatrix::<f64>::identity(self.dim(), self.dim());
        self.offset.iter().all(|m| m.abs() <= tol) && (cov - id).abs().max() <= tol
    }

    /// Parse a registry spec such as `exp`, `gamma:k=3`, `atommix:p=0.5,c=2`
    /// or a product `exp*uniform`.
    pub fn from_spec(spec: &str) -> Result<Distribution> {
        let parts: Vec<&str> = spec.split('*').map(str::trim).collect();
        if parts.len() > 3 {
            return Err(Error::Config(format!("at most 3 coordinates: {spec}")));
        }
        let comps = parts.iter().map(|p| parse_family(p)).collect::<Result<Vec<_>>>()?;
        Ok(Distribution::product(spec.trim(), comps))
    }
}

fn unit(n: usize, k: usize) -> Vec<u32> {
    let mut e = vec![0; n];
    e[k] = 1;
    e
}

/// Names accepted by [`Distribution::from_spec`].
pub const REGISTRY: &[&str] = &["normal", "uniform", "exp", "laplace", "gamma", "gaussmix", "atommix"];

fn parse_family(spec: &str) -> Result<Family> {
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n.trim(), p),
        None => (spec.trim(), ""),
    };
    let mut kv = HashMap::new();
    for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in {item:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number {v:?} in {spec:?}")))?;
        kv.insert(k.trim().to_string(), v);
    }
    let get = |k: &str, default: f64| kv.get(k).copied().unwrap_or(default);
    let fam = match name {
        "normal" => Family::Normal { mean: get("mean", 0.0), sd: get("sd", 1.0) },
        "uniform" => Family::Uniform { lo: get("lo", 0.0), hi: get("hi", 1.0) },
        "exp" => Family::Exponential { rate: get("rate", 1.0) },
        "laplace" => Family::Laplace { loc: get("loc", 0.0), scale: get("scale", 1.0) },
        "gamma" => Family::Gamma { shape: get("k", 3.0), scale: get("scale", 1.0) },
        "gaussmix" => Family::GaussMix {
            w: get("w", 0.3),
            m1: get("m1", -1.0),
            s1: get("s1", 0.5),
            m2: get("m2", 0.5),
            s2: get("s2", 1.0),
        },
        "atommix" => Family::AtomMix { p: get("p", 0.5), atom: get("c", 2.0) },
        _ => return Err(Error::Config(format!("unknown distribution {name:?}; known: {REGISTRY:?}"))),
    };
    let ok = match fam {
        Family::Normal { sd, .. } => sd > 0.0,
        Family::Uniform { lo, hi } => hi > lo,
        Family::Exponential { rate } => rate > 0.0,
        Family::Laplace { scale, .. } => scale > 0.0,
        Family::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
        Family::GaussMix { w, s1, s2, .. } => (0.0..=1.0).contains(&w) && s1 > 0.0 && s2 > 0.0,
        Family::AtomMix { p, .. } => p > 0.0 && p <= 1.0,
    };
    if !ok {
        return Err(Error::Config(format!("invalid parameters in {spec:?}")));
    }
    Ok(fam)
}

/// The shipped test laws, un-standardized, in a fixed order.
pub fn shipped() -> Vec<Distribution> {
    ["uniform", "exp", "laplace", "gamma:k=3", "gaussmix", "atommix:p=0.5,c=2"]
        .iter()
        .map(|s| Distribution::from_spec(s).expect("registry spec"))
        .collect()
}

/// The shipped laws that are absolutely continuous.
pub fn shipped_ac() -> Vec<Distribution> {
    shipped().into_iter().filter(|d| !d.has_singular_part()).collect()
}

/// `E(G^α)` for a standard Gaussian `G` in `R^N` (pair-partition count per coordinate).
pub fn gaussian_moment(alpha: &MultiIndex) -> Rational {
    let dim = alpha.max_coord() as usize;
    let mut acc = Rational::one();
    for c in alpha.counts(dim.max(1)) {
        if c % 2 == 1 {
            return Rational::zero();
        }
        for j in (1..c).step_by(2) {
            acc *= rint(j as i64);
        }
    }
    acc
}

/// `Δ_α = E(F^α) − E(G^α)`; exactly zero for `|α| ≤ 2`.
pub fn delta(dist: &Distribution, alpha: &MultiIndex) -> Result<f64> {
    if alpha.len() > dist.max_order() {
        return Err(Error::OrderExceeded { requested: alpha.len(), max: dist.max_order() });
    }
    if alpha.len() <= 2 {
        return Ok(0.0);
    }
    Ok(dist.moment(alpha)? - gaussian_moment(alpha).to_f64())
}

/// Table of `Δ_α` for `|α| ≤ max_order`, keyed by sorted multiindex.
#[derive(Clone, Debug)]
pub struct MomentTable<S: Scalar> {
    dim: usize,
    max_order: usize,
    delta: HashMap<MultiIndex, S>,
}

impl<S: Scalar> MomentTable<S> {
    /// Build from a generator called once per sorted α with `3 ≤ |α| ≤ max_order`.
    pub fn from_fn(dim: usize, max_order: usize, mut f: impl FnMut(&MultiIndex) -> S) -> Self {
        let mut delta = HashMap::new();
        for len in 3..=max_order {
            for a in MultiIndex::all_sorted(dim, len) {
                let v = f(&a);
                delta.insert(a, v);
            }
        }
        MomentTable { dim, max_order, delta }
    }

    /// 1-D table from `Δ_3, Δ_4, …` given in order.
    pub fn univariate(deltas_from_3: &[S]) -> Self {
        let max_order = deltas_from_3.len() + 2;
        Self::from_fn(1, max_order, |a| deltas_from_3[a.len() - 3].clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `Δ_α` (order-insensitive). Panics above `max_order`.
    pub fn delta(&self, alpha: &MultiIndex) -> S {
        self.try_delta(alpha).expect("Δ order within table")
    }

    pub fn try_delta(&self, alpha: &MultiIndex) -> Result<S> {
        if alpha.len() > self.max_order {
            return Err(Error::OrderExceeded { requested: alpha.len(), max: self.max_order });
        }
        if alpha.len() <= 2 {
            return Ok(S::zero());
        }
        Ok(self.delta[&alpha.canonical()].clone())
    }

    /// `ℓ_t = E F^t` for standardized 1-D `F`.
    pub fn ell(&self, t: usize) -> S {
        assert_eq!(self.dim, 1, "ℓ_t is defined in dimension one");
        self.try_delta(&MultiIndex::repeat(1, t)).expect("order")
            + S::from_rational(&gaussian_moment(&MultiIndex::repeat(1, t)))
    }

    /// `sup_{|α| ≤ order} |Δ_α|`.
    pub fn sup_abs_delta(&self, order: usize) -> f64 {
        self.delta
            .iter()
            .filter(|(a, _)| a.len() <= order)
            .map(|(_, v)| v.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

impl MomentTable<f64> {
    /// Table for a standardized distribution.
    pub fn from_distribution(dist: &Distribution, max_order: usize) -> Result<Self> {
        if max_order > dist.max_order() {
            return Err(Error::OrderExceeded { requested: max_order, max: dist.max_order() });
        }
        let mut err = None;
        let table = Self::from_fn(dist.dim(), max_order, |a| match delta(dist, a) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(table),
        }
    }
}

/// Sample moment helper: `(1/M) Σ_m Π_j x_m[α_j]`.
pub fn sample_moment(samples: &[Vec<f64>], alpha: &MultiIndex) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|x| alpha.entries().iter().map(|&c| x[(c - 1) as usize]).product::<f64>())
        .sum();
    total / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn std(spec: &str) -> Distribution {
        Distribution::from_spec(spec).unwrap().standardize().unwrap()
    }

    #[test]
    fn gaussian_moments() {
        assert_eq!(gaussian_moment(&MultiIndex::from([1, 1, 1, 1])), rint(3));
        assert_eq!(gaussian_moment(&MultiIndex::from([1, 2])), rint(0));
        assert_eq!(gaussian_moment(&MultiIndex::from([1, 1, 2, 2])), rint(1));
        assert_eq!(gaussian_moment(&MultiIndex::from([2, 1, 2, 1, 1, 1])), rint(3));
        assert_eq!(gaussian_moment(&MultiIndex::empty()), rint(1));
        // single repeated coordinate: (t-1)!!
        let dfact = [1, 0, 1, 0, 3, 0, 15, 0, 105, 0, 945];
        for (t, &v) in dfact.iter().enumerate() {
            assert_eq!(gaussian_moment(&MultiIndex::repeat(2, t)), rint(v));
        }
    }

    #[test]
    fn standardize_uniform() {
        let u = std("uniform");
        assert!(u.is_standardized(1e-12));
        let s3 = 3f64.sqrt();
        assert!((u.ac_density(&[0.0]) - 1.0 / (2.0 * s3)).abs() < 1e-12);
        assert!((u.ac_density(&[s3 - 1e-9]) - 1.0 / (2.0 * s3)).abs() < 1e-12);
        assert_eq!(u.ac_density(&[s3 + 1e-9]), 0.0);
        let m4 = u.moment(&MultiIndex::repeat(1, 4)).unwrap();
        assert!((m4 - 9.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_normal_and_exp() {
        let n = std("normal");
        assert!((n.map()[(0, 0)] - 1.0).abs() < 1e-15);
        let e = std("exp");
        assert!((e.moment(&MultiIndex::repeat(1, 3)).unwrap() - 2.0).abs() < 1e-12);
        // law of E − 1: density e^{-(x+1)} for x ≥ −1
        assert!((e.ac_density(&[0.0]) - (-1f64).exp()).abs() < 1e-12);
        assert_eq!(e.ac_density(&[-1.5]), 0.0);
    }

    #[test]
    fn standardize_is_idempotent() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -0.3, 1.0]);
        let d = Distribution::from_spec("exp*uniform").unwrap().with_affine(m, vec![1.0, -2.0]);
        let s1 = d.standardize().unwrap();
        let s2 = s1.standardize().unwrap();
        assert!(s1.is_standardized(1e-12));
        assert!((s1.map() - s2.map()).abs().max() < 1e-12);
    }

    #[test]
    fn singular_covariance_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let d = Distribution::from_spec("exp*exp").unwrap().with_affine(m, vec![0.0, 0.0]);
        assert!(matches!(d.standardize(), Err(Error::NonInvertibleCovariance { .. })));
    }

    #[test]
    fn delta_examples() {
        let e = std("exp");
        assert!((delta(&e, &MultiIndex::from([1, 1, 1])).unwrap() - 2.0).abs() < 1e-12);
        let u = std("uniform");
        assert!((delta(&u, &MultiIndex::repeat(1, 4)).unwrap() + 1.2).abs() < 1e-12);
        for d in shipped() {
            let d = d.standardize().unwrap();
            assert_eq!(delta(&d, &MultiIndex::from([1, 1])).unwrap(), 0.0);
        }
        let small = e.clone().with_max_order(4);
        assert!(matches!(
            delta(&small, &MultiIndex::repeat(1, 5)),
            Err(Error::OrderExceeded { requested: 5, max: 4 })
        ));
    }

    #[test]
    fn symmetric_uniform_has_vanishing_low_deltas() {
        let t = MomentTable::from_distribution(&std("uniform"), 6).unwrap();
        assert!(t.sup_abs_delta(3) < 1e-14);
        assert!(t.sup_abs_delta(4) > 1.0);
    }

    #[test]
    fn multivariate_moments_match_monte_carlo_free_identities() {
        // For a rotation of independent coordinates, second moments are the identity after standardization
        // and Δ is symmetric under permutation.
        let th: f64 = 0.6;
        let m = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let d = Distribution::from_spec("exp*laplace").unwrap().with_affine(m, vec![0.0, 0.0]);
        let d = d.standardize().unwrap();
        for a in MultiIndex::all(2, 2) {
            let expect = if a.entries()[0] == a.entries()[1] { 1.0 } else { 0.0 };
            assert!((d.moment(&a).unwrap() - expect).abs() < 1e-12);
        }
        let a = delta(&d, &MultiIndex::from([1, 2, 2, 1, 1])).unwrap();
        let b = delta(&d, &MultiIndex::from([2, 1, 1, 1, 2])).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rational_fixture_table() {
        let t = MomentTable::<Rational>::univariate(&[rint(2), rint(6), rint(44)]);
        assert_eq!(t.ell(3), rint(2));
        assert_eq!(t.ell(4), rint(9));
        assert_eq!(t.delta(&MultiIndex::repeat(1, 5)), rint(44));
        assert_eq!(t.delta(&MultiIndex::repeat(1, 2)), rat(0, 1));
    }

    #[test]
    fn atom_mixture_moments_and_singular_mass() {
        let d = Distribution::from_spec("atommix:p=0.5,c=2").unwrap();
        assert!((d.singular_mass() - 0.5).abs() < 1e-15);
        assert!((d.moment(&MultiIndex::from([1])).unwrap() - 1.0).abs() < 1e-15);
        let s = d.standardize().unwrap();
        // mean 1, var 0.5·1 + 0.5·4 − 1 = 1.5
        let atom = s.atom().unwrap();
        assert!((atom - 1.0 / 1.5f64.sqrt()).abs() < 1e-12);
    }
}
