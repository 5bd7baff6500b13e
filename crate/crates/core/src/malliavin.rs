//! Malliavin calculus with respect to the splitting noise `V_1, …, V_n`.
//!
//! Only the `V_k` are differentiated, so `D_{(k,i)} S_n^l = n^{−1/2} χ_k 1_{l=i}`,
//! `σ_{S_n} = (Σχ_k / n) I` and `L S_n^l = −n^{−1/2} Σ_k χ_k ∂_l ln ψ_{r₀/2}(|V_k − v₀|)`.
//! Integration by parts is localized by `φ(det σ)`, a smooth ramp vanishing
//! below `ε*/2` and equal to one above `ε* = 2^{−N} m₀^N`.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::numerics::{gauss_hermite, integrate};
use crate::poly::MultiPoly;
use crate::seed::{chunk_sizes, stream_rng};
use crate::splitting::{dlog_psi_loc, SplitRep};

const CHUNKS: u64 = 64;

/// One draw of `(χ_k, V_k, W_k)_{k ≤ n}` and `S_n`. `V_k` is kept where
/// `χ_k = 1`, `W_k` where `χ_k = 0`.
#[derive(Clone, Debug)]
pub struct MalliavinState<'a> {
    pub n: usize,
    pub chi: Vec<bool>,
    pub v: Vec<Option<Vec<f64>>>,
    pub w: Vec<Option<Vec<f64>>>,
    pub s_n: Vec<f64>,
    pub rep: &'a SplitRep,
}

impl MalliavinState<'_> {
    pub fn chi_count(&self) -> usize {
        self.chi.iter().filter(|&&c| c).count()
    }

    /// `λ_{S_n} = Σχ_k / n`.
    pub fn lambda(&self) -> f64 {
        self.chi_count() as f64 / self.n as f64
    }

    /// `det σ_{S_n} = λ^N`.
    pub fn det_sigma(&self) -> f64 {
        self.lambda().powi(self.rep.dim() as i32)
    }

    /// `σ_{S_n}^{l,l'} = Σ_{k,i} D_{(k,i)} S_n^l D_{(k,i)} S_n^{l'}` from the
    /// derivative matrix itself.
    pub fn sigma(&self) -> Vec<Vec<f64>> {
        let dim = self.rep.dim();
        let s = 1.0 / (self.n as f64).sqrt();
        // derivative[l][(k, i)]
        let deriv: Vec<Vec<f64>> = (0..dim)
            .map(|l| {
                (0..self.n)
                    .flat_map(|k| (0..dim).map(move |i| (k, i)))
                    .map(|(k, i)| if self.chi[k] && i == l { s } else { 0.0 })
                    .collect()
            })
            .collect();
        (0..dim)
            .map(|l| (0..dim).map(|m| deriv[l].iter().zip(&deriv[m]).map(|(a, b)| a * b).sum()).collect())
            .collect()
    }
}

pub fn sample_state<'a, R: Rng + ?Sized>(rep: &'a SplitRep, n: usize, rng: &mut R) -> Result<MalliavinState<'a>> {
    assert!(n >= 1, "n ≥ 1");
    let dim = rep.dim();
    let mut chi = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut s_n = vec![0.0; dim];
    for _ in 0..n {
        let c = rep.sample_chi(rng);
        let x = if c {
            let x = rep.sample_v(rng)?;
            v.push(Some(x.clone()));
            w.push(None);
            x
        } else {
            let (x, _) = rep.sample_w(rng)?;
            v.push(None);
            w.push(Some(x.clone()));
            x
        };
        chi.push(c);
        for (s, xi) in s_n.iter_mut().zip(&x) {
            *s += xi;
        }
    }
    let scale = 1.0 / (n as f64).sqrt();
    s_n.iter_mut().for_each(|s| *s *= scale);
    Ok(MalliavinState { n, chi, v, w, s_n, rep })
}

/// `∇ ln ψ_{r₀/2}(|v − v₀|)`, exactly zero on the plateau.
pub fn grad_log_psi(rep: &SplitRep, v: &[f64]) -> Vec<f64> {
    let a = rep.r0 / 2.0;
    let r = v.iter().zip(&rep.v0).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt();
    if r <= a {
        return vec![0.0; v.len()];
    }
    let d = dlog_psi_loc(a, r);
    v.iter().zip(&rep.v0).map(|(x, c)| d * (x - c) / r).collect()
}

/// `L S_n`.
pub fn ou_l(state: &MalliavinState<'_>) -> Vec<f64> {
    let dim = state.rep.dim();
    let mut out = vec![0.0; dim];
    for (k, c) in state.chi.iter().enumerate() {
        if !c {
            continue;
        }
        let g = grad_log_psi(state.rep, state.v[k].as_ref().expect("V present where χ = 1"));
        for (o, gi) in out.iter_mut().zip(g) {
            *o -= gi;
        }
    }
    let s = 1.0 / (state.n as f64).sqrt();
    out.iter_mut().for_each(|o| *o *= s);
    out
}

/// `ε* = 2^{−N} m₀^N`.
pub fn eps_star(rep: &SplitRep) -> f64 {
    (rep.m0 / 2.0).powi(rep.dim() as i32)
}

/// Smooth ramp: 0 on `(−∞, ε*/2]`, 1 on `[ε*, ∞)`.
pub fn localizer(eps_star: f64, d: f64) -> f64 {
    let g = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    let s = (d - 0.5 * eps_star) / (0.5 * eps_star);
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        g(s) / (g(s) + g(1.0 - s))
    }
}

/// `H = φ(det σ) (n / Σχ_k) L S_n`, the first-order weight with `θ = φ(det σ)`.
pub fn ibp_weight(state: &MalliavinState<'_>, theta: f64) -> Result<Vec<f64>> {
    let dim = state.rep.dim();
    if theta == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    let count = state.chi_count();
    if count == 0 {
        return Err(Error::DegenerateSigma);
    }
    let f = theta * state.n as f64 / count as f64;
    Ok(ou_l(state).into_iter().map(|l| f * l).collect())
}

/// Running mean and variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, o: &Accumulator) {
        self.count += o.count;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn std_error(&self) -> f64 {
        let m = self.mean();
        let var = (self.sum_sq / self.count as f64 - m * m).max(0.0) * self.count as f64 / (self.count as f64 - 1.0);
        (var / self.count as f64).sqrt()
    }
}

/// Smooth one-dimensional test function with its derivative.
#[derive(Clone, Copy)]
pub struct TestFn {
    pub name: &'static str,
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
}

/// `{sin, x, x², x·e^{−x²/2}}`.
pub fn test_battery() -> Vec<TestFn> {
    vec![
        TestFn { name: "sin", f: f64::sin, df: f64::cos },
        TestFn { name: "x", f: |x| x, df: |_| 1.0 },
        TestFn { name: "x^2", f: |x| x * x, df: |x| 2.0 * x },
        TestFn { name: "x*exp(-x^2/2)", f: |x| x * (-0.5 * x * x).exp(), df: |x| (1.0 - x * x) * (-0.5 * x * x).exp() },
    ]
}

pub fn constant_fn() -> TestFn {
    TestFn { name: "1", f: |_| 1.0, df: |_| 0.0 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IbpReport {
    pub function: String,
    pub n: usize,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// `|lhs − rhs|` over the standard error of the per-draw difference.
    pub z_score: f64,
    pub samples: u64,
}

/// Monte Carlo of `E(∂_1 f(S_n) φ)` against `E(f(S_n) H_1)` for each test
/// function, sharing the draws. Chunk `k` of the samples uses stream `k` of `seed`.
pub fn ibp_battery(rep: &SplitRep, n: usize, fns: &[TestFn], samples: u64, seed: u64) -> Result<Vec<IbpReport>> {
    let es = eps_star(rep);
    let per_chunk: Vec<Result<Vec<[Accumulator; 3]>>> = chunk_sizes(samples, CHUNKS)
        .into_par_iter()
        .enumerate()
        .map(|(k, m)| {
            let mut rng = stream_rng(seed, k as u64);
            let mut acc = vec![[Accumulator::default(); 3]; fns.len()];
            for _ in 0..m {
                let st = sample_state(rep, n, &mut rng)?;
                let phi = localizer(es, st.det_sigma());
                let h = ibp_weight(&st, phi)?[0];
                let x = st.s_n[0];
                for (a, t) in acc.iter_mut().zip(fns) {
                    let lhs = (t.df)(x) * phi;
                    let rhs = (t.f)(x) * h;
                    a[0].push(lhs);
                    a[1].push(rhs);
                    a[2].push(lhs - rhs);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![[Accumulator::default(); 3]; fns.len()];
    for chunk in per_chunk {
        for (t, c) in total.iter_mut().zip(chunk?) {
            for j in 0..3 {
                t[j].merge(&c[j]);
            }
        }
    }
    Ok(fns
        .iter()
        .zip(total)
        .map(|(t, a)| {
            let se = a[2].std_error();
            let diff = a[2].mean().abs();
            IbpReport {
                function: t.name.to_string(),
                n,
                lhs: a[0].mean(),
                lhs_se: a[0].std_error(),
                rhs: a[1].mean(),
                rhs_se: a[1].std_error(),
                z_score: if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY },
                samples,
            }
        })
        .collect())
}

pub fn ibp_check(rep: &SplitRep, n: usize, f: TestFn, samples: u64, seed: u64) -> Result<IbpReport> {
    Ok(ibp_battery(rep, n, &[f], samples, seed)?.remove(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaTail {
    pub n: usize,
    pub eps: f64,
    pub estimate: f64,
    /// `√(p(1−p)/M)` at the exact probability `p`.
    pub std_error: f64,
    pub exact_binomial: f64,
    /// `C exp(−n / (4(1/m₀ − 1)))` with `C` fitted at `n = 10`.
    pub exp_bound: f64,
    pub samples: u64,
}

/// Largest `Σχ` with `(Σχ/n)^N ≤ ε`.
fn chi_threshold(n: usize, eps: f64, dim: usize) -> Option<u64> {
    let x = n as f64 * eps.powf(1.0 / dim as f64);
    let t = (x * (1.0 + 1e-12)).floor();
    (t >= 0.0).then_some(t as u64)
}

/// `P(det σ_{S_n} ≤ ε)` with `ε = ε*/2`: exact binomial value.
pub fn sigma_tail_exact(rep: &SplitRep, n: usize) -> f64 {
    let eps = 0.5 * eps_star(rep);
    match chi_threshold(n, eps, rep.dim()) {
        Some(t) => Binomial::new(rep.m0, n as u64).expect("valid binomial").cdf(t),
        None => 0.0,
    }
}

/// `exp(−n / (4(1/m₀ − 1)))`, the decay shape to be multiplied by a constant.
pub fn sigma_tail_shape(m0: f64, n: usize) -> f64 {
    (-(n as f64) / (4.0 * (1.0 / m0 - 1.0))).exp()
}

/// Monte Carlo of `P(det σ_{S_n} ≤ ε*/2)` (only the `χ_k` enter `σ`), the exact
/// binomial value and the exponential bound with its constant calibrated at `n = 10`.
pub fn sigma_tail(rep: &SplitRep, n: usize, samples: u64, seed: u64) -> SigmaTail {
    let eps = 0.5 * eps_star(rep);
    let threshold = chi_threshold(n, eps, rep.dim());
    let hits: u64 = chunk_sizes(samples, CHUNKS)
        .into_par_iter()
        .enumerate()
        .map(|(k, m)| {
            let mut rng = stream_rng(seed, k as u64);
            let mut hits = 0;
            for _ in 0..m {
                let count = (0..n).filter(|_| rep.sample_chi(&mut rng)).count() as u64;
                if threshold.is_some_and(|t| count <= t) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let exact = sigma_tail_exact(rep, n);
    let c = sigma_tail_exact(rep, 10) / sigma_tail_shape(rep.m0, 10);
    SigmaTail {
        n,
        eps,
        estimate: hits as f64 / samples as f64,
        std_error: (exact * (1.0 - exact) / samples as f64).sqrt(),
        exact_binomial: exact,
        exp_bound: c * sigma_tail_shape(rep.m0, n),
        samples,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaylorCheck {
    pub g0: f64,
    pub truncated: f64,
    pub remainder: f64,
    pub residual: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Backward Gaussian Taylor formula in one dimension:
/// `g(0) = Σ_{ℓ≤L} (−1)^ℓ/(2^ℓ ℓ!) E g^{(2ℓ)}(G) + (−1)^{L+1}/(2^{L+1} L!) ∫₀¹ s^L E g^{(2L+2)}(√s G) ds`.
pub fn backward_taylor_check(g: &MultiPoly<f64>, l: usize) -> Result<TaylorCheck> {
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: g.dim() });
    }
    let mut truncated = 0.0;
    let mut d = g.clone();
    for ell in 0..=l {
        let e = gauss_hermite(|x| d.eval(x), 1, 64);
        let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
        truncated += sign * e / (2f64.powi(ell as i32) * factorial(ell));
        d = d.derivative(0).derivative(0);
    }
    // d is now g^{(2L+2)}
    let remainder = if d.is_zero() {
        0.0
    } else {
        let sign = if (l + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let inner = integrate(
            |s| s.powi(l as i32) * gauss_hermite(|x| d.eval(&[s.sqrt() * x[0]]), 1, 64),
            0.0,
            1.0,
            1e-13,
        )?;
        sign * inner / (2f64.powi(l as i32 + 1) * factorial(l))
    };
    let g0 = g.eval(&[0.0]);
    Ok(TaylorCheck { g0, truncated, remainder, residual: (g0 - truncated - remainder).abs() })
}
