//! Exact law of `S_n` on a grid by Fourier inversion of `φ_F(t/√n)^n`.
//!
//! With `x_j = c − L + j·dx`, `t_k = (k − M/2)·dt` and `dt·dx = 2π/M`,
//! `p(x_j) ≈ (dt/2π)(−1)^j Σ_k φ(t_k) e^{−i t_k (c−L)} e^{−2πi jk/M}`,
//! which is a forward FFT. Laws with an atom are handled by inverting only
//! the absolutely continuous part of the `n`-fold convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::moments::Distribution;
use crate::multiindex::MultiIndex;

use super::grid::{GridDensity, GridSpec};

/// Binomial-decomposition terms below this weight are moved to the singular mass.
pub const ATOM_TERM_CUTOFF: f64 = 1e-12;

const TAIL_MOMENT_ORDER: usize = 16;

/// Density of `S_n = n^{−1/2}(F_1 + … + F_n)` for a standardized law.
pub fn law_of_sn(dist: &Distribution, n: usize, spec: &GridSpec) -> Result<GridDensity> {
    if !dist.is_standardized(1e-8) {
        return Err(Error::Unsupported(format!(
            "law_of_sn expects a standardized law; `{}` is not (use law_of_sum)",
            dist.label()
        )));
    }
    law_impl(dist, n, 1.0 / (n as f64).sqrt(), spec)
}

/// Density of the raw sum `F_1 + … + F_n`.
pub fn law_of_sum(dist: &Distribution, n: usize, spec: &GridSpec) -> Result<GridDensity> {
    law_impl(dist, n, 1.0, spec)
}

fn law_impl(dist: &Distribution, n: usize, scale: f64, spec: &GridSpec) -> Result<GridDensity> {
    assert!(n >= 1, "n ≥ 1");
    if spec.dim != dist.dim() {
        return Err(Error::DimensionMismatch { expected: dist.dim(), got: spec.dim });
    }
    let (cf, singular): (Box<dyn Fn(&[f64]) -> Complex64>, f64) = if dist.has_singular_part() {
        let atom = dist
            .atom()
            .ok_or_else(|| Error::Unsupported("singular parts are supported for 1-D atom mixtures only".into()))?;
        let p = 1.0 - dist.singular_mass();
        let (terms, singular) = binomial_terms(n, p);
        let d = dist.clone();
        let cf = move |t: &[f64]| {
            let u = [t[0] * scale];
            let psi = d.ac_char_fn(&u);
            terms
                .iter()
                .map(|&(k, w)| psi.powu(k as u32) * Complex64::new(0.0, u[0] * (n - k) as f64 * atom).exp() * w)
                .sum()
        };
        (Box::new(cf), singular)
    } else {
        let d = dist.clone();
        let cf = move |t: &[f64]| {
            let u: Vec<f64> = t.iter().map(|x| x * scale).collect();
            d.char_fn(&u).powu(n as u32)
        };
        (Box::new(cf), 0.0)
    };
    let values = invert(spec, &*cf);
    let tail = tail_bound(dist, n, scale, spec)?;
    let density = GridDensity::new(spec.clone(), values, tail, singular);
    let expected = 1.0 - singular;
    let mass = density.mass();
    if (mass - expected).abs() > 1e-4 + tail || !mass.is_finite() {
        return Err(Error::AliasingDetected { mass, expected });
    }
    Ok(density)
}

/// `(k, C(n,k) p^k (1−p)^{n−k})` for `k ≥ 1` above the cutoff, and the
/// remaining mass (including `k = 0`).
fn binomial_terms(n: usize, p: f64) -> (Vec<(usize, f64)>, f64) {
    let ln_choose = |k: usize| ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64);
    let mut kept = Vec::new();
    let mut skipped = (1.0 - p).powi(n as i32);
    for k in 1..=n {
        let w = (ln_choose(k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp();
        if w >= ATOM_TERM_CUTOFF {
            kept.push((k, w));
        } else {
            skipped += w;
        }
    }
    (kept, skipped)
}

fn invert(spec: &GridSpec, cf: &dyn Fn(&[f64]) -> Complex64) -> Vec<f64> {
    let m = spec.points;
    let dx = spec.dx();
    let dt = 2.0 * PI / (m as f64 * dx);
    let t = |k: usize| (k as f64 - (m / 2) as f64) * dt;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let sign = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
    match spec.dim {
        1 => {
            let shift = spec.lo(0);
            let mut buf: Vec<Complex64> = (0..m)
                .map(|k| {
                    let tk = t(k);
                    cf(&[tk]) * Complex64::new(0.0, -tk * shift).exp()
                })
                .collect();
            fft.process(&mut buf);
            buf.iter().enumerate().map(|(j, z)| sign(j) * z.re * dt / (2.0 * PI)).collect()
        }
        _ => {
            let (s0, s1) = (spec.lo(0), spec.lo(1));
            let mut buf: Vec<Complex64> = (0..m * m)
                .map(|flat| {
                    let (t0, t1) = (t(flat / m), t(flat % m));
                    cf(&[t0, t1]) * Complex64::new(0.0, -(t0 * s0 + t1 * s1)).exp()
                })
                .collect();
            for row in buf.chunks_mut(m) {
                fft.process(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); m];
            for c in 0..m {
                for r in 0..m {
                    col[r] = buf[r * m + c];
                }
                fft.process(&mut col);
                for r in 0..m {
                    buf[r * m + c] = col[r];
                }
            }
            let norm = (dt / (2.0 * PI)).powi(2);
            buf.iter()
                .enumerate()
                .map(|(flat, z)| sign(flat / m + flat % m) * z.re * norm)
                .collect()
        }
    }
}

/// Markov bound `min_k E|S_i − c_i|^k / L^k` over even `k ≤ 16`, summed over axes.
fn tail_bound(dist: &Distribution, n: usize, scale: f64, spec: &GridSpec) -> Result<f64> {
    let order = TAIL_MOMENT_ORDER.min(dist.max_order());
    let mut total = 0.0;
    for axis in 0..spec.dim {
        let raw: Vec<f64> = (0..=order)
            .map(|j| {
                if j == 0 {
                    Ok(1.0)
                } else {
                    dist.moment(&MultiIndex::repeat((axis + 1) as u8, j))
                }
            })
            .collect::<Result<_>>()?;
        // Moments of one summand scale·Y − c/n.
        let shift = -spec.center[axis] / n as f64;
        let single: Vec<f64> = (0..=order)
            .map(|j| {
                (0..=j)
                    .map(|l| binom(j, l) * scale.powi(l as i32) * raw[l] * shift.powi((j - l) as i32))
                    .sum()
            })
            .collect();
        let sum = moments_of_sum(&single, n);
        let bound = (2..=order)
            .step_by(2)
            .map(|k| sum[k] / spec.half_width.powi(k as i32))
            .fold(1.0, f64::min);
        total += bound.max(0.0);
    }
    Ok(total)
}

fn binom(n: usize, k: usize) -> f64 {
    (ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64))
        .exp()
        .round()
}

fn convolve_moments(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|j| (0..=j).map(|l| binom(j, l) * a[l] * b[j - l]).sum())
        .collect()
}

/// Raw moments of the sum of `n` independent copies.
fn moments_of_sum(single: &[f64], n: usize) -> Vec<f64> {
    let mut acc: Vec<f64> = (0..single.len()).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect();
    let mut base = single.to_vec();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc = convolve_moments(&acc, &base);
        }
        base = convolve_moments(&base, &base);
        k >>= 1;
    }
    acc
}
