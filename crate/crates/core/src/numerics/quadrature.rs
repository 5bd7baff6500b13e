//! Gauss–Hermite rules for Gaussian expectations and adaptive Gauss–Kronrod
//! integration on finite intervals.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Nodes and weights with `Σ w_i f(x_i) ≈ E f(G)`, `G ~ N(0,1)`.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "at least two nodes");
        // Golub–Welsch for the probabilists' recurrence, then Newton polishing.
        let mut j = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64).sqrt();
            j[(k, k - 1)] = b;
            j[(k - 1, k)] = b;
        }
        let mut nodes: Vec<f64> = j.symmetric_eigen().eigenvalues.iter().cloned().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..8 {
                let (hn, hn1) = normalized_hermite(n, *x);
                let step = hn / ((n as f64).sqrt() * hn1);
                *x -= step;
                if step.abs() < 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, hn1) = normalized_hermite(n, *x);
            weights.push(1.0 / (n as f64 * hn1 * hn1));
        }
        // Symmetrize against round-off.
        for k in 0..n / 2 {
            let x = 0.5 * (nodes[n - 1 - k] - nodes[k]);
            let w = 0.5 * (weights[k] + weights[n - 1 - k]);
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        GaussHermite { nodes, weights }
    }

    /// Shared 64-node rule.
    pub fn standard() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(64))
    }

    /// Shared 80-node rule, used as the convergence reference.
    pub fn reference() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(80))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Tensor-product estimate of `E f(G)` for `G ~ N(0, I_dim)`.
    pub fn expect(&self, dim: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
        assert!((1..=3).contains(&dim), "tensor Gauss–Hermite supports 1 ≤ dim ≤ 3");
        let n = self.nodes.len();
        let mut x = vec![0.0; dim];
        let mut idx = vec![0usize; dim];
        let mut acc = 0.0;
        loop {
            let mut w = 1.0;
            for (d, &i) in idx.iter().enumerate() {
                x[d] = self.nodes[i];
                w *= self.weights[i];
            }
            acc += w * f(&x);
            let mut d = 0;
            loop {
                if d == dim {
                    return acc;
                }
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
}

// (h_n(x), h_{n−1}(x)) with h_k = He_k / √(k!).
fn normalized_hermite(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `∫ f γ_dim` by a tensor Gauss–Hermite rule with `nodes` points per axis.
pub fn gauss_hermite(f: impl Fn(&[f64]) -> f64, dim: usize, nodes: usize) -> f64 {
    match nodes {
        64 => GaussHermite::standard().expect(dim, f),
        80 => GaussHermite::reference().expect(dim, f),
        _ => GaussHermite::new(nodes).expect(dim, f),
    }
}

/// 64-node estimate, rejected when it disagrees with the 80-node rule.
pub fn gauss_expect_checked(f: impl Fn(&[f64]) -> f64, dim: usize) -> Result<f64> {
    let a = GaussHermite::standard().expect(dim, &f);
    let b = GaussHermite::reference().expect(dim, &f);
    if !a.is_finite() || (a - b).abs() > 1e-9 * (1.0 + b.abs()) {
        return Err(Error::QuadratureNotConverged(format!(
            "Gauss–Hermite 64 vs 80 nodes: {a:e} vs {b:e}"
        )));
    }
    Ok(a)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let fs = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * fs;
        if j % 2 == 1 {
            g += WG[j / 2] * fs;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (first, err) = gk15(&f, a, b);
    // Max-heap on the error estimate; bit patterns of nonnegative floats order like the floats.
    let mut heap = BinaryHeap::new();
    heap.push((err.to_bits(), a.to_bits(), b.to_bits(), first.to_bits()));
    let mut total = first;
    let mut total_err = err;
    for _ in 0..20_000 {
        if total_err <= tol {
            return Ok(total);
        }
        let (e, lo, hi, v) = heap.pop().expect("nonempty");
        let (e, lo, hi, v) = (f64::from_bits(e), f64::from_bits(lo), f64::from_bits(hi), f64::from_bits(v));
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        heap.push((e1.to_bits(), lo.to_bits(), mid.to_bits(), v1.to_bits()));
        heap.push((e2.to_bits(), mid.to_bits(), hi.to_bits(), v2.to_bits()));
        if !total.is_finite() || !total_err.is_finite() {
            break;
        }
    }
    let intervals: Vec<(f64, f64)> =
        heap.into_iter().map(|(e, _, _, v)| (f64::from_bits(v), f64::from_bits(e))).collect();
    // Recompute from scratch to shed accumulated cancellation before giving up.
    let sum: f64 = intervals.iter().map(|i| i.0).sum();
    let err: f64 = intervals.iter().map(|i| i.1).sum();
    if err <= tol && sum.is_finite() {
        return Ok(sum);
    }
    Err(Error::QuadratureNotConverged(format!(
        "adaptive Gauss–Kronrod on [{a}, {b}]: error estimate {err:e} > {tol:e}"
    )))
}

/// [`integrate`] over consecutive pieces `[pts[k], pts[k+1]]`; useful when
/// `f` has kinks at known points.
pub fn integrate_pieces(f: impl Fn(f64) -> f64, pts: &[f64], tol: f64) -> Result<f64> {
    let pieces = pts.len().saturating_sub(1).max(1) as f64;
    pts.windows(2).map(|w| integrate(&f, w[0], w[1], tol / pieces)).sum()
}
