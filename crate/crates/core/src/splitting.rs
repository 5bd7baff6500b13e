//! Splitting `F = χV + (1−χ)W` for laws dominating `ε₀·Leb` on a ball.
//!
//! `χ ~ Bernoulli(m₀)`, `V` has density `(ε₀/m₀)ψ_{r₀/2}(|v−v₀|)` and `W` takes
//! the rest of the mass, `(μ_F − ε₀ψ_{r₀/2}(|·−v₀|)dv)/(1−m₀)`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::moments::Distribution;
use crate::numerics::integrate_pieces;

const SCAN_POINTS: usize = 4096;
const BALL_PROBES: usize = 257;
const MAX_PROPOSALS: u64 = 1_000_000;

/// `ψ_a(x)`: 1 on `|x| ≤ a`, `exp(1 − a²/(a² − (|x|−a)²))` on `a < |x| < 2a`, 0 beyond.
pub fn psi_loc(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "a > 0");
    let r = x.abs();
    if r <= a {
        1.0
    } else if r < 2.0 * a {
        let u = r - a;
        (1.0 - a * a / (a * a - u * u)).exp()
    } else {
        0.0
    }
}

/// `d/dr ln ψ_a(r)` for `r ≥ 0` inside the support; 0 on the plateau.
pub fn dlog_psi_loc(a: f64, r: f64) -> f64 {
    if r <= a {
        return 0.0;
    }
    let u = r - a;
    let den = a * a - u * u;
    -2.0 * a * a * u / (den * den)
}

/// `∫_{R^dim} ψ_a(|v|) dv`.
pub fn psi_integral(a: f64, dim: usize) -> Result<f64> {
    match dim {
        1 => Ok(2.0 * integrate_pieces(|r| psi_loc(a, r), &[0.0, a, 2.0 * a], 1e-13)?),
        2 => Ok(2.0 * PI * integrate_pieces(|r| r * psi_loc(a, r), &[0.0, a, 2.0 * a], 1e-13)?),
        _ => Err(Error::Unsupported(format!("splitting in dimension {dim}"))),
    }
}

fn norm(v: &[f64], v0: &[f64]) -> f64 {
    v.iter().zip(v0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// `(v₀, r₀, ε₀)` with `inf_{B_{r₀}(v₀)} p_F ≥ ε₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound {
    pub v0: Vec<f64>,
    pub r0: f64,
    pub eps0: f64,
}

fn scan_grid(dist: &Distribution) -> Vec<Vec<f64>> {
    let mean = dist.mean();
    let cov = dist.covariance();
    let dim = dist.dim();
    let per_axis = if dim == 1 { SCAN_POINTS } else { 64 };
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let s = cov[(a, a)].sqrt();
            (0..per_axis)
                .map(|j| mean[a] - 8.0 * s + 16.0 * s * (j as f64 + 0.5) / per_axis as f64)
                .collect()
        })
        .collect();
    match dim {
        1 => axes[0].iter().map(|&x| vec![x]).collect(),
        _ => axes[0].iter().flat_map(|&x| axes[1].iter().map(move |&y| vec![x, y])).collect(),
    }
}

fn ball_probes(v0: &[f64], r: f64) -> Vec<Vec<f64>> {
    match v0.len() {
        1 => (0..BALL_PROBES)
            .map(|k| vec![v0[0] + r * (2.0 * k as f64 / (BALL_PROBES - 1) as f64 - 1.0)])
            .collect(),
        _ => {
            let mut pts = vec![v0.to_vec()];
            for ring in 1..=16 {
                let rr = r * ring as f64 / 16.0;
                let count = 8 * ring;
                for k in 0..count {
                    let th = 2.0 * PI * k as f64 / count as f64;
                    pts.push(vec![v0[0] + rr * th.cos(), v0[1] + rr * th.sin()]);
                }
            }
            pts
        }
    }
}

fn ball_inf(dist: &Distribution, v0: &[f64], r: f64) -> f64 {
    ball_probes(v0, r).iter().map(|p| dist.ac_density(p)).fold(f64::INFINITY, f64::min)
}

/// Largest `r ≤ r_max` with `inf_{B_r(v)} p ≥ p(v)/2`, by bisection.
fn half_height_radius(dist: &Distribution, v: &[f64], r_max: f64) -> f64 {
    let target = 0.5 * dist.ac_density(v);
    if target <= 0.0 {
        return 0.0;
    }
    if ball_inf(dist, v, r_max) >= target {
        return r_max;
    }
    let (mut lo, mut hi) = (0.0, r_max);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ball_inf(dist, v, mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Deterministic search for a Lebesgue lower bound of the a.c. part.
///
/// Candidates are the scan-grid density maximizer and a coarse subset of the
/// scan grid; each gets the largest radius keeping the density above half its
/// centre value, and the candidate maximizing `p(v)·r^N` wins. `ε₀` is 0.9 times
/// the infimum on the ball, halved until `m₀ ≤ 1/2`.
pub fn find_lower_bound(dist: &Distribution) -> Result<LowerBound> {
    let dim = dist.dim();
    if !(1..=2).contains(&dim) {
        return Err(Error::Unsupported(format!("splitting in dimension {dim}")));
    }
    let grid = scan_grid(dist);
    let dens: Vec<f64> = grid.iter().map(|p| dist.ac_density(p)).collect();
    let max = dens.iter().cloned().fold(0.0, f64::max);
    if !(max >= 1e-12) {
        return Err(Error::NoLowerBoundFound { max_density: max });
    }
    // Ties (flat tops) resolve to the plateau point nearest the plateau centroid.
    let top: Vec<usize> = (0..grid.len()).filter(|&k| dens[k] >= max * (1.0 - 1e-9)).collect();
    let centroid: Vec<f64> = (0..dim)
        .map(|a| top.iter().map(|&k| grid[k][a]).sum::<f64>() / top.len() as f64)
        .collect();
    let argmax = *top
        .iter()
        .min_by(|&&x, &&y| norm(&grid[x], &centroid).partial_cmp(&norm(&grid[y], &centroid)).unwrap())
        .expect("nonempty plateau");

    let r_max = 4.0 * (0..dim).map(|a| dist.covariance()[(a, a)].sqrt()).fold(0.0, f64::max);
    let stride = if dim == 1 { 16 } else { 8 };
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let candidates = std::iter::once(argmax).chain((0..grid.len()).step_by(stride));
    for k in candidates {
        if dens[k] < 1e-3 * max {
            continue;
        }
        let r = half_height_radius(dist, &grid[k], r_max);
        let score = dens[k] * r.powi(dim as i32);
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, grid[k].clone(), r));
        }
    }
    let (_, v0, r0) = best.expect("at least the argmax is a candidate");
    if !(r0 > 0.0) {
        return Err(Error::NoLowerBoundFound { max_density: max });
    }
    let mut eps0 = 0.9 * ball_inf(dist, &v0, r0);
    let bump = psi_integral(r0 / 2.0, dim)?;
    while eps0 * bump > 0.5 {
        eps0 *= 0.5;
    }
    Ok(LowerBound { v0, r0, eps0 })
}

/// Result of the splitting construction.
#[derive(Clone, Debug)]
pub struct SplitRep {
    pub v0: Vec<f64>,
    pub r0: f64,
    pub eps0: f64,
    pub m0: f64,
    bump_integral: f64,
    base: Distribution,
}

/// Sup-norm reconstruction error and minimum residual density on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    pub points: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
    pub sup_error: f64,
    pub min_residual: f64,
}

pub fn split(dist: &Distribution) -> Result<SplitRep> {
    let lb = find_lower_bound(dist)?;
    let bump_integral = psi_integral(lb.r0 / 2.0, dist.dim())?;
    let mut rep = SplitRep {
        m0: lb.eps0 * bump_integral,
        v0: lb.v0,
        r0: lb.r0,
        eps0: lb.eps0,
        bump_integral,
        base: dist.clone(),
    };
    // ε₀ came from probes of the ball; shrink further if the residual dips below zero between them.
    for _ in 0..8 {
        if rep.reconstruction_check().min_residual >= -1e-12 {
            break;
        }
        rep.eps0 *= 0.5;
        rep.m0 = rep.eps0 * rep.bump_integral;
    }
    Ok(rep)
}

impl SplitRep {
    pub fn dim(&self) -> usize {
        self.v0.len()
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    /// `ε₀ ψ_{r₀/2}(|v − v₀|)`.
    pub fn carved(&self, v: &[f64]) -> f64 {
        self.eps0 * psi_loc(self.r0 / 2.0, norm(v, &self.v0))
    }

    /// `p_V(v) = (ε₀/m₀) ψ_{r₀/2}(|v − v₀|)`.
    pub fn v_density(&self, v: &[f64]) -> f64 {
        psi_loc(self.r0 / 2.0, norm(v, &self.v0)) / self.bump_integral
    }

    /// Density of the a.c. part of `μ_W`.
    pub fn w_density(&self, v: &[f64]) -> f64 {
        (self.base.ac_density(v) - self.carved(v)) / (1.0 - self.m0)
    }

    /// Mass of the singular part of `μ_W`.
    pub fn w_singular_mass(&self) -> f64 {
        self.base.singular_mass() / (1.0 - self.m0)
    }

    /// `m₀ p_V + (1−m₀) p_W − p_F` on a grid covering the ball and the bulk of `μ_F`.
    pub fn reconstruction_check(&self) -> ReconstructionReport {
        let mut points = scan_grid(&self.base);
        points.extend(ball_probes(&self.v0, self.r0));
        let mut errors = Vec::with_capacity(points.len());
        let mut min_residual = f64::INFINITY;
        for p in &points {
            let f = self.base.ac_density(p);
            let rec = self.m0 * self.v_density(p) + (1.0 - self.m0) * self.w_density(p);
            errors.push((rec - f).abs());
            min_residual = min_residual.min(f - self.carved(p));
        }
        let sup_error = errors.iter().cloned().fold(0.0, f64::max);
        ReconstructionReport { points, errors, sup_error, min_residual }
    }

    pub fn sample_chi<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.m0
    }

    /// `V` by rejection from the uniform law on `B_{r₀}(v₀)` with acceptance `ψ_{r₀/2}`.
    pub fn sample_v<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let a = self.r0 / 2.0;
        for proposals in 1..=MAX_PROPOSALS {
            let u: Vec<f64> = self.v0.iter().map(|c| c + self.r0 * (2.0 * rng.random::<f64>() - 1.0)).collect();
            let d = norm(&u, &self.v0);
            if d <= self.r0 && rng.random::<f64>() < psi_loc(a, d) {
                return Ok(u);
            }
            let _ = proposals;
        }
        Err(Error::RejectionStall { accepted: 0, proposals: MAX_PROPOSALS })
    }

    /// `W` by rejection from `μ_F`: a.c. draws are kept with probability
    /// `1 − ε₀ψ/p_F`, singular draws always. The flag marks singular draws.
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, bool)> {
        for _ in 0..MAX_PROPOSALS {
            let (x, singular) = self.base.sample(rng);
            if singular {
                return Ok((x, true));
            }
            let c = self.carved(&x);
            if c == 0.0 {
                return Ok((x, false));
            }
            let p = self.base.ac_density(&x);
            if p > 0.0 && rng.random::<f64>() < 1.0 - c / p {
                return Ok((x, false));
            }
        }
        Err(Error::RejectionStall { accepted: 0, proposals: MAX_PROPOSALS })
    }
}

/// One draw of `χV + (1−χ)W`.
pub fn sample_split<R: Rng + ?Sized>(rep: &SplitRep, rng: &mut R) -> Result<Vec<f64>> {
    if rep.sample_chi(rng) {
        rep.sample_v(rng)
    } else {
        Ok(rep.sample_w(rng)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{std_normal_pdf, Family};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_examples() {
        assert_eq!(psi_loc(1.0, 0.5), 1.0);
        assert_eq!(psi_loc(1.0, 2.0), 0.0);
        assert!((psi_loc(1.0, 1.5) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!((psi_loc(1.0, -1.5) - psi_loc(1.0, 1.5)).abs() < 1e-15);
    }

    #[test]
    fn dlog_psi_matches_finite_differences() {
        let a = 0.7;
        for k in 1..40 {
            let r = a + a * k as f64 / 40.0;
            let h = 1e-6;
            let fd = (psi_loc(a, r + h).ln() - psi_loc(a, r - h).ln()) / (2.0 * h);
            assert!((fd - dlog_psi_loc(a, r)).abs() < 1e-4 * (1.0 + fd.abs()), "r={r}");
        }
        assert_eq!(dlog_psi_loc(a, 0.3), 0.0);
    }

    #[test]
    fn psi_smoothness_constant_is_uniform_in_a() {
        let h = 1e-5;
        for (k, p) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let sup = |a: f64| {
                (1..4000)
                    .map(|j| a + a * j as f64 / 4000.0)
                    .map(|x| {
                        let l = |y: f64| psi_loc(a, y).ln();
                        let d = if k == 1 {
                            (l(x + h) - l(x - h)) / (2.0 * h)
                        } else {
                            (l(x + h) - 2.0 * l(x) + l(x - h)) / (h * h)
                        };
                        let v = psi_loc(a, x) * d.abs().powi(p) * a.powi(p * k);
                        if v.is_finite() { v } else { 0.0 }
                    })
                    .fold(0.0, f64::max)
            };
            let vals: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&a| sup(a)).collect();
            for v in &vals {
                assert!(v.is_finite() && *v > 0.0, "k={k} p={p}: {vals:?}");
                assert!((v / vals[1] - 1.0).abs() < 0.05, "k={k} p={p}: {vals:?}");
            }
        }
    }

    #[test]
    fn psi_integral_matches_direct_sum() {
        let a = 0.8;
        let n = 200_000;
        let h = 4.0 * a / n as f64;
        let direct: f64 = (0..n).map(|j| psi_loc(a, -2.0 * a + (j as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((psi_integral(a, 1).unwrap() - direct).abs() < 1e-8);
    }

    fn std_uniform() -> Distribution {
        Distribution::univariate(Family::Uniform { lo: 0.0, hi: 1.0 }).standardize().unwrap()
    }

    #[test]
    fn lower_bound_examples() {
        let lb = find_lower_bound(&std_uniform()).unwrap();
        assert!(lb.v0[0].abs() < 1e-2, "{lb:?}");
        assert!(lb.eps0 <= 1.0 / (2.0 * 3f64.sqrt()) + 1e-12);

        let g = Distribution::univariate(Family::Normal { mean: 0.0, sd: 1.0 });
        let lb = find_lower_bound(&g).unwrap();
        assert!(lb.v0[0].abs() < 1e-2);
        assert!(lb.eps0 <= std_normal_pdf(lb.r0) + 1e-12);

        let atom = Distribution::univariate(Family::AtomMix { p: 0.5, atom: 2.0 });
        let lb = find_lower_bound(&atom).unwrap();
        assert!(lb.eps0 <= 0.5 * std_normal_pdf(lb.r0 + lb.v0[0].abs()) + 1e-12);
    }

    #[test]
    fn no_lower_bound_for_vanishing_density() {
        let pure_atom = Distribution::univariate(Family::AtomMix { p: 0.0, atom: 1.0 });
        assert!(matches!(find_lower_bound(&pure_atom), Err(Error::NoLowerBoundFound { .. })));
    }

    #[test]
    fn reconstruction_and_mass() {
        for d in crate::moments::shipped() {
            let d = d.standardize().unwrap();
            let rep = split(&d).unwrap();
            assert!(rep.m0 > 0.0 && rep.m0 <= 0.5, "{}: m0 = {}", d.label(), rep.m0);
            let rc = rep.reconstruction_check();
            assert!(rc.sup_error < 1e-8, "{}: {}", d.label(), rc.sup_error);
            assert!(rc.min_residual >= -1e-12, "{}: {}", d.label(), rc.min_residual);
        }
    }

    #[test]
    fn sampler_support_and_bernoulli_mean() {
        let rep = split(&std_uniform()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let v = rep.sample_v(&mut rng).unwrap();
            assert!((v[0] - rep.v0[0]).abs() <= rep.r0);
        }
        let m = 100_000;
        let hits = (0..m).filter(|_| rep.sample_chi(&mut rng)).count() as f64 / m as f64;
        let se = (rep.m0 * (1.0 - rep.m0) / m as f64).sqrt();
        assert!((hits - rep.m0).abs() < 4.0 * se);
    }

    #[test]
    fn two_dimensional_split() {
        let d = Distribution::from_spec("laplace*uniform").unwrap().standardize().unwrap();
        let rep = split(&d).unwrap();
        assert!(rep.m0 > 0.0 && rep.m0 <= 0.5);
        assert!(rep.reconstruction_check().sup_error < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Vec<f64>> = (0..20_000).map(|_| sample_split(&rep, &mut rng).unwrap()).collect();
        let mean = |i: usize| xs.iter().map(|x| x[i]).sum::<f64>() / xs.len() as f64;
        assert!(mean(0).abs() < 0.05 && mean(1).abs() < 0.05);
    }
}
