//! One-dimensional base laws with closed-form moments, densities and
//! characteristic functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution as _, Exp, Gamma, StandardNormal};

use crate::scalar::{rational_to_f64, rint, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Laplace { loc: f64, scale: f64 },
    Gamma { shape: f64, scale: f64 },
    /// `w·N(m1, s1²) + (1−w)·N(m2, s2²)`.
    GaussMix { w: f64, m1: f64, s1: f64, m2: f64, s2: f64 },
    /// `p·N(0,1) + (1−p)·δ_atom`.
    AtomMix { p: f64, atom: f64 },
}

fn exact(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite parameter")
}

fn rpow(x: &Rational, k: usize) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..k {
        acc *= x;
    }
    acc
}

fn double_factorial_odd(k: usize) -> Rational {
    // (2k-1)!!
    (1..=k).fold(Rational::one(), |acc, j| acc * rint(2 * j as i64 - 1))
}

fn normal_raw(mean: &Rational, sd: &Rational, j: usize) -> Rational {
    let mut acc = Rational::zero();
    for k in 0..=j / 2 {
        let c = Rational::from_integer(num_integer::binomial(
            num_bigint::BigInt::from(j),
            num_bigint::BigInt::from(2 * k),
        ));
        acc += c * rpow(mean, j - 2 * k) * rpow(sd, 2 * k) * double_factorial_odd(k);
    }
    acc
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn normal_pdf(x: f64, m: f64, s: f64) -> f64 {
    std_normal_pdf((x - m) / s) / s
}

fn normal_cf(t: f64, m: f64, s: f64) -> Complex64 {
    Complex64::new(0.0, t * m).exp() * (-0.5 * s * s * t * t).exp()
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Normal { mean, sd } => format!("normal(mean={mean},sd={sd})"),
            Family::Uniform { lo, hi } => format!("uniform(lo={lo},hi={hi})"),
            Family::Exponential { rate } => format!("exp(rate={rate})"),
            Family::Laplace { loc, scale } => format!("laplace(loc={loc},scale={scale})"),
            Family::Gamma { shape, scale } => format!("gamma(k={shape},scale={scale})"),
            Family::GaussMix { w, m1, s1, m2, s2 } => {
                format!("gaussmix(w={w},m1={m1},s1={s1},m2={m2},s2={s2})")
            }
            Family::AtomMix { p, atom } => format!("atommix(p={p},c={atom})"),
        }
    }

    /// Exact `E X^j` in terms of the (dyadic) f64 parameters.
    pub fn raw_moment_exact(&self, j: usize) -> Rational {
        match *self {
            Family::Normal { mean, sd } => normal_raw(&exact(mean), &exact(sd), j),
            Family::Uniform { lo, hi } => {
                let (a, b) = (exact(lo), exact(hi));
                (rpow(&b, j + 1) - rpow(&a, j + 1)) / (rint(j as i64 + 1) * (b - a))
            }
            Family::Exponential { rate } => {
                let fact = (1..=j).fold(Rational::one(), |acc, k| acc * rint(k as i64));
                fact / rpow(&exact(rate), j)
            }
            Family::Laplace { loc, scale } => {
                // loc + scale·Y with E Y^{2k} = (2k)!, odd moments zero.
                let (m, b) = (exact(loc), exact(scale));
                let mut acc = Rational::zero();
                for k in 0..=j / 2 {
                    let c = Rational::from_integer(num_integer::binomial(
                        num_bigint::BigInt::from(j),
                        num_bigint::BigInt::from(2 * k),
                    ));
                    let fact = (1..=2 * k).fold(Rational::one(), |acc, q| acc * rint(q as i64));
                    acc += c * rpow(&m, j - 2 * k) * rpow(&b, 2 * k) * fact;
                }
                acc
            }
            Family::Gamma { shape, scale } => {
                let k = exact(shape);
                let mut acc = rpow(&exact(scale), j);
                for i in 0..j {
                    acc *= &k + rint(i as i64);
                }
                acc
            }
            Family::GaussMix { w, m1, s1, m2, s2 } => {
                let w = exact(w);
                normal_raw(&exact(m1), &exact(s1), j) * &w
                    + normal_raw(&exact(m2), &exact(s2), j) * (Rational::one() - &w)
            }
            Family::AtomMix { p, atom } => {
                let p = exact(p);
                normal_raw(&Rational::zero(), &Rational::one(), j) * &p
                    + rpow(&exact(atom), j) * (Rational::one() - &p)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        rational_to_f64(&self.raw_moment_exact(1))
    }

    /// Exact `E (X − E X)^j`.
    pub fn central_moment_exact(&self, j: usize) -> Rational {
        let mu = self.raw_moment_exact(1);
        let neg_mu = -mu;
        let mut acc = Rational::zero();
        for i in 0..=j {
            let c = Rational::from_integer(num_integer::binomial(
                num_bigint::BigInt::from(j),
                num_bigint::BigInt::from(i),
            ));
            acc += c * self.raw_moment_exact(i) * rpow(&neg_mu, j - i);
        }
        acc
    }

    pub fn central_moment(&self, j: usize) -> f64 {
        rational_to_f64(&self.central_moment_exact(j))
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    /// Density of the absolutely continuous part (unnormalized for atom mixtures:
    /// it integrates to the a.c. weight).
    pub fn ac_density(&self, x: f64) -> f64 {
        match *self {
            Family::Normal { mean, sd } => normal_pdf(x, mean, sd),
            Family::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            Family::Laplace { loc, scale } => (-(x - loc).abs() / scale).exp() / (2.0 * scale),
            Family::Gamma { shape, scale } => {
                if x <= 0.0 {
                    return if x == 0.0 && shape == 1.0 { 1.0 / scale } else { 0.0 };
                }
                let z = x / scale;
                ((shape - 1.0) * z.ln() - z - statrs::function::gamma::ln_gamma(shape)).exp() / scale
            }
            Family::GaussMix { w, m1, s1, m2, s2 } => {
                w * normal_pdf(x, m1, s1) + (1.0 - w) * normal_pdf(x, m2, s2)
            }
            Family::AtomMix { p, .. } => p * std_normal_pdf(x),
        }
    }

    /// Mass of the singular part.
    pub fn singular_mass(&self) -> f64 {
        match *self {
            Family::AtomMix { p, .. } => 1.0 - p,
            _ => 0.0,
        }
    }

    pub fn char_fn(&self, t: f64) -> Complex64 {
        let i = Complex64::i();
        match *self {
            Family::Normal { mean, sd } => normal_cf(t, mean, sd),
            Family::Uniform { lo, hi } => {
                let h = 0.5 * (hi - lo);
                let c = 0.5 * (hi + lo);
                let s = if (t * h).abs() < 1e-8 {
                    1.0 - (t * h).powi(2) / 6.0
                } else {
                    (t * h).sin() / (t * h)
                };
                (i * t * c).exp() * s
            }
            Family::Exponential { rate } => Complex64::from(1.0) / (Complex64::from(1.0) - i * t / rate),
            Family::Laplace { loc, scale } => (i * t * loc).exp() / (1.0 + scale * scale * t * t),
            Family::Gamma { shape, scale } => (Complex64::from(1.0) - i * t * scale).powf(-shape),
            Family::GaussMix { w, m1, s1, m2, s2 } => {
                normal_cf(t, m1, s1) * w + normal_cf(t, m2, s2) * (1.0 - w)
            }
            Family::AtomMix { p, atom } => normal_cf(t, 0.0, 1.0) * p + (i * t * atom).exp() * (1.0 - p),
        }
    }

    /// Characteristic function of the a.c. component, normalized to a probability law.
    pub fn ac_char_fn(&self, t: f64) -> Complex64 {
        match *self {
            Family::AtomMix { .. } => normal_cf(t, 0.0, 1.0),
            _ => self.char_fn(t),
        }
    }

    /// Atom location, for laws with a singular part.
    pub fn atom(&self) -> Option<f64> {
        match *self {
            Family::AtomMix { atom, .. } => Some(atom),
            _ => None,
        }
    }

    /// Draw one value; the flag marks draws from the singular part.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        match *self {
            Family::Normal { mean, sd } => (mean + sd * rng.sample::<f64, _>(StandardNormal), false),
            Family::Uniform { lo, hi } => (lo + (hi - lo) * rng.random::<f64>(), false),
            Family::Exponential { rate } => (Exp::new(rate).expect("rate > 0").sample(rng), false),
            Family::Laplace { loc, scale } => {
                let e: f64 = Exp::new(1.0).expect("rate").sample(rng);
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                (loc + s * scale * e, false)
            }
            Family::Gamma { shape, scale } => {
                (Gamma::new(shape, scale).expect("gamma params").sample(rng), false)
            }
            Family::GaussMix { w, m1, s1, m2, s2 } => {
                let z: f64 = rng.sample(StandardNormal);
                if rng.random::<f64>() < w {
                    (m1 + s1 * z, false)
                } else {
                    (m2 + s2 * z, false)
                }
            }
            Family::AtomMix { p, atom } => {
                if rng.random::<f64>() < p {
                    (rng.sample::<f64, _>(StandardNormal), false)
                } else {
                    (atom, true)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn exponential_central_moments_are_subfactorials() {
        let e = Family::Exponential { rate: 1.0 };
        let expected = [1, 0, 1, 2, 9, 44, 265, 1854];
        for (j, &v) in expected.iter().enumerate() {
            assert_eq!(e.central_moment_exact(j), rint(v), "order {j}");
        }
    }

    #[test]
    fn uniform_fourth_moment() {
        let u = Family::Uniform { lo: 0.0, hi: 1.0 };
        assert_eq!(u.central_moment_exact(2), rat(1, 12));
        assert_eq!(u.central_moment_exact(4), rat(1, 80));
    }

    #[test]
    fn densities_integrate_to_ac_mass() {
        let fams = [
            Family::Uniform { lo: -1.0, hi: 2.0 },
            Family::Exponential { rate: 2.0 },
            Family::Laplace { loc: 0.5, scale: 0.7 },
            Family::Gamma { shape: 3.0, scale: 1.0 },
            Family::GaussMix { w: 0.3, m1: -1.0, s1: 0.5, m2: 1.0, s2: 1.5 },
            Family::AtomMix { p: 0.4, atom: 2.0 },
        ];
        for f in fams {
            let h = 1e-3;
            let total: f64 = (-30_000..30_000).map(|k| f.ac_density((k as f64 + 0.5) * h) * h).sum();
            assert!((total + f.singular_mass() - 1.0).abs() < 2e-3, "{}: {total}", f.label());
        }
    }

    #[test]
    fn char_fn_second_derivative_matches_variance() {
        let fams = [
            Family::Uniform { lo: -1.0, hi: 2.0 },
            Family::Exponential { rate: 2.0 },
            Family::Laplace { loc: 0.5, scale: 0.7 },
            Family::Gamma { shape: 3.0, scale: 1.0 },
            Family::GaussMix { w: 0.3, m1: -1.0, s1: 0.5, m2: 1.0, s2: 1.5 },
            Family::AtomMix { p: 0.4, atom: 2.0 },
        ];
        for f in fams {
            let h = 1e-4;
            let d2 = (f.char_fn(h) + f.char_fn(-h) - f.char_fn(0.0) * 2.0) / (h * h);
            let m2 = f.variance() + f.mean().powi(2);
            assert!((-d2.re - m2).abs() < 1e-5, "{}", f.label());
        }
    }
}
