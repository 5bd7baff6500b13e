//! Densities tabulated on regular grids and the total variation distance.

use std::io::Write;

use crate::error::{Error, Result};

/// Regular grid `x_j = center − L + j·dx`, `dx = 2L/points`, on each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub center: Vec<f64>,
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<GridSpec> {
        Self::centered(vec![0.0; dim], half_width, points)
    }

    pub fn centered(center: Vec<f64>, half_width: f64, points: usize) -> Result<GridSpec> {
        let dim = center.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::Unsupported(format!("grids of dimension {dim}")));
        }
        if !points.is_power_of_two() || points < 4 {
            return Err(Error::Config(format!("grid points must be a power of two ≥ 4, got {points}")));
        }
        if !(half_width > 0.0) {
            return Err(Error::Config(format!("grid half-width must be positive, got {half_width}")));
        }
        Ok(GridSpec { dim, center, half_width, points })
    }

    /// `[−16, 16]^dim` with 2^14 points (1-D) or 2^9 per axis (2-D).
    pub fn standard(dim: usize) -> GridSpec {
        let points = if dim == 1 { 1 << 14 } else { 1 << 9 };
        Self::new(dim, 16.0, points).expect("valid standard grid")
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_width
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.center[axis] + self.half_width
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.lo(axis) + j as f64 * self.dx()
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Point for a flat (row-major, last axis fastest) index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.coord(0, flat)],
            _ => vec![self.coord(0, flat / self.points), self.coord(1, flat % self.points)],
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridDensity {
    spec: GridSpec,
    values: Vec<f64>,
    tail_mass_bound: f64,
    singular_mass: f64,
}

impl GridDensity {
    pub fn new(spec: GridSpec, values: Vec<f64>, tail_mass_bound: f64, singular_mass: f64) -> Self {
        assert_eq!(values.len(), spec.len(), "value count");
        GridDensity { spec, values, tail_mass_bound, singular_mass }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..spec.len()).map(|k| f(&spec.point(k))).collect();
        GridDensity { spec, values, tail_mass_bound: 0.0, singular_mass: 0.0 }
    }

    pub fn with_tail_mass_bound(mut self, t: f64) -> Self {
        self.tail_mass_bound = t;
        self
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    pub fn singular_mass(&self) -> f64 {
        self.singular_mass
    }

    /// `Σ values · cell volume`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `Σ g(x) p(x) · cell volume`.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v * g(&self.spec.point(k)))
            .sum::<f64>()
            * self.spec.cell_volume()
    }

    /// Linear interpolation (1-D only).
    pub fn interpolate(&self, x: f64) -> f64 {
        assert_eq!(self.spec.dim, 1, "interpolation is 1-D");
        let u = (x - self.spec.lo(0)) / self.spec.dx();
        if u < 0.0 || u > (self.spec.points - 1) as f64 {
            return 0.0;
        }
        let j = (u.floor() as usize).min(self.spec.points - 2);
        let f = u - j as f64;
        self.values[j] * (1.0 - f) + self.values[j + 1] * f
    }

    /// CSV with columns `x,density` or `x1,x2,density`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.spec.dim == 1 {
            wtr.write_record(["x", "density"])?;
        } else {
            wtr.write_record(["x1", "x2", "density"])?;
        }
        for (k, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.spec.point(k).iter().map(|x| format!("{x:.12e}")).collect();
            row.push(format!("{v:.12e}"));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `[raw, raw + slack]` enclosing the total variation distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TvInterval {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `d_TV(p, q) = Σ|p − q|·cell volume`, the full L¹ mass of the difference
/// (no factor 1/2). The upper end adds both tail bounds and singular masses.
pub fn tv_distance(p: &GridDensity, q: &GridDensity) -> Result<TvInterval> {
    if p.spec != q.spec {
        return Err(Error::GridMismatch);
    }
    let raw = p.values.iter().zip(&q.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * p.spec.cell_volume();
    let slack = p.tail_mass_bound + q.tail_mass_bound + p.singular_mass + q.singular_mass;
    Ok(TvInterval { lo: raw, hi: raw + slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::std_normal_pdf;
    use proptest::prelude::*;

    fn phi(x: f64) -> f64 {
        0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn tv_examples() {
        let spec = GridSpec::standard(1);
        let p = GridDensity::from_fn(spec.clone(), |x| std_normal_pdf(x[0]));
        let q = GridDensity::from_fn(spec.clone(), |x| std_normal_pdf(x[0] - 0.1));
        assert_eq!(tv_distance(&p, &p).unwrap().lo, 0.0);
        let d = tv_distance(&p, &q).unwrap();
        assert!((d.lo - (4.0 * phi(0.05) - 2.0)).abs() < 1e-4, "{d:?}");
        let a = GridDensity::from_fn(spec.clone(), |x| if (-3.0..-1.0).contains(&x[0]) { 0.5 } else { 0.0 });
        let b = GridDensity::from_fn(spec.clone(), |x| if (1.0..3.0).contains(&x[0]) { 0.5 } else { 0.0 });
        assert!((tv_distance(&a, &b).unwrap().lo - 2.0).abs() < 1e-6);
        let other = GridDensity::from_fn(GridSpec::new(1, 8.0, 1 << 14).unwrap(), |_| 0.0);
        assert_eq!(tv_distance(&p, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn tv_interval_carries_slack() {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        let p = GridDensity::new(spec.clone(), vec![0.0; 64], 1e-3, 2e-3);
        let q = GridDensity::from_fn(spec, |_| 0.0).with_tail_mass_bound(1e-3);
        let d = tv_distance(&p, &q).unwrap();
        assert_eq!(d.lo, 0.0);
        assert!((d.hi - 4e-3).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, 16.0, 1000).is_err());
        assert!(GridSpec::new(3, 16.0, 64).is_err());
        assert!(GridSpec::new(1, 0.0, 64).is_err());
    }

    fn arb_grid() -> impl Strategy<Value = GridDensity> {
        prop::collection::vec(-1.0f64..1.0, 32)
            .prop_map(|v| GridDensity::new(GridSpec::new(1, 1.0, 32).unwrap(), v, 0.0, 0.0))
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(a in arb_grid(), b in arb_grid(), c in arb_grid()) {
            let ab = tv_distance(&a, &b).unwrap().lo;
            let ba = tv_distance(&b, &a).unwrap().lo;
            let ac = tv_distance(&a, &c).unwrap().lo;
            let bc = tv_distance(&b, &c).unwrap().lo;
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() <= 1e-14);
            prop_assert!(ac <= ab + bc + 1e-14);
            prop_assert!(tv_distance(&a, &a).unwrap().lo <= 1e-14);
        }
    }
}
