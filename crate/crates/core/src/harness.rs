//! Rate experiments: `d_TV(μ_n, Γ_{n,r})` over a grid of `n`, a log–log slope
//! fit and a CSV report.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::edgeworth::EdgeworthModel;
use crate::error::{Error, Result};
use crate::moments::{Distribution, MomentTable};
use crate::numerics::{law_of_sn, tv_distance, GridSpec, TvInterval};

pub const DEFAULT_SLOPE_TOL: f64 = 0.15;
/// `sup |Δ_α|` below this counts as moment matching.
pub const MOMENT_MATCH_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RateConfig {
    pub dist: String,
    pub r: usize,
    pub n_list: Vec<usize>,
    pub seed: u64,
    pub grid_points: Option<usize>,
    pub out: Option<PathBuf>,
    pub slope_tol: f64,
}

impl RateConfig {
    pub fn new(dist: impl Into<String>, r: usize, n_list: Vec<usize>) -> RateConfig {
        RateConfig {
            dist: dist.into(),
            r,
            n_list,
            seed: 0,
            grid_points: None,
            out: None,
            slope_tol: DEFAULT_SLOPE_TOL,
        }
    }

    /// Parse `key = value` lines; `#` starts a comment. Keys: `dist`, `r`,
    /// `n_list` (comma separated), `seed`, `grid_points`, `out`, `slope_tol`.
    pub fn parse(text: &str) -> Result<RateConfig> {
        let mut cfg = RateConfig::new("", 0, vec![]);
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what} `{value}`", lineno + 1));
            match key {
                "dist" => cfg.dist = value.to_string(),
                "r" => cfg.r = value.parse().map_err(|_| bad("r"))?,
                "n_list" => {
                    cfg.n_list = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|_| bad("n_list")))
                        .collect::<Result<_>>()?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                "grid_points" => cfg.grid_points = Some(value.parse().map_err(|_| bad("grid_points"))?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                "slope_tol" => cfg.slope_tol = value.parse().map_err(|_| bad("slope_tol"))?,
                _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        if !seen.contains("dist") || !seen.contains("r") {
            return Err(Error::Config("`dist` and `r` are required".into()));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RateConfig> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        if !(2..=8).contains(&self.r) {
            return Err(Error::Config(format!("r must lie in 2..=8, got {}", self.r)));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_list must be strictly increasing".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| !(16..=4096).contains(&n)) {
            return Err(Error::Config(format!("n = {n} outside 16..=4096")));
        }
        if !(self.slope_tol > 0.0) {
            return Err(Error::Config("slope_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail(reason) => write!(f, "fail: {reason}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub dist_label: String,
    pub r: usize,
    pub n_values: Vec<usize>,
    pub tv_values: Vec<TvInterval>,
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub expected_slope: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// `−(r−1)/2` when every `Δ_α` with `|α| ≤ r` vanishes, else `−([r/3]+1)/2`.
pub fn expected_slope(table: &MomentTable<f64>, r: usize) -> f64 {
    if table.sup_abs_delta(r) <= MOMENT_MATCH_TOL {
        -((r - 1) as f64) / 2.0
    } else {
        -((r / 3 + 1) as f64) / 2.0
    }
}

/// OLS slope of `log tv` against `log n` after dropping the smallest `n`;
/// `None` with fewer than two remaining points.
pub fn fit_slope(n_values: &[usize], tv: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = n_values
        .iter()
        .zip(tv)
        .skip(1)
        .map(|(&n, &t)| ((n as f64).ln(), t.ln()))
        .collect();
    let k = pts.len();
    if k < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let stderr = if k > 2 {
        let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
        (ssr / (k - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some((slope, stderr))
}

/// `d_TV(μ_n, Γ_{n,r})` for a standardized law.
pub fn tv_at(dist: &Distribution, model: &EdgeworthModel, n: usize, spec: &GridSpec) -> Result<TvInterval> {
    let mu = law_of_sn(dist, n, spec)?;
    let gamma = model.grid(n, spec)?;
    tv_distance(&mu, &gamma)
}

pub fn standardized(spec: &str) -> Result<Distribution> {
    Ok(Distribution::from_spec(spec)?.standardize()?.with_label(spec.trim()))
}

pub fn run_rate(cfg: &RateConfig) -> Result<RateReport> {
    cfg.validate()?;
    let dist = standardized(&cfg.dist)?;
    let spec = match cfg.grid_points {
        Some(p) => GridSpec::new(dist.dim(), 16.0, p)?,
        None => GridSpec::standard(dist.dim()),
    };
    let model = EdgeworthModel::new(&dist, cfg.r)?;
    let tv_values = cfg
        .n_list
        .par_iter()
        .map(|&n| tv_at(&dist, &model, n, &spec))
        .collect::<Result<Vec<_>>>()?;
    let expected = expected_slope(model.table(), cfg.r);
    let mids: Vec<f64> = tv_values.iter().map(TvInterval::mid).collect();
    let fit = fit_slope(&cfg.n_list, &mids);
    let verdict = match fit {
        None => Verdict::Fail("insufficient points".into()),
        Some((s, _)) if !s.is_finite() => Verdict::Fail("slope is not finite".into()),
        Some((s, _)) if (s - expected).abs() > cfg.slope_tol => {
            Verdict::Fail(format!("slope {s:.4} outside {expected} ± {}", cfg.slope_tol))
        }
        Some(_) => match tv_values.iter().zip(&cfg.n_list).find(|(t, _)| !(t.width() < 0.1 * t.mid())) {
            Some((_, n)) => Verdict::Fail(format!("tv interval at n = {n} wider than 10% of its midpoint")),
            None => Verdict::Pass,
        },
    };
    Ok(RateReport {
        dist_label: dist.label().to_string(),
        r: cfg.r,
        n_values: cfg.n_list.clone(),
        tv_values,
        slope: fit.map(|f| f.0),
        slope_stderr: fit.map(|f| f.1),
        expected_slope: expected,
        tolerance: cfg.slope_tol,
        verdict,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| format!("{x:.12e}"))
}

/// Header `n,tv_mid,tv_lo,tv_hi`, one row per `n`, then a summary row.
pub fn write_report<W: Write>(report: &RateReport, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["n", "tv_mid", "tv_lo", "tv_hi"])?;
    for (n, tv) in report.n_values.iter().zip(&report.tv_values) {
        wtr.write_record([
            n.to_string(),
            format!("{:.12e}", tv.mid()),
            format!("{:.12e}", tv.lo),
            format!("{:.12e}", tv.hi),
        ])?;
    }
    wtr.write_record([
        format!("slope={}", fmt_opt(report.slope)),
        format!("stderr={}", fmt_opt(report.slope_stderr)),
        format!("expected={:.12e}", report.expected_slope),
        report.verdict.to_string(),
    ])?;
    wtr.flush()?;
    Ok(())
}

pub fn emit_report(report: &RateReport, path: &Path) -> Result<()> {
    write_report(report, std::fs::File::create(path)?)
}
