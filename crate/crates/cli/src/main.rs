use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgeworth_tv::edgeworth::{k_poly, EdgeworthModel};
use edgeworth_tv::harness::{run_rate, standardized, tv_at, write_report, RateConfig};
use edgeworth_tv::malliavin::{backward_taylor_check, ibp_battery, sigma_tail, test_battery};
use edgeworth_tv::moments::MomentTable;
use edgeworth_tv::numerics::{ks_two_sample, law_of_sn, GridSpec};
use edgeworth_tv::opalg::{a_op, psi_op, t_op, AMode, DiffOperator};
use edgeworth_tv::poly::MultiPoly;
use edgeworth_tv::scalar::{Rational, Scalar};
use edgeworth_tv::seed::stream_rng;
use edgeworth_tv::splitting::{sample_split, split};
use edgeworth_tv::{Error, Result};

#[derive(Parser)]
#[command(name = "edgeworth-tv", version, about = "Edgeworth expansions of the CLT in total variation")]
struct Cli {
    /// Master seed for every Monte Carlo stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` configuration file (used by `rate`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the log-log slope of d_TV(law of S_n, Γ_{n,r}) against n.
    Rate(RateArgs),
    /// Coefficients of the correctors K_m.
    Kpoly(KpolyArgs),
    /// Evaluate Γ_{n,r} or the exact law of S_n on a grid.
    Density(DensityArgs),
    /// d_TV(law of S_n, Γ_{n,r}) as a certified interval.
    Tv(TvArgs),
    /// Dump Ψ_t, A^i_t or T^n_t term tables.
    Ops(OpsArgs),
    /// Splitting representation and its reconstruction / KS checks.
    Split(SplitArgs),
    /// Monte Carlo check of the localized integration by parts formula.
    Ibp(IbpArgs),
    /// Tail of det σ_{S_n} against the exact binomial value.
    Sigtail(SigtailArgs),
    /// Backward Gaussian Taylor formula for g(x) = x^degree.
    Taylor(TaylorArgs),
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    r: Option<usize>,
    /// Comma separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    slope_tol: Option<f64>,
}

#[derive(Args)]
struct KpolyArgs {
    #[arg(long, default_value = "exp")]
    dist: String,
    /// Emit K_1, …, K_m.
    #[arg(long, default_value_t = 3)]
    m: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityKind {
    Edgeworth,
    Exact,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, default_value = "exp")]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, value_enum, default_value = "edgeworth")]
    kind: DensityKind,
    /// Grid points per axis on [−16, 16].
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct TvArgs {
    #[arg(long, default_value = "exp")]
    dist: String,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    r: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    Psi,
    A,
    T,
}

#[derive(Args)]
struct OpsArgs {
    #[arg(long, value_enum)]
    op: OpKind,
    #[arg(long)]
    t: usize,
    /// Power index for `a`.
    #[arg(long, default_value_t = 1)]
    i: usize,
    /// Sample size for `t`.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value = "exp")]
    dist: String,
    /// Exact 1-D fixture Δ_3, Δ_4, … as fractions (`2,6,44`); overrides `--dist`.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<String>>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, default_value = "exp")]
    dist: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Args)]
struct IbpArgs {
    #[arg(long, default_value = "exp")]
    dist: String,
    #[arg(long, value_delimiter = ',', default_value = "16,64")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
}

#[derive(Args)]
struct SigtailArgs {
    #[arg(long, default_value = "exp")]
    dist: String,
    #[arg(long, value_delimiter = ',', default_value = "10,50,200")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
}

#[derive(Args)]
struct TaylorArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    degree: Vec<u32>,
    #[arg(long)]
    l: usize,
}

struct Ctx {
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx {
    fn sink(&self) -> Result<Box<dyn Write>> {
        sink(self.out.as_deref())
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn csv_writer(ctx: &Ctx) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(ctx.sink()?))
}

fn f(x: f64) -> String {
    format!("{x:.12e}")
}

fn rate(cli: &Cli, a: &RateArgs) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RateConfig::from_file(p)?,
        None => {
            let dist = a.dist.clone().ok_or_else(|| Error::Config("--dist or --config required".into()))?;
            let r = a.r.ok_or_else(|| Error::Config("--r or --config required".into()))?;
            RateConfig::new(dist, r, vec![])
        }
    };
    if let Some(d) = &a.dist {
        cfg.dist = d.clone();
    }
    if let Some(r) = a.r {
        cfg.r = r;
    }
    if let Some(ns) = &a.n_list {
        cfg.n_list = ns.clone();
    }
    if a.grid_points.is_some() {
        cfg.grid_points = a.grid_points;
    }
    if let Some(t) = a.slope_tol {
        cfg.slope_tol = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    let report = run_rate(&cfg)?;
    write_report(&report, sink(cfg.out.as_deref())?)?;
    if !report.verdict.passed() {
        eprintln!("{}", report.verdict);
    }
    Ok(report.verdict.passed())
}

fn kpoly(ctx: &Ctx, a: &KpolyArgs) -> Result<bool> {
    let dist = standardized(&a.dist)?;
    let table = MomentTable::<f64>::from_distribution(&dist, 3 * a.m + 3)?;
    let mut w = csv_writer(ctx)?;
    w.write_record(["m", "exponent", "coefficient"])?;
    for m in 1..=a.m {
        let p = k_poly(&table, m);
        for (e, c) in p.terms() {
            let exp: Vec<String> = e.iter().map(u32::to_string).collect();
            w.write_record([m.to_string(), exp.join(" "), f(*c)])?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn density(ctx: &Ctx, a: &DensityArgs) -> Result<bool> {
    let dist = standardized(&a.dist)?;
    let spec = match a.points {
        Some(p) => GridSpec::new(dist.dim(), 16.0, p)?,
        None => GridSpec::standard(dist.dim()),
    };
    let grid = match a.kind {
        DensityKind::Edgeworth => EdgeworthModel::new(&dist, a.r)?.grid(a.n, &spec)?,
        DensityKind::Exact => law_of_sn(&dist, a.n, &spec)?,
    };
    if grid.min_value() < 0.0 {
        eprintln!("min density on grid: {:e}", grid.min_value());
    }
    grid.write_csv(ctx.sink()?)?;
    Ok(true)
}

fn tv(ctx: &Ctx, a: &TvArgs) -> Result<bool> {
    if a.n.is_empty() {
        return Err(Error::Config("--n is required".into()));
    }
    let dist = standardized(&a.dist)?;
    let model = EdgeworthModel::new(&dist, a.r)?;
    let spec = GridSpec::standard(dist.dim());
    let mut w = csv_writer(ctx)?;
    w.write_record(["n", "r", "tv_mid", "tv_lo", "tv_hi"])?;
    for &n in &a.n {
        let t = tv_at(&dist, &model, n, &spec)?;
        w.write_record([n.to_string(), a.r.to_string(), f(t.mid()), f(t.lo), f(t.hi)])?;
    }
    w.flush()?;
    Ok(true)
}

fn build_op<S: Scalar>(table: &MomentTable<S>, a: &OpsArgs) -> DiffOperator<S> {
    match a.op {
        OpKind::Psi => psi_op(table, a.t),
        OpKind::A => a_op(table, a.i.max(1), a.t, AMode::Direct),
        OpKind::T => t_op(table, a.n.max(1), a.t),
    }
}

fn ops(ctx: &Ctx, a: &OpsArgs) -> Result<bool> {
    match &a.deltas {
        Some(ds) => {
            let deltas = ds
                .iter()
                .map(|s| s.trim().parse::<Rational>().map_err(|_| Error::Config(format!("bad fraction {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let table = MomentTable::univariate(&deltas);
            if table.max_order() < a.t {
                return Err(Error::OrderExceeded { requested: a.t, max: table.max_order() });
            }
            build_op(&table, a).write_csv(ctx.sink()?)?;
        }
        None => {
            let dist = standardized(&a.dist)?;
            let table = MomentTable::<f64>::from_distribution(&dist, a.t.max(3))?;
            build_op(&table, a).write_csv(ctx.sink()?)?;
        }
    }
    Ok(true)
}

fn split_cmd(ctx: &Ctx, a: &SplitArgs) -> Result<bool> {
    let dist = standardized(&a.dist)?;
    let rep = split(&dist)?;
    let report = rep.reconstruction_check();
    let mut rng_a = stream_rng(ctx.seed, 0);
    let mut rng_b = stream_rng(ctx.seed, 1);
    let mut ks_p = f64::NAN;
    if dist.dim() == 1 && !dist.has_singular_part() {
        let mut xs = Vec::with_capacity(a.samples);
        let mut ys = Vec::with_capacity(a.samples);
        for _ in 0..a.samples {
            xs.push(sample_split(&rep, &mut rng_a)?[0]);
            ys.push(dist.sample(&mut rng_b).0[0]);
        }
        ks_p = ks_two_sample(&xs, &ys).p_value;
    }
    eprintln!(
        "v0 = {:?}, r0 = {}, eps0 = {}, m0 = {}, sup reconstruction error = {:e}, ks p = {ks_p}",
        rep.v0, rep.r0, rep.eps0, rep.m0, report.sup_error
    );
    let mut w = csv_writer(ctx)?;
    let header: Vec<String> = (1..=dist.dim()).map(|i| format!("x{i}")).chain(["error".into()]).collect();
    w.write_record(&header)?;
    for (p, e) in report.points.iter().zip(&report.errors) {
        w.write_record(p.iter().copied().chain([*e]).map(f))?;
    }
    w.flush()?;
    Ok(report.sup_error < 1e-8 && (ks_p.is_nan() || ks_p >= 0.01))
}

fn ibp(ctx: &Ctx, a: &IbpArgs) -> Result<bool> {
    let rep = split(&standardized(&a.dist)?)?;
    let fns = test_battery();
    let mut w = csv_writer(ctx)?;
    w.write_record(["function", "n", "lhs", "lhs_se", "rhs", "rhs_se", "z"])?;
    let mut ok = true;
    for &n in &a.n {
        for r in ibp_battery(&rep, n, &fns, a.samples, ctx.seed.wrapping_add(n as u64))? {
            ok &= r.z_score < 4.0;
            w.write_record([r.function, n.to_string(), f(r.lhs), f(r.lhs_se), f(r.rhs), f(r.rhs_se), f(r.z_score)])?;
        }
    }
    w.flush()?;
    Ok(ok)
}

fn sigtail(ctx: &Ctx, a: &SigtailArgs) -> Result<bool> {
    let rep = split(&standardized(&a.dist)?)?;
    let mut w = csv_writer(ctx)?;
    w.write_record(["n", "eps", "estimate", "se", "exact", "bound", "z"])?;
    let mut ok = true;
    for &n in &a.n {
        let s = sigma_tail(&rep, n, a.samples, ctx.seed.wrapping_add(n as u64));
        let z = if s.std_error > 0.0 { (s.estimate - s.exact_binomial).abs() / s.std_error } else { 0.0 };
        ok &= z <= 4.0;
        w.write_record([n.to_string(), f(s.eps), f(s.estimate), f(s.std_error), f(s.exact_binomial), f(s.exp_bound), f(z)])?;
    }
    w.flush()?;
    Ok(ok)
}

fn taylor(ctx: &Ctx, a: &TaylorArgs) -> Result<bool> {
    let mut w = csv_writer(ctx)?;
    w.write_record(["degree", "L", "g0", "truncated", "remainder", "residual"])?;
    let mut ok = true;
    for &d in &a.degree {
        let g = MultiPoly::<f64>::var(1, 0).pow(d);
        let c = backward_taylor_check(&g, a.l)?;
        ok &= c.residual < 1e-8;
        w.write_record([d.to_string(), a.l.to_string(), f(c.g0), f(c.truncated), f(c.remainder), f(c.residual)])?;
    }
    w.flush()?;
    Ok(ok)
}

fn run(cli: &Cli) -> Result<bool> {
    let ctx = Ctx { seed: cli.seed.unwrap_or(0), out: cli.out.clone() };
    if cli.config.is_some() && !matches!(cli.cmd, Cmd::Rate(_)) {
        return Err(Error::Config("--config is only read by `rate`".into()));
    }
    match &cli.cmd {
        Cmd::Rate(a) => rate(cli, a),
        Cmd::Kpoly(a) => kpoly(&ctx, a),
        Cmd::Density(a) => density(&ctx, a),
        Cmd::Tv(a) => tv(&ctx, a),
        Cmd::Ops(a) => ops(&ctx, a),
        Cmd::Split(a) => split_cmd(&ctx, a),
        Cmd::Ibp(a) => ibp(&ctx, a),
        Cmd::Sigtail(a) => sigtail(&ctx, a),
        Cmd::Taylor(a) => taylor(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
