//! Command-line front end.
//!
//! Parameters resolve as subcommand defaults < `--config` file < flags, and
//! the resolved [`ExperimentConfig`] is embedded in every report.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acceptance;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::grid::{Grid2, SampledField};
use crate::operator_lab::{self, ScanSetup, ScanTarget};
use crate::oscillatory_kernels::{self as ok, KernelEnvelope, QuadratureOptions, WindowedSymbol};
use crate::report::{ReportEnvelope, ScanReport, Verdict};
use crate::spectral;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "TWISTED_RIESZ_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    #[value(name = "prop-2.1")]
    Prop21,
    #[value(name = "prop-2.2")]
    Prop22,
    #[value(name = "eq-2.6")]
    Eq26,
    #[value(name = "eq-3.2")]
    Eq32,
    #[value(name = "prop-3.1")]
    Prop31,
    #[value(name = "prop-4.1")]
    Prop41,
}

impl From<TargetArg> for ScanTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Prop21 => ScanTarget::Prop21,
            TargetArg::Prop22 => ScanTarget::Prop22,
            TargetArg::Eq26 => ScanTarget::Eq26,
            TargetArg::Eq32 => ScanTarget::Eq32,
            TargetArg::Prop31 => ScanTarget::Prop31,
            TargetArg::Prop41 => ScanTarget::Prop41,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "twisted-riesz", version, about = "Numerical experiments for Bochner-Riesz means of the twisted Laplacian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Parameter flags shared by every subcommand.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub ell: Option<u32>,
    #[arg(long, global = true)]
    pub j: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<i32>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub eps0: Option<f64>,
    #[arg(long, global = true)]
    pub grid_extent: Option<f64>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub mu_max: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Partition-of-unity identities at seeded sample points.
    VerifyCutoffs,
    /// `[η]^λ(z, 0)` along a ray for the interior time window.
    KernelEval,
    /// Fourier vs closed-form eigenprojection kernels.
    Projection {
        #[arg(long)]
        mu: Option<u32>,
    },
    /// Applies the Bochner–Riesz mean to a Gaussian.
    RieszApply,
    /// Error of the leading stationary-phase term across `λ`.
    StationaryCompare,
    /// Carleson–Sjölin determinant by closed form and finite differences.
    DetCheck {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Kernel envelope constants across `λ`.
    EnvelopeScan,
    /// Operator-norm scaling scan.
    OpnormScan {
        #[arg(long, value_enum)]
        target: Option<TargetArg>,
    },
    /// Bochner–Riesz convergence on a Gaussian.
    Convergence,
    /// The full acceptance suite.
    AllAcceptance {
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyCutoffs => "verify-cutoffs",
            Command::KernelEval => "kernel-eval",
            Command::Projection { .. } => "projection",
            Command::RieszApply => "riesz-apply",
            Command::StationaryCompare => "stationary-compare",
            Command::DetCheck { .. } => "det-check",
            Command::EnvelopeScan => "envelope-scan",
            Command::OpnormScan { .. } => "opnorm-scan",
            Command::Convergence => "convergence",
            Command::AllAcceptance { .. } => "all-acceptance",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub lambda: f64,
    pub delta: f64,
    pub ell: u32,
    pub j: u32,
    pub n: i32,
    pub p: f64,
    pub eps0: f64,
    pub grid_extent: f64,
    pub grid_n: usize,
    pub mu_max: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Subcommand-specific settings (`mu`, `samples`, `target`, `criteria`).
    pub extra: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Defaults for `command`.
    pub fn defaults(command: &Command) -> Self {
        let mut c = ExperimentConfig {
            subcommand: command.name().to_string(),
            lambda: 64.0,
            delta: 0.5,
            ell: 2,
            j: 3,
            n: 0,
            p: 4.0,
            eps0: 1.0 / 16.0,
            grid_extent: 1.5,
            grid_n: 32,
            mu_max: spectral::DEFAULT_MU_MAX,
            seed: 42,
            out: None,
            format: Format::Json,
            extra: BTreeMap::new(),
        };
        match command {
            Command::Projection { .. } => {
                c.extra.insert("mu".into(), "1".into());
            }
            Command::RieszApply => {
                c.grid_extent = 6.0;
                c.grid_n = 96;
            }
            Command::StationaryCompare => {
                c.eps0 = 0.25;
                c.lambda = 16384.0;
            }
            Command::DetCheck { .. } => {
                c.extra.insert("samples".into(), "1000".into());
            }
            Command::EnvelopeScan => {
                c.lambda = 256.0;
                c.j = 6;
            }
            Command::OpnormScan { target } => {
                let t = target.map(ScanTarget::from).unwrap_or(ScanTarget::Prop41);
                let s = ScanSetup::for_target(t);
                c.lambda = s.lambdas.iter().cloned().fold(0.0, f64::max);
                c.p = s.p;
                c.grid_n = s.grid.n;
                c.grid_extent = s.grid.extent;
                c.ell = s.ell;
                c.delta = s.delta;
                c.eps0 = s.eps0;
                c.j = s.js.iter().copied().max().unwrap_or(8);
                c.n = s.ns.iter().copied().max().unwrap_or(2);
                c.extra.insert("target".into(), t.id().into());
            }
            Command::Convergence => {
                c.lambda = 129.0;
                c.grid_extent = 6.0;
                c.grid_n = 96;
            }
            _ => {}
        }
        c
    }

    /// Applies one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| Error::param(key, format!("cannot parse `{v}`")))
        }
        match key.trim().replace('_', "-").as_str() {
            "lambda" => self.lambda = num("lambda", value)?,
            "delta" => self.delta = num("delta", value)?,
            "ell" => self.ell = num("ell", value)?,
            "j" => self.j = num("j", value)?,
            "n" => self.n = num("n", value)?,
            "p" => self.p = num("p", value)?,
            "eps0" => self.eps0 = num("eps0", value)?,
            "grid-extent" => self.grid_extent = num("grid_extent", value)?,
            "grid-n" => self.grid_n = num("grid_n", value)?,
            "mu-max" => self.mu_max = num("mu_max", value)?,
            "seed" => self.seed = num("seed", value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "format" => {
                self.format = Format::from_str(value.trim(), true).map_err(|e| Error::param("format", e))?;
            }
            "mu" | "samples" | "target" | "criteria" => {
                self.extra.insert(key.trim().to_string(), value.trim().to_string());
            }
            other => return Err(Error::param("config", format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::param("config", format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_flags(&mut self, f: &Flags, command: &Command) {
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = f.$field.clone() { self.$field = v; })* };
        }
        take!(lambda, delta, ell, j, n, p, eps0, grid_extent, grid_n, mu_max, seed, format);
        if f.out.is_some() {
            self.out = f.out.clone();
        }
        match command {
            Command::Projection { mu: Some(mu) } => {
                self.extra.insert("mu".into(), mu.to_string());
            }
            Command::DetCheck { samples: Some(s) } => {
                self.extra.insert("samples".into(), s.to_string());
            }
            Command::OpnormScan { target: Some(t) } => {
                self.extra.insert("target".into(), ScanTarget::from(*t).id().into());
            }
            Command::AllAcceptance { criteria: Some(c) } => {
                let s: Vec<String> = c.iter().map(u8::to_string).collect();
                self.extra.insert("criteria".into(), s.join(","));
            }
            _ => {}
        }
    }

    /// Range checks on every parameter.
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, why: &str| if ok { Ok(()) } else { Err(Error::param(name, why.to_string())) };
        check(self.lambda > 0.0 && self.lambda <= 16384.0, "lambda", "must lie in (0, 2^14]")?;
        check(self.delta >= 0.0 && self.delta <= 16.0, "delta", "must lie in [0, 16]")?;
        check(self.ell <= 44, "ell", "must be at most 44")?;
        check(self.j <= 30, "j", "must be at most 30")?;
        check(self.n.abs() <= 1024, "n", "must satisfy |n| <= 1024")?;
        check(self.p >= 1.0, "p", "must lie in [1, inf]")?;
        check(self.eps0 > 0.0 && self.eps0 <= 0.25, "eps0", "must lie in (0, 1/4]")?;
        check(self.grid_extent > 0.0 && self.grid_extent <= 64.0, "grid_extent", "must lie in (0, 64]")?;
        check((2..=256).contains(&self.grid_n), "grid_n", "must lie in [2, 256]")?;
        check(self.mu_max >= 1 && self.mu_max <= 4097, "mu_max", "must lie in [1, 4097]")?;
        if let Some(mu) = self.extra.get("mu") {
            let mu: u32 = mu.parse().map_err(|_| Error::param("mu", "not an integer"))?;
            check(mu % 2 == 1 && mu <= self.mu_max, "mu", "must be odd and at most mu_max")?;
        }
        if let Some(s) = self.extra.get("samples") {
            let s: usize = s.parse().map_err(|_| Error::param("samples", "not an integer"))?;
            check((1..=1_000_000).contains(&s), "samples", "must lie in [1, 10^6]")?;
        }
        Ok(())
    }

    fn extra_num<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>> {
        self.extra
            .get(key)
            .map(|v| v.parse().map_err(|_| Error::param(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    pub fn grid(&self) -> Result<Grid2> {
        Grid2::new(self.grid_n, self.grid_extent)
    }
}

/// Powers of two from `2^lo` up to `max`.
fn dyadic_up_to(lo: i32, max: f64) -> Vec<f64> {
    (lo..=30).map(|k| 2f64.powi(k)).take_while(|l| *l <= max).collect()
}

fn target_from_id(id: &str) -> Result<ScanTarget> {
    [ScanTarget::Prop21, ScanTarget::Prop22, ScanTarget::Eq26, ScanTarget::Eq32, ScanTarget::Prop31, ScanTarget::Prop41]
        .into_iter()
        .find(|t| t.id() == id)
        .ok_or_else(|| Error::param("target", format!("unknown scan target `{id}`")))
}

/// Executes the subcommand and returns its reports.
pub fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<Vec<ScanReport>> {
    match command {
        Command::VerifyCutoffs => Ok(vec![acceptance::partition_identities(cfg.seed)?]),
        Command::KernelEval => {
            let w = WindowedSymbol::new(Arc::new(ok::BumpWindow(operator_lab::prop21_window())), cfg.lambda);
            let mut rep = ScanReport::new("kernel-eval", "r", cfg.seed).param("window", operator_lab::prop21_window()).param("lambda", cfg.lambda);
            let mut worst_err = 0.0f64;
            for i in 0..cfg.grid_n {
                let r = cfg.grid_extent * (i as f64 + 0.5) / cfg.grid_n as f64;
                let v = ok::bracket_kernel_with(&w, Point2::new(r, 0.0), Point2::ORIGIN, &QuadratureOptions::default())?;
                worst_err = worst_err.max(v.error_estimate);
                rep.push(r, v.value.norm());
            }
            rep.diag("max_error_estimate", worst_err);
            Ok(vec![rep])
        }
        Command::Projection { .. } => {
            let mu: u32 = cfg.extra_num("mu")?.unwrap_or(1);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut rep = ScanReport::new("projection", "pair", cfg.seed).param("mu", mu);
            for i in 0..200 {
                let mut pt = || Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let (z, zp) = (pt(), pt());
                let a = spectral::projection_fourier(mu, z, zp, &spectral::DEFAULT_EPS_SCHEDULE)?;
                let b = spectral::projection_closed(mu, z, zp)?;
                rep.push(i as f64, (a - b).norm());
            }
            let worst = rep.ys.iter().cloned().fold(0.0, f64::max);
            rep.diag("max_route_difference", worst);
            rep.target = Some(0.0);
            rep.tolerance = Some(1e-6);
            rep.verdict = Verdict::gating(worst <= 1e-6);
            Ok(vec![rep])
        }
        Command::RieszApply => {
            let grid = cfg.grid()?;
            let spec = spectral::RieszSpec::new(cfg.lambda, cfg.delta, cfg.p)?;
            let f = SampledField::from_real_fn(grid, |z| (-z.norm_sq()).exp());
            let s = spectral::riesz_mean_eigensum(&spec, &f, cfg.mu_max)?;
            let mut rep = ScanReport::new("riesz-apply", "lambda", cfg.seed).param("spec", spec).param("grid", grid);
            rep.push(cfg.lambda, s.sub(&f).norm(cfg.p));
            rep.diag("norm_f", f.norm(cfg.p));
            rep.diag("norm_s_f", s.norm(cfg.p));
            rep.diag("error", s.sub(&f).norm(cfg.p));
            Ok(vec![rep])
        }
        Command::StationaryCompare => {
            let lambdas = dyadic_up_to(8, cfg.lambda);
            let mut rep = acceptance::stationary_phase_decay(cfg.j, cfg.eps0, &lambdas)?;
            rep.experiment = "stationary-compare".into();
            Ok(vec![rep])
        }
        Command::DetCheck { .. } => {
            let count: usize = cfg.extra_num("samples")?.unwrap_or(1000);
            let mut rep = acceptance::determinant_identity(cfg.seed, count)?;
            rep.experiment = "det-check".into();
            Ok(vec![rep])
        }
        Command::EnvelopeScan => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let samples: Vec<(Point2, Point2)> = (0..32)
                .map(|_| {
                    let z = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let r = 2f64.powf(-(cfg.j as f64) - rng.gen_range(0.0..4.0));
                    (z, z + Point2::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU)))
                })
                .collect();
            let family = KernelEnvelope::Kj { ell: cfg.ell, delta: cfg.delta, j: cfg.j as i32, shift: cfg.n, n: 2 };
            let mut rep = ok::envelope_check(family, &samples, &dyadic_up_to(6, cfg.lambda))?;
            rep.seed = cfg.seed;
            Ok(vec![rep])
        }
        Command::OpnormScan { .. } => {
            let target = target_from_id(cfg.extra.get("target").map(String::as_str).unwrap_or("prop-4.1"))?;
            let mut setup = ScanSetup::for_target(target);
            setup.grid = cfg.grid()?;
            setup.p = cfg.p;
            setup.ell = cfg.ell;
            setup.delta = cfg.delta;
            setup.eps0 = cfg.eps0;
            setup.ascent.seed = cfg.seed;
            match target {
                ScanTarget::Prop21 | ScanTarget::Eq32 | ScanTarget::Eq26 => setup.lambdas = dyadic_up_to(6, cfg.lambda),
                _ => setup.lambdas = vec![cfg.lambda],
            }
            match target {
                ScanTarget::Prop31 | ScanTarget::Prop41 => setup.js = (4..=cfg.j).step_by(2).collect(),
                ScanTarget::Eq32 => setup.js = vec![cfg.j],
                _ => {}
            }
            setup.ns = (0..=cfg.n.abs()).collect();
            Ok(vec![operator_lab::scaling_scan(target, &setup)?])
        }
        Command::Convergence => {
            let grid = cfg.grid()?;
            let f = SampledField::from_real_fn(grid, |z| (-z.norm_sq()).exp());
            let lambdas: Vec<f64> = (3..=30).map(|k| 2f64.powi(k) + 1.0).take_while(|l| *l <= cfg.lambda).collect();
            Ok(vec![operator_lab::convergence_experiment(&f, cfg.delta, cfg.p, &lambdas, cfg.mu_max)?])
        }
        Command::AllAcceptance { .. } => {
            let selected: Option<Vec<u8>> = cfg
                .extra
                .get("criteria")
                .map(|s| s.split(',').map(|c| c.trim().parse().map_err(|_| Error::param("criteria", format!("bad entry `{c}`")))).collect())
                .transpose()?;
            match selected {
                None => acceptance::run_all(cfg.seed),
                Some(list) => {
                    let mut out = Vec::new();
                    for c in list {
                        out.extend(acceptance::run_criterion(c, cfg.seed)?);
                    }
                    Ok(out)
                }
            }
        }
    }
}

/// Serialises the envelope in the configured format.
pub fn render(env: &ReportEnvelope<ExperimentConfig>) -> Result<Vec<u8>> {
    match env.config.format {
        Format::Json => Ok(env.to_json()?.into_bytes()),
        Format::Csv => {
            let mut buf = Vec::new();
            env.write_csv(&mut buf)?;
            Ok(buf)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| Error::param("TWISTED_RIESZ_THREADS", format!("cannot parse `{v}`")))?;
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(())
}

/// Resolves the configuration for parsed arguments.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(&cli.command);
    if let Some(path) = &cli.flags.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_flags(&cli.flags, &cli.command);
    cfg.validate()?;
    Ok(cfg)
}

fn run_inner(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let cfg = resolve(&cli)?;
    let reports = execute(&cli.command, &cfg)?;
    let failed = reports.iter().any(|r| r.verdict.is_failure());
    let mut err = std::io::stderr().lock();
    for r in &reports {
        writeln!(err, "{}", acceptance::line(r))?;
    }
    let env = ReportEnvelope::new(cfg, reports);
    let bytes = render(&env)?;
    match &env.config.out {
        Some(path) => fs::write(path, &bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(!failed)
}

/// Runs the program; returns 0 on pass, 2 on a failed verdict and 1 on
/// usage or runtime errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_inner(cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
