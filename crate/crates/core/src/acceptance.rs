//! The acceptance suite: ten numbered checks plus supplementary lines.
//!
//! Every check returns a [`ScanReport`] whose first note is the one-line
//! headline; reports carry no timing so that reruns are byte-identical.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cutoffs::{self, AngularPartition, BumpSpec, ChiTilde};
use crate::error::Result;
use crate::geometry::Point2;
use crate::grid::{Grid2, SampledField};
use crate::operator_lab::{self, AscentOptions, ScanSetup, ScanTarget};
use crate::oscillatory_kernels::{
    bracket_kernel, spectral_multiplier, EtaRhoWindow, SpectralSumOptions, WindowedSymbol,
};
use crate::propagator::{symmetry_check, PhasePoint};
use crate::report::{fit_loglog, ScanReport, Verdict};
use crate::spectral::{self, ProjectionKernel, Route};
use crate::stationary_phase::{self as sp, DerivativeRoute, ScaledBox};

/// A numbered acceptance check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Criterion {
    pub number: u8,
    pub name: &'static str,
    /// Advisory checks never fail a run.
    pub advisory: bool,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { number: 1, name: "determinant-identity", advisory: false },
    Criterion { number: 2, name: "partition-identities", advisory: false },
    Criterion { number: 3, name: "phase-symmetry", advisory: false },
    Criterion { number: 4, name: "dual-route-projections", advisory: false },
    Criterion { number: 5, name: "stationary-phase-error-decay", advisory: false },
    Criterion { number: 6, name: "l2-bound", advisory: false },
    Criterion { number: 7, name: "prop21-trend", advisory: false },
    Criterion { number: 8, name: "riesz-convergence", advisory: false },
    Criterion { number: 9, name: "scaled-geometry-residuals", advisory: false },
    Criterion { number: 10, name: "advisory-trends", advisory: true },
];

/// Runs criterion `number` (1–10) with the given seed.
pub fn run_criterion(number: u8, seed: u64) -> Result<Vec<ScanReport>> {
    Ok(match number {
        1 => vec![determinant_identity(seed, 1000)?],
        2 => vec![partition_identities(seed)?],
        3 => vec![phase_symmetry(seed)?],
        4 => vec![dual_route_projections(seed)?],
        5 => vec![stationary_phase_decay(3, 0.25, &(8..=14).map(|k| 2f64.powi(k)).collect::<Vec<_>>())?],
        6 => l2_bound()?,
        7 => vec![prop21_trend(seed)?],
        8 => vec![riesz_convergence()?],
        9 => vec![scaled_geometry_residuals()?],
        10 => advisory_trends(seed)?,
        _ => return Err(crate::Error::param("criterion", format!("no criterion {number}"))),
    })
}

/// Supplementary, non-numbered checks.
pub fn supplementary(seed: u64) -> Result<Vec<ScanReport>> {
    let mut setup = ScanSetup::for_target(ScanTarget::Prop22);
    setup.ascent.seed = seed;
    let mut rep = operator_lab::scaling_scan(ScanTarget::Prop22, &setup)?;
    let h = format!("Prop 2.2 n-scan slope {:.3} (claimed decay beyond {})", slope(&rep), ScanTarget::Prop22.exponent().1);
    headline(&mut rep, h);
    Ok(vec![rep])
}

/// One printable line per report.
pub fn line(rep: &ScanReport) -> String {
    match rep.notes.first() {
        Some(h) => format!("[{}] {}: {}", rep.verdict.label(), rep.experiment, h),
        None => rep.summary(),
    }
}

fn headline(rep: &mut ScanReport, text: String) {
    rep.notes.insert(0, text);
}

fn slope(rep: &ScanReport) -> f64 {
    rep.slope().unwrap_or(f64::NAN)
}

fn uniform_pairs(rng: &mut ChaCha8Rng, count: usize, half: f64) -> Vec<(Point2, Point2)> {
    (0..count)
        .map(|_| {
            let mut p = || Point2::new(rng.gen_range(-half..half), rng.gen_range(-half..half));
            (p(), p())
        })
        .collect()
}

/// Closed-form `det 𝓜(φ) = 1/8`, and the finite-difference route within 1e-9.
pub fn determinant_identity(seed: u64, count: usize) -> Result<ScanReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ScanReport::new("acceptance/1-determinant-identity", "sample", seed).param("points", count);
    let (mut closed, mut fd) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let z = Point2::new(rng.gen_range(0.25..1.0), rng.gen_range(-0.25..0.25));
        let s = rng.gen_range(-0.25..0.25);
        let z1p = rng.gen_range(-0.25..0.25);
        closed = closed.max((sp::cs_determinant(z, s, z1p, DerivativeRoute::Closed)? - 0.125).abs());
        fd = fd.max((sp::cs_determinant(z, s, z1p, DerivativeRoute::FiniteDifference)? - 0.125).abs());
    }
    rep.diag("closed_max_deviation", closed);
    rep.diag("fd_max_deviation", fd);
    // "Exactly" up to a few units in the last place of 1/8.
    rep.verdict = Verdict::gating(closed <= 4.0 * f64::EPSILON * 0.125 && fd <= 1e-9);
    headline(&mut rep, format!("closed |det-1/8| = {closed:.2e}, finite-difference |det-1/8| = {fd:.2e} (tol 1e-9)"));
    Ok(rep)
}

/// Every partition of unity, at 10⁴ points each.
pub fn partition_identities(seed: u64) -> Result<ScanReport> {
    const N: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ScanReport::new("acceptance/2-partition-identities", "identity", seed).param("points", N);

    let dyadic = (0..N)
        .map(|_| {
            let t = 2f64.powf(rng.gen_range(-20.0..20.0));
            ((-45..=45).map(|l| cutoffs::psi(2f64.powi(l) * t)).sum::<f64>() - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let (lambda, delta) = (64.0, 0.5);
    let recon = (0..N)
        .map(|_| {
            let t: f64 = rng.gen_range(1e-6..lambda);
            let tp = t.powf(delta);
            (cutoffs::psi_reconstruction(lambda, delta, t) - tp).abs() / tp.max(1.0)
        })
        .fold(0.0, f64::max);

    let eta = (0..N)
        .map(|_| {
            let t = rng.gen_range(0.0..PI);
            (cutoffs::eta0(t) + cutoffs::eta1(t) + cutoffs::eta0(t - PI) - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let chi = (0..N)
        .map(|_| {
            let z = Point2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            // Half the separations land within 1/4 of the sphere |z − z′| = 2.
            let r = if rng.gen_bool(0.5) { 2.0 - 2f64.powf(rng.gen_range(-30.0..-2.0)) } else { rng.gen_range(0.0..4.0) };
            let zp = z + Point2::from_polar(r, rng.gen_range(0.0..2.0 * PI));
            (cutoffs::chi_split(cutoffs::j0(4096.0), z, zp).total() - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let caps = [4u32, 8, 12]
        .iter()
        .map(|&j| {
            let ap = AngularPartition::new(j, 1.0 / 16.0)?;
            Ok((0..N / 3)
                .map(|_| {
                    let w = rng.gen_range(-PI..PI);
                    ((0..ap.count).map(|m| ap.eval(m, w)).sum::<f64>() - 1.0).abs()
                })
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    for (k, v) in [("psi_dyadic", dyadic), ("psi_ell_delta_reconstruction", recon), ("eta_triple", eta), ("chi_pieces", chi), ("angular_caps", caps)] {
        rep.diag(k, v);
    }
    let worst = [dyadic, recon, eta, chi, caps].into_iter().fold(0.0, f64::max);
    rep.verdict = Verdict::gating(worst <= 1e-12);
    headline(
        &mut rep,
        format!("worst of five identities {worst:.2e} (dyadic {dyadic:.1e}, reconstruction {recon:.1e}, eta {eta:.1e}, chi {chi:.1e}, caps {caps:.1e}; tol 1e-12)"),
    );
    Ok(rep)
}

/// `𝒫(π − t, 𝐋z, 𝐋z′) + 𝒫(t, z, z′) − π = 0`.
pub fn phase_symmetry(seed: u64) -> Result<ScanReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ScanReport::new("acceptance/3-phase-symmetry", "sample", seed).param("points", 1000);
    let mut worst = 0.0f64;
    for (z, zp) in uniform_pairs(&mut rng, 1000, 3.0) {
        let t = rng.gen_range(0.1..PI - 0.1);
        worst = worst.max(symmetry_check(&PhasePoint::new(t, z, zp))?.abs());
    }
    rep.diag("max_residual", worst);
    rep.verdict = Verdict::gating(worst <= 1e-12);
    headline(&mut rep, format!("max |P(pi-t, Lz, Lz') + P(t, z, z') - pi| = {worst:.2e} (tol 1e-12)"));
    Ok(rep)
}

/// Fourier vs Laguerre projections, and the ground state.
pub fn dual_route_projections(seed: u64) -> Result<ScanReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ScanReport::new("acceptance/4-dual-route-projections", "mu", seed).param("pairs", 200);
    let pairs = uniform_pairs(&mut rng, 200, 3.0);
    let mut worst = 0.0f64;
    for mu in [1u32, 3, 5, 7] {
        let d = pairs
            .iter()
            .map(|&(z, zp)| {
                let a = spectral::projection_fourier(mu, z, zp, &spectral::DEFAULT_EPS_SCHEDULE)?;
                Ok((a - spectral::projection_closed(mu, z, zp)?).norm())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rep.push(mu as f64, d);
        worst = worst.max(d);
    }
    let grid = Grid2::new(128, 8.0)?;
    let f = SampledField::from_real_fn(grid, |z| (-0.25 * z.norm_sq()).exp());
    let pf = ProjectionKernel::build(1, Route::ClosedForm, grid)?.apply(&f)?;
    let ground = pf.sub(&f).norm(2.0) / f.norm(2.0);
    let cst = spectral::ClosedForm::reference()?.constant;
    rep.diag("max_route_difference", worst);
    rep.diag("ground_state_relative_l2", ground);
    rep.diag("constant_minus_inverse_two_pi", (cst - 1.0 / (2.0 * PI)).norm());
    rep.verdict = Verdict::gating(worst <= 1e-6 && ground <= 1e-4);
    headline(&mut rep, format!("max |Pi_fourier - Pi_closed| = {worst:.2e} (tol 1e-6), ground-state rel. L2 error {ground:.2e} (tol 1e-4)"));
    Ok(rep)
}

/// `|[η]^λχ̃ − leading term|` against `λ` at fixed `j`, for the pair
/// `z = −z′ = (r/2, 0)` with `2 − r = 0.8·2^{−j}` and a window of half-width
/// `ε₀2^{1−j/2}` around the stationary time.
pub fn stationary_phase_decay(j: u32, eps0: f64, lambdas: &[f64]) -> Result<ScanReport> {
    let r = 2.0 - 0.8 * 2f64.powi(-(j as i32));
    let (z, zp) = (Point2::new(0.5 * r, 0.0), Point2::new(-0.5 * r, 0.0));
    let sc = sp::stationary_point(z, zp)?;
    let spec = BumpSpec::interval(sc, eps0 * 2f64.powf(1.0 - j as f64 / 2.0), 4.0);
    let win = Arc::new(crate::oscillatory_kernels::BumpWindow(spec));
    let chi = ChiTilde::new(r, j, eps0, 1.0)?;
    let mut rep = ScanReport::new("acceptance/5-stationary-phase-error-decay", "lambda", 0)
        .param("j", j)
        .param("eps0", eps0)
        .param("window", spec)
        .param("z", z)
        .param("z_prime", zp);
    for &lambda in lambdas {
        let w = WindowedSymbol::new(win.clone(), lambda);
        let full = bracket_kernel(&w, z, zp)? * chi.eval(z, zp);
        let lead = sp::leading_term(lambda, j, &w, &chi, z, zp)?;
        rep.push(lambda, (full - lead).norm());
    }
    rep.refit();
    rep.target = Some(-1.5);
    rep.tolerance = Some(0.15);
    let s = slope(&rep);
    rep.verdict = Verdict::gating((s + 1.5).abs() <= 0.15);
    headline(&mut rep, format!("slope of log|E| vs log lambda = {s:.4} (target -1.5 +/- 0.15)"));
    Ok(rep)
}

/// `‖[η_ρ]^λ‖_{2→2}` against `λ^{−1}‖η_ρ‖₁`, with the bound corrected by
/// `1/|c| = 4π` as a supplementary line.
///
/// The operator is `(1/c)Σ_μ m(μ)Π_μ` after a `λ^{1/2}` dilation, so its
/// Galerkin discretisation on the eigenspaces `μ ≤ μ_K` is diagonal with
/// entries `4π m(μ)/λ`; `μ_K` is where the multiplier falls below `1e-12` of
/// its peak. Point grids do not resolve these kernels at desk scale (the
/// relevant eigenfunctions oscillate at frequency `√(λμ_K)`).
pub fn l2_bound() -> Result<Vec<ScanReport>> {
    let opts = SpectralSumOptions::default();
    let mut rep = ScanReport::new("acceptance/6-l2-bound", "lambda", 0).param("discretization", "eigenbasis-galerkin").param("multiplier", opts);
    let mut corrected = ScanReport::new("supplementary/6-l2-bound-with-propagator-constant", "lambda", 0);
    let (mut worst, mut worst_corrected) = (0.0f64, 0.0f64);
    for rho in [1.0 / 8.0, 1.0 / 32.0] {
        for k in [6, 8, 10] {
            let lambda = 2f64.powi(k);
            let win = EtaRhoWindow { rho };
            let bound = win.l1_norm() / lambda;
            let w = WindowedSymbol::new(Arc::new(win), lambda);
            let m = spectral_multiplier(&w, &opts)?;
            let norm = 4.0 * PI * m.iter().map(|v| v.norm()).fold(0.0, f64::max) / lambda;
            rep.push(lambda, norm);
            corrected.push(lambda, norm);
            rep.diag(&format!("ratio_rho_{rho}_lambda_{lambda}"), norm / bound);
            rep.diag(&format!("eigenspaces_rho_{rho}_lambda_{lambda}"), m.len() as f64);
            corrected.diag(&format!("ratio_rho_{rho}_lambda_{lambda}"), norm / (4.0 * PI * bound));
            worst = worst.max(norm / bound);
            worst_corrected = worst_corrected.max(norm / (4.0 * PI * bound));
        }
    }
    rep.diag("max_ratio", worst);
    rep.verdict = Verdict::gating(worst <= 1.0 + 1e-3);
    let h = format!("max ||[eta_rho]^lambda||_2->2 / (||eta_rho||_1/lambda) = {worst:.4} (tol 1.001)");
    headline(&mut rep, h);
    corrected.diag("max_ratio", worst_corrected);
    corrected.verdict = Verdict::advisory(worst_corrected <= 1.0 + 1e-3);
    let h = format!("max norm / (4 pi ||eta_rho||_1/lambda) = {worst_corrected:.4} (tol 1.001)");
    headline(&mut corrected, h);
    Ok(vec![rep, corrected])
}

/// Fitted slope of the `4 → 4` lower bound over `λ ∈ {2⁶, …, 2¹²}`.
pub fn prop21_trend(seed: u64) -> Result<ScanReport> {
    let mut setup = ScanSetup::for_target(ScanTarget::Prop21);
    setup.ascent.seed = seed;
    let mut rep = operator_lab::scaling_scan(ScanTarget::Prop21, &setup)?;
    rep.experiment = "acceptance/7-prop21-trend".into();
    let wit: Vec<f64> = rep
        .xs
        .iter()
        .filter_map(|l| rep.diagnostics.get(&format!("eigen_witness_lambda_{l}")).copied())
        .collect();
    if let Some(f) = fit_loglog(&rep.xs, &wit) {
        rep.diag("eigen_witness_slope", f.slope);
    }
    let s = slope(&rep);
    headline(&mut rep, format!("fitted slope of ||[eta]^lambda||_4->4 lower bound = {s:.4} (accept <= -0.85)"));
    Ok(rep)
}

/// `‖S_λ^{1/2} f − f‖₄` strictly decreasing for `f = e^{−|z|²}`.
pub fn riesz_convergence() -> Result<ScanReport> {
    let grid = Grid2::new(96, 6.0)?;
    let f = SampledField::from_real_fn(grid, |z| (-z.norm_sq()).exp());
    let mut rep = operator_lab::convergence_experiment(&f, 0.5, 4.0, &[9.0, 17.0, 33.0, 65.0, 129.0], spectral::DEFAULT_MU_MAX)?;
    rep.experiment = "acceptance/8-riesz-convergence".into();
    let ys: Vec<String> = rep.ys.iter().map(|y| format!("{y:.3e}")).collect();
    headline(&mut rep, format!("||S f - f||_4 over lambda = 9..129: [{}] (strictly decreasing required)", ys.join(", ")));
    Ok(rep)
}

/// `sup_U |S̃_j − 𝔓^{1/2}| ≤ C2^{−j}` with stable `C`, and the `2/3` ratio.
pub fn scaled_geometry_residuals() -> Result<ScanReport> {
    let bx = ScaledBox::new(0.5, 1.0 / 16.0)?;
    let samples = bx.samples(10_000);
    let mut rep = ScanReport::new("acceptance/9-scaled-geometry-residuals", "2^j", 0)
        .param("b", bx.b)
        .param("eps0", bx.eps0)
        .param("samples", samples.len());
    let (mut cs, mut ratio_ok) = (Vec::new(), true);
    for j in [6u32, 8, 10] {
        let (mut e2, mut ratio) = (0.0f64, 0.0f64);
        for &(z, zp) in &samples {
            e2 = e2.max(sp::scaled_geometry(j, &bx, z, zp)?.e2.abs());
            ratio = ratio.max((sp::two_thirds_ratio(j, &bx, z, zp)? - 2.0 / 3.0).abs());
        }
        let scale = 2f64.powi(j as i32);
        rep.push(scale, e2);
        rep.diag(&format!("c_j{j}"), e2 * scale);
        rep.diag(&format!("ratio_deviation_j{j}"), ratio);
        cs.push(e2 * scale);
        ratio_ok &= ratio <= 5.0 / scale;
    }
    rep.refit();
    let spread = cs.iter().cloned().fold(0.0, f64::max) / cs.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.diag("c_spread", spread);
    rep.verdict = Verdict::gating(spread <= 2.0 && ratio_ok);
    headline(
        &mut rep,
        format!(
            "C = 2^j sup|S_j - P^(1/2)| = [{:.4}, {:.4}, {:.4}] spread {spread:.3} (tol 2); 2/3-ratio within 5*2^-j: {ratio_ok}",
            cs[0], cs[1], cs[2]
        ),
    );
    Ok(rep)
}

/// Non-gating j-scans and the projection-exponent fit.
pub fn advisory_trends(seed: u64) -> Result<Vec<ScanReport>> {
    let mut out = Vec::new();
    for target in [ScanTarget::Prop31, ScanTarget::Prop41] {
        let mut setup = ScanSetup::for_target(target);
        setup.ascent.seed = seed;
        let mut rep = operator_lab::scaling_scan(target, &setup)?;
        rep.experiment = format!("acceptance/10-{}", target.id());
        let (claimed, accept) = target.exponent();
        let h = format!("j-slope {:.4} (claimed {claimed}, accept <= {accept})", slope(&rep));
        headline(&mut rep, h);
        out.push(rep);
    }
    let mus: Vec<u32> = (0..11).map(|k| 2 * k + 1).collect();
    let opts = AscentOptions { seed, ..AscentOptions::default() };
    let mut rep = spectral::projection_norm_trend(&mus, f64::INFINITY, Grid2::new(64, 10.0)?, &opts)?;
    rep.experiment = "acceptance/10-projection-exponent".into();
    let h = format!(
        "||Pi_mu||_2->inf slope {:.4} (printed exponent {}, alternative {})",
        slope(&rep),
        rep.diagnostics["exponent_printed"],
        rep.diagnostics["exponent_alternative"]
    );
    headline(&mut rep, h);
    out.push(rep);
    Ok(out)
}

/// Criterion 1–10 results, then supplementary ones.
pub fn run_all(seed: u64) -> Result<Vec<ScanReport>> {
    let mut out = Vec::new();
    for c in CRITERIA {
        out.extend(run_criterion(c.number, seed)?);
    }
    out.extend(supplementary(seed)?);
    Ok(out)
}
