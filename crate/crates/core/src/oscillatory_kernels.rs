//! The time-integrated kernels
//! `[η]^λ(z, z′) = ∫ η(t) (sin t)^{−1} e^{iλ𝒫(t, z, z′)} dt`,
//! their decompositions and envelope checks.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoffs::{self, BumpSpec};
use crate::error::{Error, Result};
use crate::geometry::{cross, Point2};
use crate::grid::{Grid2, TwistedConvolution};
use crate::operator_lab::DiscreteOperator;
use crate::quadrature::{adaptive_gk, composite_real, gl16};
use crate::report::{ScanReport, Verdict};

/// A smooth time window `η`.
pub trait Window: Send + Sync + fmt::Debug {
    fn eval(&self, t: f64) -> Complex64;
    /// Disjoint intervals outside of which the window vanishes.
    fn pieces(&self) -> Vec<(f64, f64)>;
    /// Length on which the window varies appreciably.
    fn scale(&self) -> f64;
}

/// Interval bump `θ_k((t − t₀)/w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpWindow(pub BumpSpec);

impl Window for BumpWindow {
    fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(self.0.eval(t), 0.0)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        vec![self.0.support()]
    }
    fn scale(&self) -> f64 {
        self.0.half_width / (4.0 * (1.0 + self.0.sharpness.sqrt()))
    }
}

/// `η_ρ(t) = ψ(|t|/ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaRhoWindow {
    pub rho: f64,
}

impl Window for EtaRhoWindow {
    fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(cutoffs::eta_rho(self.rho, t), 0.0)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        let r = self.rho;
        vec![(-r, -0.25 * r), (0.25 * r, r)]
    }
    fn scale(&self) -> f64 {
        self.rho / 32.0
    }
}

impl EtaRhoWindow {
    /// `‖η_ρ‖₁ = 2ρ ∫ψ`.
    pub fn l1_norm(&self) -> f64 {
        2.0 * self.rho * psi_integral(0.0)
    }
}

/// `∫ u^δ ψ(u) du`.
pub fn psi_integral(delta: f64) -> f64 {
    let edges: Vec<f64> = (0..=96).map(|i| 0.25 + 0.75 * i as f64 / 96.0).collect();
    composite_real(|u| u.powf(delta) * cutoffs::psi(u), &edges, gl16())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eta0Window;

impl Window for Eta0Window {
    fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(cutoffs::eta0(t), 0.0)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        vec![(-cutoffs::ETA0_EDGE, cutoffs::ETA0_EDGE)]
    }
    fn scale(&self) -> f64 {
        (cutoffs::ETA0_EDGE - cutoffs::ETA0_PLATEAU) / 16.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eta1Window;

impl Window for Eta1Window {
    fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(cutoffs::eta1(t), 0.0)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        vec![(cutoffs::ETA0_PLATEAU, PI - cutoffs::ETA0_PLATEAU)]
    }
    fn scale(&self) -> f64 {
        (cutoffs::ETA0_EDGE - cutoffs::ETA0_PLATEAU) / 16.0
    }
}

/// `φ̃_l(π/2 − t) = ψ(2^l |π/2 − t|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereWindow {
    pub l: i32,
}

impl Window for SphereWindow {
    fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(cutoffs::phi_tilde(self.l, FRAC_PI_2 - t), 0.0)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        let (a, b) = (2f64.powi(-self.l - 2), 2f64.powi(-self.l));
        vec![(FRAC_PI_2 - b, FRAC_PI_2 - a), (FRAC_PI_2 + a, FRAC_PI_2 + b)]
    }
    fn scale(&self) -> f64 {
        2f64.powi(-self.l) / 32.0
    }
}

/// `φ̃_j(t) = ψ(2^j |t|)`, the dyadic time shell around 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeShellWindow {
    pub j: i32,
}

impl Window for TimeShellWindow {
    fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(cutoffs::phi_tilde(self.j, t), 0.0)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        let (a, b) = (2f64.powi(-self.j - 2), 2f64.powi(-self.j));
        vec![(-b, -a), (a, b)]
    }
    fn scale(&self) -> f64 {
        2f64.powi(-self.j) / 32.0
    }
}

/// `ψ̂_ℓ^δ(t − shift)`; not compactly supported, so `pieces` returns the whole
/// truncation interval `[shift − reach, shift + reach]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatPsiWindow {
    pub ell: u32,
    pub delta: f64,
    pub shift: f64,
    pub reach: f64,
}

impl Window for HatPsiWindow {
    fn eval(&self, t: f64) -> Complex64 {
        hat_psi_complex(self.ell, self.delta, Complex64::new(t - self.shift, 0.0))
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        vec![(self.shift - self.reach, self.shift + self.reach)]
    }
    fn scale(&self) -> f64 {
        2f64.powi(-(self.ell as i32)) / 8.0
    }
}

/// `η(t + shift)`.
#[derive(Clone, Debug)]
pub struct ShiftedWindow {
    pub inner: Arc<dyn Window>,
    pub shift: f64,
}

impl Window for ShiftedWindow {
    fn eval(&self, t: f64) -> Complex64 {
        self.inner.eval(t + self.shift)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        self.inner.pieces().into_iter().map(|(a, b)| (a - self.shift, b - self.shift)).collect()
    }
    fn scale(&self) -> f64 {
        self.inner.scale()
    }
}

/// Pointwise product of windows.
#[derive(Clone, Debug)]
pub struct ProductWindow(pub Vec<Arc<dyn Window>>);

impl Window for ProductWindow {
    fn eval(&self, t: f64) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for w in &self.0 {
            v *= w.eval(t);
            if v == Complex64::new(0.0, 0.0) {
                break;
            }
        }
        v
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        let mut acc: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, f64::INFINITY)];
        for w in &self.0 {
            let mut next = Vec::new();
            for &(a, b) in &acc {
                for (c, d) in w.pieces() {
                    let (lo, hi) = (a.max(c), b.min(d));
                    if lo < hi {
                        next.push((lo, hi));
                    }
                }
            }
            acc = next;
        }
        acc.sort_by(|x, y| x.0.total_cmp(&y.0));
        acc
    }
    fn scale(&self) -> f64 {
        self.0.iter().map(|w| w.scale()).fold(f64::INFINITY, f64::min)
    }
}

/// Window identically zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroWindow;

impl Window for ZeroWindow {
    fn eval(&self, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn pieces(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
    fn scale(&self) -> f64 {
        1.0
    }
}

pub fn product(ws: Vec<Arc<dyn Window>>) -> Arc<dyn Window> {
    Arc::new(ProductWindow(ws))
}

/// Decomposition indices carried with a symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolIndices {
    pub ell: Option<u32>,
    pub j: Option<u32>,
    pub l: Option<i32>,
    pub n: Option<i32>,
}

/// A window together with the frequency `λ`.
#[derive(Clone, Debug)]
pub struct WindowedSymbol {
    pub window: Arc<dyn Window>,
    pub lambda: f64,
    pub indices: SymbolIndices,
}

impl WindowedSymbol {
    pub fn new(window: Arc<dyn Window>, lambda: f64) -> Self {
        WindowedSymbol { window, lambda, indices: SymbolIndices::default() }
    }

    pub fn with_window(&self, window: Arc<dyn Window>) -> Self {
        WindowedSymbol { window, lambda: self.lambda, indices: self.indices }
    }
}

/// Quadrature controls for bracket kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Maximal `λ|Δ𝒫|` per panel.
    pub phase_budget: f64,
    pub max_panels: usize,
    /// Repeat with halved budgets until successive values agree.
    pub certify: bool,
    /// Target `|ΔI| ≤ tol·(1 + |I|)` when certifying.
    pub tolerance: f64,
    /// Regularisation: evaluate the propagator factors at `t − iε`.
    pub eps: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { phase_budget: 0.5, max_panels: 4_000_000, certify: true, tolerance: 1e-9, eps: 0.0 }
    }
}

impl QuadratureOptions {
    /// Options for bulk tabulation: one pass with a wider per-panel budget.
    pub fn bulk() -> Self {
        QuadratureOptions { phase_budget: 4.0, certify: false, ..Default::default() }
    }

    pub fn regularized(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

/// Value of a bracket integral with its quadrature diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub panels: usize,
    /// Difference to the run with twice the budget (0 when not certified).
    pub error_estimate: f64,
}

/// Panel edges over `[a, b]` with `λ|Δ𝒫| ≤ budget` for every squared distance
/// up to `s_max`.
fn phase_panels(a: f64, b: f64, lambda: f64, s_max: f64, eps: f64, h_max: f64, budget: f64, cap: usize) -> Result<Vec<f64>> {
    // |∂_t𝒫| ≤ 1 + s/(4|sin τ|²), |∂_t²𝒫| ≤ s |cos τ| / (2|sin τ|³) with τ = t − iε.
    let sh2 = eps.sinh().powi(2);
    let bounds = |t: f64| {
        let s2 = t.sin().powi(2) + sh2;
        let c = (t.cos().powi(2) + sh2).sqrt();
        (1.0 + s_max / (4.0 * s2), s_max * c / (2.0 * s2 * s2.sqrt()))
    };
    let mut edges = vec![a];
    let mut t = a;
    while t < b {
        let mut h = h_max.min(b - t);
        for _ in 0..40 {
            let (p1a, p2a) = bounds(t);
            let (p1b, p2b) = bounds(t + h);
            let (p1m, p2m) = bounds(t + 0.5 * h);
            let d1 = p1a.max(p1b).max(p1m);
            let d2 = p2a.max(p2b).max(p2m);
            let sing = {
                // Keep panels short relative to the distance to the nearest multiple of π.
                let d = (t / PI).round() * PI - t;
                0.25 * (d.abs().max(eps)).max(1e-300)
            };
            let hn = h_max
                .min(budget / (lambda * d1))
                .min((2.0 * budget / (lambda * d2.max(1e-300))).sqrt())
                .min(sing.max(h * 0.5).min(h_max))
                .min(b - t);
            if hn >= 0.999 * h {
                break;
            }
            h = hn;
        }
        t = if b - (t + h) < 1e-15 * (1.0 + b.abs()) { b } else { t + h };
        edges.push(t);
        if edges.len() > cap {
            return Err(Error::BudgetExceeded { panels: edges.len(), cap });
        }
    }
    Ok(edges)
}

/// Quadrature nodes carrying the `t`-only factors of the integrand:
/// `weight·η(t)·e^{iλτ}/sin τ` and `iλ cot τ / 4`.
#[derive(Clone, Debug)]
struct Nodes {
    amp: Vec<Complex64>,
    rate: Vec<Complex64>,
}

fn check_regime(w: &dyn Window, eps: f64) -> Result<()> {
    if eps > 0.0 {
        return Ok(());
    }
    for (a, b) in w.pieces() {
        let k = (a / PI).ceil();
        if k * PI <= b {
            return Err(Error::OutOfRegime(format!(
                "window piece [{a}, {b}] contains a multiple of pi; request regularisation"
            )));
        }
    }
    Ok(())
}

fn build_nodes(w: &dyn Window, lambda: f64, s_max: f64, opts: &QuadratureOptions, budget: f64) -> Result<(Nodes, usize)> {
    check_regime(w, opts.eps)?;
    let (x, wt) = gl16();
    let mut amp = Vec::new();
    let mut rate = Vec::new();
    let mut panels = 0;
    for (a, b) in w.pieces() {
        let edges = phase_panels(a, b, lambda, s_max, opts.eps, w.scale(), budget, opts.max_panels)?;
        panels += edges.len() - 1;
        if panels > opts.max_panels {
            return Err(Error::BudgetExceeded { panels, cap: opts.max_panels });
        }
        for e in edges.windows(2) {
            let (m, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
            for (xi, wi) in x.iter().zip(wt) {
                let t = m + h * xi;
                let eta = w.eval(t);
                if eta == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let tau = Complex64::new(t, -opts.eps);
                let (s, c) = (tau.sin(), tau.cos());
                amp.push(eta * (Complex64::i() * lambda * tau).exp() / s * (wi * h));
                rate.push(Complex64::i() * (0.25 * lambda) * c / s);
            }
        }
    }
    Ok((Nodes { amp, rate }, panels))
}

fn sum_nodes(nodes: &Nodes, s: f64) -> Complex64 {
    nodes.amp.iter().zip(&nodes.rate).map(|(a, r)| a * (r * s).exp()).sum()
}

/// Cross-free part `G(s) = ∫ η(t)/sin τ · e^{iλ(τ + s cot τ/4)} dt`.
pub fn bracket_radial(w: &WindowedSymbol, s: f64, opts: &QuadratureOptions) -> Result<KernelValue> {
    let (nodes, panels) = build_nodes(w.window.as_ref(), w.lambda, s, opts, opts.phase_budget)?;
    let value = sum_nodes(&nodes, s);
    if !opts.certify {
        return Ok(KernelValue { value, panels, error_estimate: 0.0 });
    }
    let mut prev = value;
    let mut budget = opts.phase_budget;
    loop {
        budget *= 0.5;
        let (nodes, panels) = build_nodes(w.window.as_ref(), w.lambda, s, opts, budget)?;
        let v = sum_nodes(&nodes, s);
        let err = (v - prev).norm();
        if err <= opts.tolerance * (1.0 + v.norm()) || budget < 1e-3 {
            return Ok(KernelValue { value: v, panels, error_estimate: err });
        }
        prev = v;
    }
}

/// `[η]^λ(z, z′)` with certified quadrature.
pub fn bracket_kernel(w: &WindowedSymbol, z: Point2, zp: Point2) -> Result<Complex64> {
    Ok(bracket_kernel_with(w, z, zp, &QuadratureOptions::default())?.value)
}

pub fn bracket_kernel_with(w: &WindowedSymbol, z: Point2, zp: Point2, opts: &QuadratureOptions) -> Result<KernelValue> {
    let mut kv = bracket_radial(w, z.dist_sq(zp), opts)?;
    kv.value *= Complex64::new(0.0, w.lambda * cross(z, zp)).exp();
    Ok(kv)
}

/// Tabulates `G` at every distinct squared offset of a grid, sharing one
/// set of quadrature nodes.
pub fn bracket_table(w: &WindowedSymbol, grid: Grid2, opts: &QuadratureOptions) -> Result<TwistedConvolution> {
    bracket_table_filtered(w, grid, opts, |_| true)
}

/// As [`bracket_table`], but only squared distances with `keep(s)` are
/// computed; the others are set to zero.
pub fn bracket_table_filtered<F: Fn(f64) -> bool>(w: &WindowedSymbol, grid: Grid2, opts: &QuadratureOptions, keep: F) -> Result<TwistedConvolution> {
    let all = grid.distinct_offsets();
    let h2 = grid.weight();
    let keys: Vec<usize> = all.iter().copied().filter(|&k| keep(h2 * k as f64)).collect();
    if keys.is_empty() {
        return TwistedConvolution::from_table(grid, w.lambda, &all, &vec![Complex64::new(0.0, 0.0); all.len()]);
    }
    let s_max = h2 * *keys.last().unwrap_or(&0) as f64;
    let (nodes, _) = build_nodes(w.window.as_ref(), w.lambda, s_max, opts, opts.phase_budget)?;
    let kmax = *keys.last().unwrap_or(&0);
    let mut slot = vec![usize::MAX; kmax + 1];
    for (i, &k) in keys.iter().enumerate() {
        slot[k] = i;
    }
    // Σ_n a_n z_n^k with z_n = e^{r_n h²}, by running powers over chunks of nodes.
    let chunk = 256;
    let partial: Vec<Vec<Complex64>> = nodes
        .amp
        .par_chunks(chunk)
        .zip(nodes.rate.par_chunks(chunk))
        .map(|(amps, rates)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); keys.len()];
            for (a, r) in amps.iter().zip(rates) {
                let z = (r * h2).exp();
                let mut p = *a;
                for (k, &sl) in slot.iter().enumerate() {
                    if sl != usize::MAX {
                        acc[sl] += p;
                    }
                    if k < kmax {
                        p *= z;
                    }
                }
            }
            acc
        })
        .collect();
    let mut vals = vec![Complex64::new(0.0, 0.0); keys.len()];
    for p in &partial {
        for (v, x) in vals.iter_mut().zip(p) {
            *v += x;
        }
    }
    let mut full = vec![Complex64::new(0.0, 0.0); all.len()];
    for (k, v) in keys.iter().zip(&vals) {
        if let Ok(i) = all.binary_search(k) {
            full[i] = *v;
        }
    }
    TwistedConvolution::from_table(grid, w.lambda, &all, &full)
}

/// Settings of the spectral-sum route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSumOptions {
    /// Stop once `|m(μ)|` stays below `cutoff·max|m|` for `tail` consecutive
    /// eigenvalues on both sides of `λ`.
    pub cutoff: f64,
    pub tail: usize,
    pub max_index: u32,
    /// Gauss panels per unit of `t` for the multiplier integrals.
    pub panels_per_unit: f64,
}

impl Default for SpectralSumOptions {
    fn default() -> Self {
        SpectralSumOptions { cutoff: 1e-12, tail: 64, max_index: 40_000, panels_per_unit: 0.0 }
    }
}

/// Spectral multiplier `m(μ) = ∫ η(t) e^{it(λ−μ)} dt` at the odd integers `μ = 2k+1`.
pub fn spectral_multiplier(w: &WindowedSymbol, opts: &SpectralSumOptions) -> Result<Vec<Complex64>> {
    let (x, wt) = gl16();
    let mut nodes = Vec::new();
    for (a, b) in w.window.pieces() {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::param("window", "needs a bounded support"));
        }
        let per = if opts.panels_per_unit > 0.0 { opts.panels_per_unit } else { 4.0 / w.window.scale() };
        let np = ((b - a) * per).ceil().max(4.0) as usize;
        for i in 0..np {
            let (p0, p1) = (a + (b - a) * i as f64 / np as f64, a + (b - a) * (i + 1) as f64 / np as f64);
            let (m, h) = (0.5 * (p0 + p1), 0.5 * (p1 - p0));
            for (xi, wi) in x.iter().zip(wt) {
                let t = m + h * xi;
                let v = w.window.eval(t);
                if v != Complex64::new(0.0, 0.0) {
                    nodes.push((t, v * (wi * h)));
                }
            }
        }
    }
    let m_at = |k: u32| -> Complex64 {
        let xi = w.lambda - (2 * k + 1) as f64;
        nodes.iter().map(|&(t, v)| v * Complex64::new(0.0, t * xi).exp()).sum()
    };
    let mut out = Vec::new();
    let mut peak = 0.0f64;
    let mut quiet = 0usize;
    let k_lambda = ((w.lambda - 1.0) / 2.0).max(0.0) as u32;
    for k in 0..=opts.max_index {
        let v = m_at(k);
        peak = peak.max(v.norm());
        out.push(v);
        if k > k_lambda && v.norm() <= opts.cutoff * peak {
            quiet += 1;
            if quiet >= opts.tail {
                return Ok(out);
            }
        } else if k > k_lambda {
            quiet = 0;
        }
    }
    Err(Error::NonConvergence { residual: out.last().map(|v| v.norm() / peak.max(1e-300)).unwrap_or(1.0), tolerance: opts.cutoff })
}

/// `[η]^λ` on a grid through `(1/c) Σ_μ m(μ) Π_μ(λ^{1/2}z, λ^{1/2}z′)`.
///
/// Unlike the time-domain quadrature this needs no regularisation when the
/// window meets `πℤ`: the singular factor is absorbed by the eigen-expansion.
pub fn spectral_sum_table(w: &WindowedSymbol, grid: Grid2, opts: &SpectralSumOptions) -> Result<TwistedConvolution> {
    let m = spectral_multiplier(w, opts)?;
    let kmax = m.len() as u32 - 1;
    // Π_μ radial part (2π)^{−1} L_k(λs/2) e^{−λs/4}; 1/c = 4πi.
    let pref = Complex64::new(0.0, 4.0 * PI) / (2.0 * PI);
    TwistedConvolution::build(grid, w.lambda, |s| {
        let lf = crate::spectral::laguerre_functions(kmax, 0.5 * w.lambda * s);
        Ok(pref * lf.iter().zip(&m).map(|(l, v)| v * *l).sum::<Complex64>())
    })
}

/// `∫ψ_ℓ^δ(s) e^{−isτ} ds` at complex frequency `τ`.
pub fn hat_psi_complex(ell: u32, delta: f64, tau: Complex64) -> Complex64 {
    let scale = 2f64.powi(ell as i32);
    let (x, w) = gl16();
    let panel = |a: f64, b: f64, f: &dyn Fn(f64) -> f64, acc: &mut Complex64| {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(w) {
            let u = m + h * xi;
            let v = f(u);
            if v != 0.0 {
                *acc += (-Complex64::i() * tau * (scale * u)).exp() * (v * wi * h);
            }
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    // Substituting s = 2^ℓ u; the shape is u ↦ ψ_ℓ^δ(2^ℓ u) on (0, 1).
    let omega = scale * tau.norm();
    let npan = 48 + (omega * 0.75 / 2.0).ceil() as usize;
    if ell == 0 {
        // u^δ on (0, 1/4] with dyadic grading toward the origin.
        let mut b = 0.25;
        for _ in 0..60 {
            let a = 0.5 * b;
            panel(a, b, &|u| u.powf(delta), &mut acc);
            b = a;
        }
        let f = |u: f64| cutoffs::psi_ell_delta_unchecked(0, delta, u);
        for i in 0..npan {
            let a = 0.25 + 0.75 * i as f64 / npan as f64;
            let b = 0.25 + 0.75 * (i + 1) as f64 / npan as f64;
            panel(a, b, &f, &mut acc);
        }
    } else {
        let f = |u: f64| u.powf(delta) * cutoffs::psi(u);
        for i in 0..npan {
            let a = 0.25 + 0.75 * i as f64 / npan as f64;
            let b = 0.25 + 0.75 * (i + 1) as f64 / npan as f64;
            panel(a, b, &f, &mut acc);
        }
    }
    acc * scale
}

/// `ψ̂_ℓ^δ(t) = ∫ψ_ℓ^δ(s) e^{−ist} ds`.
pub fn hat_psi_ell_delta(ell: u32, delta: f64, t: f64) -> Complex64 {
    hat_psi_complex(ell, delta, Complex64::new(t, 0.0))
}

/// Largest `|ψ̂_ℓ^δ(t)| (1 + 2^ℓ|t|)^M / 2^ℓ` over `ts`.
pub fn hat_psi_decay_constant(ell: u32, delta: f64, m: i32, ts: &[f64]) -> f64 {
    let sc = 2f64.powi(ell as i32);
    ts.iter()
        .map(|&t| hat_psi_ell_delta(ell, delta, t).norm() * (1.0 + sc * t.abs()).powi(m) / sc)
        .fold(0.0, f64::max)
}

/// `[ψ̂_ℓ^δ]^λ(z, z′)` over the whole time axis, along the shifted contour
/// `t − iε` (exact for every `ε > 0` since the integrand is analytic below
/// the axis); the axis is truncated to `|t| ≤ reach`.
pub fn hat_psi_bracket_contour(ell: u32, delta: f64, lambda: f64, eps: f64, reach: f64, z: Point2, zp: Point2) -> Result<Complex64> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", "contour shift must be positive"));
    }
    let s = z.dist_sq(zp);
    let cr = cross(z, zp);
    let k_max = (reach / PI).ceil() as i64;
    let mut breaks: Vec<f64> = Vec::new();
    for k in -k_max..=k_max {
        let c = k as f64 * PI;
        for d in [-0.5 * PI, -4.0 * eps, -eps, 0.0, eps, 4.0 * eps] {
            let b = c + d;
            if b.abs() <= reach {
                breaks.push(b);
            }
        }
    }
    breaks.push(-reach);
    breaks.push(reach);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let r = adaptive_gk(
        |t| {
            let tau = Complex64::new(t, -eps);
            let hp = hat_psi_complex(ell, delta, tau);
            let (sn, cs) = (tau.sin(), tau.cos());
            hp / sn * (Complex64::i() * lambda * (tau + cs / sn * (0.25 * s) + cr)).exp()
        },
        &breaks,
        1e-12,
        1e-11,
        200_000,
    )?;
    Ok(r.value)
}

/// Which partition piece of a kernel to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "piece", rename_all = "kebab-case")]
pub enum Piece {
    /// `[η]^λ χ_j`.
    J { j: u32 },
    /// `[η φ̃_l(π/2 − ·)]^λ χ_j`.
    JL { j: u32, l: i32 },
    /// `[η]^λ χ°` with `χ°` the tail beyond `j_max`.
    Inner { j_max: u32 },
    /// `[η]^λ χ^e`.
    Exterior { j_max: u32 },
}

/// Smallest `l` whose sphere window can meet `(0, π)`.
pub const L_MIN: i32 = -2;
/// Largest `l` used when re-summing the sphere split.
pub const L_MAX: i32 = 44;

pub fn decomposed_kernel(w: &WindowedSymbol, piece: Piece, z: Point2, zp: Point2, opts: &QuadratureOptions) -> Result<Complex64> {
    let split = |j_max| cutoffs::chi_split(j_max, z, zp);
    let (cut, sym) = match piece {
        Piece::J { j } => (cutoffs::chi_j(j, z, zp), None),
        Piece::JL { j, l } => {
            if !(L_MIN..=L_MAX + 16).contains(&l) {
                return Err(Error::param("l", format!("outside [{L_MIN}, {}]", L_MAX + 16)));
            }
            let win = product(vec![w.window.clone(), Arc::new(SphereWindow { l })]);
            (cutoffs::chi_j(j, z, zp), Some(w.with_window(win)))
        }
        Piece::Inner { j_max } => (split(j_max).inner, None),
        Piece::Exterior { j_max } => (split(j_max).exterior, None),
    };
    if cut == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sym = sym.unwrap_or_else(|| w.clone());
    Ok(bracket_kernel_with(&sym, z, zp, opts)?.value * cut)
}

/// Kernel envelopes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelEnvelope {
    /// `b_l = 2^{−l}(1 + λ2^{−l} max(2^{−j}, 2^{−2l}))^{−N}` for `[η₁φ̃_l(π/2−·)]_j^λ`.
    Bl { j: u32, l: i32, n: i32 },
    /// `2^{ℓ−j}(1 + λ2^j|z−z′|²)^{−N}` for `[η₀ψ̂_ℓ^δ(·−nπ)φ̃_j]^λ`.
    Kj { ell: u32, delta: f64, j: i32, shift: i32, n: i32 },
    /// `(1 + λ(|z−z′|² − 4))^{−N}` for `[η₁]^λ` outside the sphere.
    Exterior { n: i32 },
}

impl KernelEnvelope {
    pub fn value(&self, lambda: f64, z: Point2, zp: Point2) -> f64 {
        match *self {
            KernelEnvelope::Bl { j, l, n } => {
                let m = 2f64.powi(-(j as i32)).max(2f64.powi(-2 * l));
                2f64.powi(-l) * (1.0 + lambda * 2f64.powi(-l) * m).powi(-n)
            }
            KernelEnvelope::Kj { ell, j, n, .. } => {
                2f64.powi(ell as i32 - j) * (1.0 + lambda * 2f64.powi(j) * z.dist_sq(zp)).powi(-n)
            }
            KernelEnvelope::Exterior { n } => (1.0 + lambda * (z.dist_sq(zp) - 4.0)).powi(-n),
        }
    }

    /// The kernel this envelope is claimed to dominate.
    pub fn kernel(&self, lambda: f64, z: Point2, zp: Point2) -> Result<Complex64> {
        let opts = QuadratureOptions::default();
        match *self {
            KernelEnvelope::Bl { j, l, .. } => {
                let w = WindowedSymbol::new(Arc::new(Eta1Window), lambda);
                decomposed_kernel(&w, Piece::JL { j, l }, z, zp, &opts)
            }
            KernelEnvelope::Kj { ell, delta, j, shift, .. } => {
                let win = product(vec![
                    Arc::new(Eta0Window),
                    Arc::new(HatPsiWindow { ell, delta, shift: shift as f64 * PI, reach: f64::INFINITY }),
                    Arc::new(TimeShellWindow { j }),
                ]);
                Ok(bracket_kernel_with(&WindowedSymbol::new(win, lambda), z, zp, &opts)?.value)
            }
            KernelEnvelope::Exterior { .. } => {
                let w = WindowedSymbol::new(Arc::new(Eta1Window), lambda);
                Ok(bracket_kernel_with(&w, z, zp, &opts)?.value)
            }
        }
    }
}

/// Sup over samples of `|kernel|/envelope` for each `λ`; passes when the
/// constant does not grow by more than a factor 4 from one `λ` to the next.
pub fn envelope_check(family: KernelEnvelope, samples: &[(Point2, Point2)], lambdas: &[f64]) -> Result<ScanReport> {
    let mut rep = ScanReport::new("envelope-check", "lambda", 0)
        .param("family", family)
        .param("sample_count", samples.len());
    for &lambda in lambdas {
        let ratios = samples
            .par_iter()
            .map(|&(z, zp)| Ok(family.kernel(lambda, z, zp)?.norm() / family.value(lambda, z, zp)))
            .collect::<Result<Vec<f64>>>()?;
        rep.push(lambda, ratios.into_iter().fold(0.0, f64::max));
    }
    // The envelope constant is a supremum over λ, so each doubling is
    // compared with the largest ratio seen so far.
    let mut running = 0.0f64;
    let mut growth = 1.0f64;
    for &y in &rep.ys {
        if running > 0.0 {
            growth = growth.max(y / running);
        }
        running = running.max(y);
    }
    let spread = {
        let mx = rep.ys.iter().cloned().fold(0.0, f64::max);
        let mn = rep.ys.iter().cloned().fold(f64::INFINITY, f64::min);
        if mn > 0.0 { mx / mn } else { f64::INFINITY }
    };
    rep.diag("max_growth", growth);
    rep.diag("max_over_min", spread);
    // An identically vanishing kernel says nothing about the envelope.
    let vacuous = rep.ys.iter().all(|&y| y == 0.0);
    if vacuous {
        rep.notes.push("kernel vanishes at every sample".into());
    }
    rep.verdict = Verdict::gating(growth <= 4.0 && !vacuous);
    Ok(rep)
}

/// Tile index of a point for the side-1/2 tiling.
pub fn tile_of(z: Point2) -> (i64, i64) {
    ((z.x / 0.5).floor() as i64, (z.y / 0.5).floor() as i64)
}

/// `Q ∼ Q′` iff the closed tiles touch.
pub fn tiles_adjacent(a: (i64, i64), b: (i64, i64)) -> bool {
    (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1
}

/// Near (`Q ∼ Q′`) and far parts of `[η₀ψ̂_ℓ^δ(· − nπ)]^λ` on a grid.
pub fn tiling_split(lambda: f64, ell: u32, delta: f64, n: i32, grid: Grid2, cap_bytes: usize) -> Result<(DiscreteOperator, DiscreteOperator)> {
    let win = product(vec![
        Arc::new(Eta0Window),
        Arc::new(HatPsiWindow { ell, delta, shift: n as f64 * PI, reach: f64::INFINITY }),
    ]);
    let sym = WindowedSymbol { window: win, lambda, indices: SymbolIndices { ell: Some(ell), n: Some(n), ..Default::default() } };
    let full = DiscreteOperator::from_twisted(&spectral_sum_table(&sym, grid, &SpectralSumOptions::default())?, cap_bytes)?;
    let tiles: Vec<(i64, i64)> = grid.points().into_iter().map(tile_of).collect();
    let near = full.mask(|a, b| tiles_adjacent(tiles[a], tiles[b]));
    let far = full.mask(|a, b| !tiles_adjacent(tiles[a], tiles[b]));
    Ok((near, far))
}
