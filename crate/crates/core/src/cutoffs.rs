//! Bump functions and partitions of unity.
//!
//! Every partition here is built by normalising a positive seed against the
//! sum of its translates or dilates, so the partition identities hold to
//! rounding error by construction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Seed bump `ζ(t) = exp(−1/((t−1/4)(1−t)))` on `(1/4, 1)`.
pub fn zeta(t: f64) -> f64 {
    if t <= 0.25 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / ((t - 0.25) * (1.0 - t))).exp()
    }
}

/// Dyadic base bump `ψ = ζ / Σ_k ζ(2^k ·)`, supported in `[1/4, 1]`.
pub fn psi(t: f64) -> f64 {
    let z = zeta(t);
    if z == 0.0 {
        return 0.0;
    }
    // On (1/4, 1) only the dilates k = −1, 0, 1 can be nonzero.
    z / (zeta(0.5 * t) + z + zeta(2.0 * t))
}

/// `Σ_{k≥0} ψ(2^k t)`; equals 1 on `(0, 1/4]` and 0 on `[1, ∞)`.
fn psi_low_sum(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    if t <= 0.25 {
        return 1.0;
    }
    // t ∈ (1/4, 1): the k = 0 and k = 1 terms.
    psi(t) + psi(2.0 * t)
}

/// Dyadic piece `ψ_ℓ^δ`.
///
/// For `ℓ ≥ 1` this is `(2^{−ℓ}t)^δ ψ(2^{−ℓ}t)`; for `ℓ = 0` it is
/// `t_+^δ Σ_{k≥0} ψ(2^k t)`, so that `Σ_{1≤2^ℓ≤4λ} 2^{δℓ}ψ_ℓ^δ(t) = t_+^δ`
/// on `(0, λ]`.
pub fn psi_ell_delta(ell: u32, delta: f64, t: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::param("delta", format!("must be >= 0, got {delta}")));
    }
    Ok(psi_ell_delta_unchecked(ell, delta, t))
}

pub(crate) fn psi_ell_delta_unchecked(ell: u32, delta: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if ell == 0 {
        let s = psi_low_sum(t);
        if s == 0.0 {
            0.0
        } else {
            t.powf(delta) * s
        }
    } else {
        let u = t * (0.5f64).powi(ell as i32);
        let p = psi(u);
        if p == 0.0 {
            0.0
        } else {
            u.powf(delta) * p
        }
    }
}

/// Largest `L` with `2^L ≤ 4λ`, i.e. the top index of the reconstruction sum.
pub fn reconstruction_top(lambda: f64) -> u32 {
    (4.0 * lambda).log2().floor().max(0.0) as u32
}

/// `Σ_{1≤2^ℓ≤4λ} 2^{δℓ} ψ_ℓ^δ(t)`.
pub fn psi_reconstruction(lambda: f64, delta: f64, t: f64) -> f64 {
    (0..=reconstruction_top(lambda))
        .map(|l| 2f64.powf(delta * l as f64) * psi_ell_delta_unchecked(l, delta, t))
        .sum()
}

/// `φ_j(t) = ψ(2^j t)`.
pub fn phi(j: i32, t: f64) -> f64 {
    psi(t * 2f64.powi(j))
}

/// `φ̃_j(t) = ψ(2^j |t|)`.
pub fn phi_tilde(j: i32, t: f64) -> f64 {
    psi(t.abs() * 2f64.powi(j))
}

/// Smooth transition: 0 on `(−∞, 0]`, 1 on `[1, ∞)`, via the `e^{−1/x}` blend.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Inner plateau of `η₀`.
pub const ETA0_PLATEAU: f64 = 1.0 / 64.0;
/// Outer edge of `supp η₀`, strictly inside `(−2^{−5}, 2^{−5})`.
pub const ETA0_EDGE: f64 = 7.0 / 256.0;

/// `η₀`: even, equal to 1 on `[−2^{−6}, 2^{−6}]`, supported in `(−2^{−5}, 2^{−5})`.
pub fn eta0(t: f64) -> f64 {
    smooth_step((ETA0_EDGE - t.abs()) / (ETA0_EDGE - ETA0_PLATEAU))
}

/// `η₁ := 1 − η₀ − η₀(· − π)` on `[0, π]`, zero elsewhere.
pub fn eta1(t: f64) -> f64 {
    if !(0.0..=PI).contains(&t) {
        return 0.0;
    }
    let v = 1.0 - eta0(t) - eta0(t - PI);
    if v <= 0.0 {
        0.0
    } else {
        v
    }
}

/// Returns `(η₀(t), η₁(t))`.
pub fn eta_pair(t: f64) -> (f64, f64) {
    (eta0(t), eta1(t))
}

/// Interval bump `θ_k(x) = exp(−k x²/(1−x²))` on `(−1, 1)`; `k = 1` is the
/// standard mollifier up to normalisation, larger `k` sharpens the core.
pub fn theta_bump(sharpness: f64, x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let x2 = x * x;
        (-sharpness * x2 / (1.0 - x2)).exp()
    }
}

/// Normalised interval bump whose integer translates sum to 1:
/// `θ(x) = θ_k(x) / Σ_n θ_k(x − n)`; supported in `(−1, 1)` with `θ(0) = 1`.
pub fn theta_partition(sharpness: f64, x: f64) -> f64 {
    let b = theta_bump(sharpness, x);
    if b == 0.0 {
        return 0.0;
    }
    b / (theta_bump(sharpness, x + 1.0) + b + theta_bump(sharpness, x - 1.0))
}

/// `θ` with the default sharpness.
pub fn theta(x: f64) -> f64 {
    theta_partition(1.0, x)
}

/// `ρ`: 1 on `[−1, 1]`, supported in `(−2, 2)`.
pub fn rho(t: f64) -> f64 {
    smooth_step((1.9 - t.abs()) / 0.9)
}

/// `η_ρ(t) = ψ(|t|/ρ)`, supported in `[ρ/4, ρ] ∪ [−ρ, −ρ/4]` with
/// `|η_ρ^{(m)}| ≲ ρ^{−m}`.
pub fn eta_rho(rho: f64, t: f64) -> f64 {
    psi(t.abs() / rho)
}

/// Piece indices `0..=j₀` with `j₀ = ⌊log₂ λ^{2/3}⌋`.
pub fn j0(lambda: f64) -> u32 {
    ((2.0 / 3.0) * lambda.log2()).floor().max(0.0) as u32
}

/// Values of the sphere-distance partition at `(z, z′)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSplit {
    /// `χ_j` for `0 ≤ j ≤ j_max`.
    pub chi: Vec<f64>,
    /// `χ°`, the tail `Σ_{j>j_max}` concentrated near `|z−z′| = 2`.
    pub inner: f64,
    /// `χ^e`, the complement.
    pub exterior: f64,
}

impl ChiSplit {
    pub fn total(&self) -> f64 {
        self.chi.iter().sum::<f64>() + self.inner + self.exterior
    }
}

/// `χ_j(z, z′) = ψ(2^{j−2}(2 − |z−z′|))`.
pub fn chi_j(j: u32, z: Point2, zp: Point2) -> f64 {
    phi(j as i32 - 2, 2.0 - z.dist(zp))
}

/// Splits 1 into `χ_j` (0 ≤ j ≤ j_max), `χ°` and `χ^e`.
pub fn chi_split(j_max: u32, z: Point2, zp: Point2) -> ChiSplit {
    let d = 2.0 - z.dist(zp);
    let chi: Vec<f64> = (0..=j_max).map(|j| phi(j as i32 - 2, d)).collect();
    let inner = if d == 0.0 {
        0.0
    } else {
        // Nonzero terms need 2^{j−2}|d| ∈ (1/4, 1).
        let hi = (2.0 - d.abs().log2()).ceil() as i64;
        let lo = ((j_max as i64) + 1).max(hi - 3);
        (lo..=hi).map(|j| phi_tilde(j as i32 - 2, d)).sum()
    };
    let rest = 1.0 - (chi.iter().sum::<f64>() + inner);
    ChiSplit { chi, inner, exterior: if rest < 0.0 { 0.0 } else { rest } }
}

/// The χ̃ cutoff of the stationary-phase analysis, with the parameters that
/// define its translate family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiTilde {
    pub a: f64,
    pub j: u32,
    pub eps0: f64,
    pub c: f64,
}

impl ChiTilde {
    /// Validates `2 − a ∈ (2^{−2−j}, 2^{−j})`.
    pub fn new(a: f64, j: u32, eps0: f64, c: f64) -> Result<Self> {
        let lo = 2f64.powi(-2 - j as i32);
        let hi = 2f64.powi(-(j as i32));
        if !(2.0 - a > lo && 2.0 - a < hi) {
            return Err(Error::param("a", format!("2 - a = {} outside ({lo}, {hi})", 2.0 - a)));
        }
        if !(eps0 > 0.0 && c > 0.0) {
            return Err(Error::param("eps0/c", "must be positive"));
        }
        Ok(ChiTilde { a, j, eps0, c })
    }

    /// Translate spacing `cε₀2^{−j}`.
    pub fn width(&self) -> f64 {
        self.c * self.eps0 * 2f64.powi(-(self.j as i32))
    }

    /// `ψ(2^j(2 − r))·θ((a − r)/(cε₀2^{−j}))` as a function of `r = |z − z′|`.
    pub fn eval_r(&self, r: f64) -> f64 {
        chi_tilde_raw(self.a, self.j, self.width(), r)
    }

    pub fn eval(&self, z: Point2, zp: Point2) -> f64 {
        self.eval_r(z.dist(zp))
    }

    /// The centres `a + m·cε₀2^{−j}` of every translate meeting the support of
    /// `ψ(2^j(2 − ·))`; their values sum to that factor.
    pub fn translate_family(j: u32, eps0: f64, c: f64, anchor: f64) -> Vec<f64> {
        let w = c * eps0 * 2f64.powi(-(j as i32));
        let r_lo = 2.0 - 2f64.powi(-(j as i32));
        let r_hi = 2.0 - 2f64.powi(-2 - j as i32);
        let m_lo = ((r_lo - w - anchor) / w).floor() as i64;
        let m_hi = ((r_hi + w - anchor) / w).ceil() as i64;
        (m_lo..=m_hi).map(|m| anchor + m as f64 * w).collect()
    }
}

pub(crate) fn chi_tilde_raw(a: f64, j: u32, width: f64, r: f64) -> f64 {
    let p = psi(2f64.powi(j as i32) * (2.0 - r));
    if p == 0.0 {
        return 0.0;
    }
    p * theta((a - r) / width)
}

/// Checked `χ̃` evaluation.
pub fn chi_tilde(a: f64, j: u32, eps0: f64, c: f64, z: Point2, zp: Point2) -> Result<f64> {
    Ok(ChiTilde::new(a, j, eps0, c)?.eval(z, zp))
}

/// The separated direction set `Λ_j` and its cap partition `ϱ̃_j^ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularPartition {
    pub j: u32,
    pub eps0: f64,
    /// Number of directions `|Λ_j|`.
    pub count: usize,
}

impl AngularPartition {
    pub fn new(j: u32, eps0: f64) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 < 1.0) {
            return Err(Error::param("eps0", "must lie in (0, 1)"));
        }
        let sep = eps0 * 2f64.powf(-(j as f64) / 2.0);
        // Angular spacing whose chord is at least `sep`.
        let min_angle = 2.0 * (sep / 2.0).asin();
        let count = ((2.0 * PI / min_angle).floor() as usize).max(3);
        Ok(AngularPartition { j, eps0, count })
    }

    /// Cap radius `ε₀2^{1−j/2}`.
    pub fn cap_radius(&self) -> f64 {
        self.eps0 * 2f64.powf(1.0 - self.j as f64 / 2.0)
    }

    /// Angular spacing between consecutive directions.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.count as f64
    }

    /// The `m`-th direction as an angle.
    pub fn direction_angle(&self, m: usize) -> f64 {
        self.spacing() * m as f64
    }

    pub fn direction(&self, m: usize) -> Point2 {
        Point2::from_polar(1.0, self.direction_angle(m))
    }

    /// `ϱ̃_j^{ν_m}` evaluated at the direction with angle `omega`.
    pub fn eval(&self, m: usize, omega: f64) -> f64 {
        // Offsets are taken in units of the spacing so neighbouring caps see
        // arguments differing by exactly 1.
        let n = self.count as f64;
        let u = omega.rem_euclid(2.0 * PI) / self.spacing();
        let d = u - m as f64;
        theta(d - n * (d / n).round())
    }

    /// `ϱ̃_j^ν(ω)` for an arbitrary unit vector `ν`, which must belong to `Λ_j`.
    pub fn eval_vec(&self, nu: Point2, omega: Point2) -> Result<f64> {
        let m = self.index_of(nu)?;
        Ok(self.eval(m, omega.angle()))
    }

    pub fn index_of(&self, nu: Point2) -> Result<usize> {
        let x = nu.angle().rem_euclid(2.0 * PI) / self.spacing();
        let m = x.round();
        if (x - m).abs() > 1e-9 || (nu.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::param("nu", "not a direction of the separated set"));
        }
        Ok(m as usize % self.count)
    }
}

/// `ϱ̃_j^ν(ω)` for `ν ∈ Λ_j`.
pub fn angular_bump(nu: Point2, j: u32, eps0: f64, omega: Point2) -> Result<f64> {
    AngularPartition::new(j, eps0)?.eval_vec(nu, omega)
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Lattice bump `ϑ(x, y) = θ(x)θ(y)` whose integer translates sum to 1.
pub fn lattice_bump(x: f64, y: f64) -> f64 {
    theta(x) * theta(y)
}

/// `ϑ_𝐤(z) = ϑ(ε₀^{−1}2^{j+3}z₁ − k₁, ε₀^{−1}2^{(j+3)/2}z₂ − k₂)`.
pub fn lattice_piece(j: u32, eps0: f64, k: (i64, i64), z: Point2) -> f64 {
    let sx = 2f64.powi(j as i32 + 3) / eps0;
    let sy = 2f64.powf((j as f64 + 3.0) / 2.0) / eps0;
    lattice_bump(sx * z.x - k.0 as f64, sy * z.y - k.1 as f64)
}

/// Interval bump description used for time windows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub kind: BumpKind,
    pub center: f64,
    pub half_width: f64,
    pub sharpness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpKind {
    Seed,
    DyadicPiece,
    Interval,
    Angular,
}

impl BumpSpec {
    /// `θ_k((t − center)/half_width)`.
    pub fn interval(center: f64, half_width: f64, sharpness: f64) -> Self {
        BumpSpec { kind: BumpKind::Interval, center, half_width, sharpness }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn eval(&self, t: f64) -> f64 {
        theta_bump(self.sharpness, (t - self.center) / self.half_width)
    }
}

/// Serializable description of every cutoff construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CutoffFamily {
    Psi,
    PsiEllDelta { ell: u32, delta: f64 },
    Phi { j: i32 },
    PhiTilde { j: i32 },
    Eta0,
    Eta1,
    Theta,
    Rho,
    EtaRho { rho: f64 },
    Interval(BumpSpec),
    ChiJ { j: u32 },
    ChiTilde(ChiTilde),
    Angular { j: u32, eps0: f64, index: usize },
}

impl CutoffFamily {
    /// Evaluates a one-variable family at `t`.
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        Ok(match self {
            CutoffFamily::Psi => psi(t),
            CutoffFamily::PsiEllDelta { ell, delta } => psi_ell_delta(*ell, *delta, t)?,
            CutoffFamily::Phi { j } => phi(*j, t),
            CutoffFamily::PhiTilde { j } => phi_tilde(*j, t),
            CutoffFamily::Eta0 => eta0(t),
            CutoffFamily::Eta1 => eta1(t),
            CutoffFamily::Theta => theta(t),
            CutoffFamily::Rho => rho(t),
            CutoffFamily::EtaRho { rho } => eta_rho(*rho, t),
            CutoffFamily::Interval(b) => b.eval(t),
            CutoffFamily::ChiJ { .. } | CutoffFamily::ChiTilde(_) => {
                return Err(Error::param("family", "two-point cutoff; use eval_pair"))
            }
            CutoffFamily::Angular { j, eps0, index } => AngularPartition::new(*j, *eps0)?.eval(*index, t),
        })
    }

    /// Evaluates a two-point family at `(z, z′)`.
    pub fn eval_pair(&self, z: Point2, zp: Point2) -> Result<f64> {
        match self {
            CutoffFamily::ChiJ { j } => Ok(chi_j(*j, z, zp)),
            CutoffFamily::ChiTilde(c) => Ok(c.eval(z, zp)),
            _ => Err(Error::param("family", "one-variable cutoff; use eval_scalar")),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
