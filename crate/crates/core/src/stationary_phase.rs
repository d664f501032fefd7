//! Stationary points of the phase, the leading stationary-phase term, and
//! the scaled geometry near the sphere `|z − z′| = 2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoffs::ChiTilde;
use crate::error::{Error, Result};
use crate::geometry::{cross, Point2};
use crate::oscillatory_kernels::WindowedSymbol;
use crate::report::{ScanReport, Verdict};

/// `S_c = arcsin(|z − z′|/2) ∈ (0, π/2]`.
pub fn stationary_point(z: Point2, zp: Point2) -> Result<f64> {
    let r = z.dist(zp);
    if r > 2.0 || r == 0.0 {
        return Err(Error::NoStationaryPoint { r });
    }
    Ok((0.5 * r).asin())
}

/// `p = S_c + cos S_c sin S_c`.
fn p_of(sc: f64) -> f64 {
    sc + sc.cos() * sc.sin()
}

/// `Φ(z, z′) = S_c + cos S_c sin S_c + 𝐒(z, z′)`.
pub fn phi_value(z: Point2, zp: Point2) -> Result<f64> {
    Ok(p_of(stationary_point(z, zp)?) + cross(z, zp))
}

/// `2^{−j/4} χ̃ η(S_c) (tan S_c)^{1/2}`.
pub fn amplitude_a(j: u32, chi: &ChiTilde, eta: &dyn Fn(f64) -> f64, z: Point2, zp: Point2) -> Result<f64> {
    let sc = stationary_point(z, zp)?;
    let c = sc.cos();
    if z.dist(zp) >= 2.0 || c <= 0.0 {
        return Err(Error::DegenerateAmplitude { r: z.dist(zp) });
    }
    Ok(2f64.powf(-(j as f64) / 4.0) * chi.eval(z, zp) * eta(sc) * (sc.sin() / c).sqrt())
}

/// Stationary-point data of the rescaled phase `𝒫̃ = 2^{3j/2}𝒫(S_c + 2^{−j/2}t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryData {
    pub s_c: f64,
    pub phi: f64,
    /// `∂_t²𝒫̃(0) = 2^{1+j/2} cos S_c / sin S_c`.
    pub second_derivative: f64,
}

impl StationaryData {
    pub fn new(j: u32, z: Point2, zp: Point2) -> Result<Self> {
        let s_c = stationary_point(z, zp)?;
        Ok(StationaryData {
            s_c,
            phi: p_of(s_c) + cross(z, zp),
            second_derivative: 2f64.powf(1.0 + j as f64 / 2.0) * s_c.cos() / s_c.sin(),
        })
    }
}

/// Leading stationary-phase term of `([η]^λ χ̃)(z, z′)`.
///
/// The window of `w` is multiplied by `1/sin t` inside the kernel, so the
/// amplitude at the critical point is `η(S_c)/sin S_c`; the unimodular factor
/// `e^{iπ/4}` is that of a nondegenerate minimum.
pub fn leading_term(lambda: f64, j: u32, w: &WindowedSymbol, chi: &ChiTilde, z: Point2, zp: Point2) -> Result<Complex64> {
    if !(j as f64 <= (2.0 / 3.0) * lambda.log2() + 1e-9) {
        return Err(Error::OutOfRegime(format!("2^j = {} exceeds lambda^(2/3)", 2f64.powi(j as i32))));
    }
    let d = StationaryData::new(j, z, zp)?;
    if !(d.second_derivative > 0.0) {
        return Err(Error::DegenerateAmplitude { r: z.dist(zp) });
    }
    let amp = w.window.eval(d.s_c) / d.s_c.sin() * chi.eval(z, zp);
    let scale = lambda.powf(-0.5) * 2f64.powf(j as f64 / 4.0) / (d.second_derivative / (2.0 * PI)).sqrt();
    Ok(amp * scale * Complex64::new(0.0, lambda * d.phi + FRAC_PI_4).exp())
}

/// `ℰ(x)` with `(arccos(1 − x/2))² = x(1 + xℰ(x))`; `ℰ(0) = 1/12`.
pub fn e_residual(x: f64) -> f64 {
    if x.abs() <= 0.5 {
        // (arccos(1 − x/2))² = Σ_{n≥1} 2xⁿ/(n² C(2n, n)).
        let mut sum = 0.0;
        let mut binom = 6.0; // C(4, 2)
        let mut xp = 1.0;
        for n in 2..60u32 {
            let term = 2.0 * xp / ((n * n) as f64 * binom);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            xp *= x;
            let m = (n + 1) as f64;
            binom *= (2.0 * m - 1.0) * (2.0 * m) / (m * m);
        }
        sum
    } else {
        let s = (1.0 - 0.5 * x).acos();
        (s * s / x - 1.0) / x
    }
}

/// `g(x) = 1 − cos √x`.
pub fn g(x: f64) -> f64 {
    2.0 * (0.5 * x.sqrt()).sin().powi(2)
}

/// `g⁻¹(y) = (arccos(1 − y))² = 2y(1 + 2yℰ(2y))`.
pub fn g_inverse(y: f64) -> f64 {
    2.0 * y * (1.0 + 2.0 * y * e_residual(2.0 * y))
}

/// `ϰ(s) = (s / sin s)^{1/2}`.
pub fn kappa(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        1.0 + s * s / 12.0
    } else {
        (s / s.sin()).sqrt()
    }
}

/// `x − sin x` without cancellation.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = x * x * x / 6.0;
        let mut sum = 0.0f64;
        let mut k = 1.0;
        while term.abs() > 1e-19 * sum.abs().max(1e-300) {
            sum += term;
            term *= -x * x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            k += 1.0;
        }
        sum
    } else {
        x - x.sin()
    }
}

/// Box `U = {|z₁ + b|, |z₁′|, |z₂|, |z₂′| < ε₀}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledBox {
    pub b: f64,
    pub eps0: f64,
}

impl ScaledBox {
    pub fn new(b: f64, eps0: f64) -> Result<Self> {
        if !(b > 0.25 && b < 1.0) {
            return Err(Error::param("b", format!("must lie in (1/4, 1), got {b}")));
        }
        if !(eps0 > 0.0 && eps0 < 0.25) {
            return Err(Error::param("eps0", "must lie in (0, 1/4)"));
        }
        Ok(ScaledBox { b, eps0 })
    }

    pub fn contains(&self, z: Point2, zp: Point2) -> bool {
        (z.x + self.b).abs() < self.eps0 && zp.x.abs() < self.eps0 && z.y.abs() < self.eps0 && zp.y.abs() < self.eps0
    }

    /// `count` low-discrepancy pairs in the box.
    pub fn samples(&self, count: usize) -> Vec<(Point2, Point2)> {
        (1..=count)
            .map(|i| {
                let u = |base: u8| (2.0 * halton::number(base, i) - 1.0) * self.eps0 * (1.0 - 1e-9);
                (Point2::new(u(2) - self.b, u(3)), Point2::new(u(5), u(7)))
            })
            .collect()
    }
}

/// `L_j(z, z′) = (2^{−j}z₁ + 2, 2^{−j/2}z₂, 2^{−j}z₁′, 2^{−j/2}z₂′)`.
pub fn l_j(j: u32, z: Point2, zp: Point2) -> (Point2, Point2) {
    let (a, b) = (2f64.powi(-(j as i32)), 2f64.powf(-(j as f64) / 2.0));
    (Point2::new(a * z.x + 2.0, b * z.y), Point2::new(a * zp.x, b * zp.y))
}

/// `𝔓(z, z′) = z₁′ − z₁ − (z₂ − z₂′)²/(2(2 + 2^{−j}(z₁ − z₁′)))`.
pub fn frak_p(j: u32, z: Point2, zp: Point2) -> f64 {
    let d2 = z.y - zp.y;
    zp.x - z.x - d2 * d2 / (2.0 * (2.0 + 2f64.powi(-(j as i32)) * (z.x - zp.x)))
}

/// Scaled quantities at a point of `U`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledGeometry {
    pub j: u32,
    pub b: f64,
    pub z: Point2,
    pub zp: Point2,
    /// `t̃_j = 2^j(2 − |L_j separation|)`.
    pub t_tilde: f64,
    pub frak_p: f64,
    /// `S̃_j = 2^{j/2}(π/2 − S_c∘L_j)`.
    pub s_tilde: f64,
    /// `−(2/3)𝔓^{3/2} + 𝐒 + ℰ₃`.
    pub phi_star: f64,
    /// `t̃_j − 𝔓`, in the cancellation-free form `2^j b⁴/(2A(|d| + A)²)` with
    /// `L_j` separation `d = (A, b)`.
    pub e1: f64,
    /// `S̃_j − 𝔓^{1/2}`.
    pub e2: f64,
    /// `2^{3j/2}Φ∘L_j + (2/3)𝔓^{3/2} − 𝐒` with the constant `2^{3j/2}π/2` and the
    /// `z′`-only term `−2^j z₂′` removed.
    pub e3: f64,
    /// `2^{−j/4} cos^{−1/2}(S_c∘L_j)`, computed from `|L_j separation|` directly.
    pub b1: f64,
    /// `S̃_j^{−1/2} ϰ(2^{−j/2}S̃_j)`.
    pub b1_factored: f64,
}

pub fn scaled_geometry(j: u32, bx: &ScaledBox, z: Point2, zp: Point2) -> Result<ScaledGeometry> {
    if !bx.contains(z, zp) {
        return Err(Error::OutsideBox);
    }
    let sj = 2f64.powi(j as i32);
    let sqj = sj.sqrt();
    // Separation (2 + a, b) of L_j(z, z′).
    let a = (z.x - zp.x) / sj;
    let bb = (z.y - zp.y) / sqj;
    let d = ((2.0 + a) * (2.0 + a) + bb * bb).sqrt();
    let t = (-4.0 * a - a * a - bb * bb) / (2.0 + d);
    let t_tilde = sj * t;
    // 1 − cos S̃ = t̃/2.
    let s_small = 2.0 * (0.5 * t.sqrt()).asin();
    let s_tilde = sqj * s_small;
    let fp = frak_p(j, z, zp);
    if !(fp > 0.0) {
        return Err(Error::OutOfRegime(format!("frak P = {fp} is not positive")));
    }
    let f32 = fp.powf(1.5);
    let sc = cross(z, zp);
    // p∘L_j − π/2 = −(2S̃ − sin 2S̃)/2.
    let p_shift = -0.5 * x_minus_sin(2.0 * s_small);
    let e3 = sj * sqj * p_shift + (2.0 / 3.0) * f32;
    let cos_sc = 0.5 * (t * (2.0 + d)).sqrt();
    Ok(ScaledGeometry {
        j,
        b: bx.b,
        z,
        zp,
        t_tilde,
        frak_p: fp,
        s_tilde,
        phi_star: -(2.0 / 3.0) * f32 + sc + e3,
        e1: sj * bb.powi(4) / (2.0 * (2.0 + a) * (d + 2.0 + a).powi(2)),
        e2: s_tilde - fp.sqrt(),
        e3,
        b1: sj.powf(-0.25) / cos_sc.sqrt(),
        b1_factored: kappa(s_small) / s_tilde.sqrt(),
    })
}

/// `2^{3j/2}(π/2 − p∘L_j)/𝔓^{3/2}`, which tends to `2/3`.
pub fn two_thirds_ratio(j: u32, bx: &ScaledBox, z: Point2, zp: Point2) -> Result<f64> {
    let g = scaled_geometry(j, bx, z, zp)?;
    let s_small = g.s_tilde / 2f64.powf(j as f64 / 2.0);
    Ok(2f64.powf(1.5 * j as f64) * 0.5 * x_minus_sin(2.0 * s_small) / g.frak_p.powf(1.5))
}

/// Model phase `φ(z, s) = ¼(2(z₁′ − z₁) + 2z₁^{1/2}z₂, z₁^{1/2})·(−s, s²)`.
pub fn cs_model_phase(z: Point2, s: f64, z1p: f64) -> f64 {
    let r = z.x.sqrt();
    0.25 * (-(2.0 * (z1p - z.x) + 2.0 * r * z.y) * s + r * s * s)
}

/// Rows `∇_z∂_sφ`, `∇_z∂_s²φ` of the model phase in closed form.
pub fn cs_matrix_closed(z: Point2, s: f64) -> [[f64; 2]; 2] {
    let r = z.x.sqrt();
    [[0.25 * (2.0 - z.y / r + s / r), -0.5 * r], [0.25 / r, 0.0]]
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Finite-difference `[∇_z∂_sF; ∇_z∂_s²F]` with one Richardson step.
pub fn cs_matrix_fd(f: &dyn Fn(Point2, f64) -> f64, z: Point2, s: f64, hz: f64, hs: f64) -> [[f64; 2]; 2] {
    let raw = |hz: f64, hs: f64| {
        let ds = |p: Point2| (f(p, s + hs) - f(p, s - hs)) / (2.0 * hs);
        let dss = |p: Point2| (f(p, s + hs) - 2.0 * f(p, s) + f(p, s - hs)) / (hs * hs);
        let ex = Point2::new(hz, 0.0);
        let ey = Point2::new(0.0, hz);
        [
            [(ds(z + ex) - ds(z - ex)) / (2.0 * hz), (ds(z + ey) - ds(z - ey)) / (2.0 * hz)],
            [(dss(z + ex) - dss(z - ex)) / (2.0 * hz), (dss(z + ey) - dss(z - ey)) / (2.0 * hz)],
        ]
    };
    let (c, f2) = (raw(hz, hs), raw(0.5 * hz, 0.5 * hs));
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            out[i][k] = (4.0 * f2[i][k] - c[i][k]) / 3.0;
        }
    }
    out
}

/// Which route computes `det 𝓜(φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeRoute {
    Closed,
    FiniteDifference,
}

/// `det 𝓜(φ)` at `(z, s)`; equal to `1/8` identically.
pub fn cs_determinant(z: Point2, s: f64, z1p: f64, route: DerivativeRoute) -> Result<f64> {
    if !(z.x > 0.0) {
        return Err(Error::param("z1", "must be positive"));
    }
    Ok(match route {
        DerivativeRoute::Closed => det2(cs_matrix_closed(z, s)),
        DerivativeRoute::FiniteDifference => {
            let hz = 1e-3 * z.x.min(1.0);
            det2(cs_matrix_fd(&|p, s| cs_model_phase(p, s, z1p), z, s, hz, 0.05))
        }
    })
}

/// `Φ*_{j,z₁′}(z, s) = Φ_j^*(z₁′ − z₁, z₂, z₁′, s)`.
pub fn phi_star_slice(j: u32, bx: &ScaledBox, z1p: f64, z: Point2, s: f64) -> Result<f64> {
    Ok(scaled_geometry(j, bx, Point2::new(z1p - z.x, z.y), Point2::new(z1p, s))?.phi_star)
}

/// Scans `det 𝓜(Φ*_{j,z₁′})` over `count` points of the slice box; passes when
/// the smallest `|det|` is at least `1/16`.
pub fn cs_condition_full(j: u32, z1p: f64, bx: &ScaledBox, count: usize) -> Result<ScanReport> {
    if j < 6 {
        return Err(Error::OutOfRegime(format!("j = {j} below the scaled regime (j >= 6)")));
    }
    if z1p.abs() >= bx.eps0 {
        return Err(Error::OutsideBox);
    }
    let margin = 0.9 * bx.eps0;
    let hz = 1e-3f64;
    let hs = 1e-2f64;
    let mut rep = ScanReport::new("cs-condition", "sample", 0)
        .param("j", j)
        .param("z1_prime", z1p)
        .param("b", bx.b)
        .param("eps0", bx.eps0);
    let (mut min_abs, mut max_dev) = (f64::INFINITY, 0.0f64);
    for i in 1..=count {
        let u = |base: u8| (2.0 * halton::number(base, i) - 1.0) * (margin - 2.0 * hs.max(hz));
        // z₁′ − z₁ must stay within ε₀ of −b.
        let z = Point2::new(z1p + bx.b + u(2), u(3));
        let s = u(5);
        let f = |p: Point2, s: f64| phi_star_slice(j, bx, z1p, p, s).unwrap_or(f64::NAN);
        let det = det2(cs_matrix_fd(&f, z, s, hz, hs));
        if !det.is_finite() {
            return Err(Error::OutsideBox);
        }
        min_abs = min_abs.min(det.abs());
        max_dev = max_dev.max((det - 0.125).abs());
        rep.push(i as f64, det);
    }
    rep.diag("min_abs_det", min_abs);
    rep.diag("max_deviation", max_dev);
    rep.target = Some(0.125);
    rep.verdict = Verdict::gating(min_abs >= 1.0 / 16.0);
    Ok(rep)
}

/// Unscaled `∂_t²𝒫(S_c) = 2 cos S_c / sin S_c`, which degenerates at `|z − z′| = 2`.
pub fn unscaled_hessian(z: Point2, zp: Point2) -> Result<f64> {
    let sc = stationary_point(z, zp)?;
    Ok(2.0 * sc.cos() / sc.sin())
}

/// Distance of `S_c` from `π/2`.
pub fn polar_gap(z: Point2, zp: Point2) -> Result<f64> {
    Ok(FRAC_PI_2 - stationary_point(z, zp)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_series_matches_closed_form() {
        for x in [0.3, 0.5, 0.6] {
            let s = (1.0f64 - 0.5 * x).acos();
            let closed = (s * s / x - 1.0) / x;
            assert!((e_residual(x) - closed).abs() < 1e-12, "{x}");
        }
        assert!((e_residual(0.0) - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn g_round_trip() {
        for x in [1e-6, 1e-3, 0.1, 0.7] {
            assert!((g_inverse(g(x)) - x).abs() < 1e-13 * (1.0 + x));
        }
    }

    #[test]
    fn model_determinant() {
        let z = Point2::new(0.5, 0.03);
        assert!((cs_determinant(z, 0.02, 0.01, DerivativeRoute::Closed).unwrap() - 0.125).abs() < 1e-15);
        assert!((cs_determinant(z, 0.02, 0.01, DerivativeRoute::FiniteDifference).unwrap() - 0.125).abs() < 1e-9);
    }
}
