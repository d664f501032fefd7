//! The Schrödinger phase `𝒫(t, z, z′) = t + r² cot t / 4 + cross` and the
//! Mehler-type kernel of `e^{−it𝓛}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross, Point2};

/// Below this `|sin t|` the real-time phase is treated as singular.
pub const PHASE_SINGULAR: f64 = 1e-14;
/// Below this `|sin t|` the real-time kernel is rejected.
pub const KERNEL_SINGULAR: f64 = 1e-10;

/// The propagator constant `c = 1/(4πi)`.
pub fn propagator_constant() -> Complex64 {
    Complex64::new(0.0, -1.0 / (4.0 * PI))
}

/// A time together with a pair of points and their cached geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub z: Point2,
    pub zp: Point2,
    pub r: f64,
    pub cross: f64,
}

impl PhasePoint {
    pub fn new(t: f64, z: Point2, zp: Point2) -> Self {
        PhasePoint { t, z, zp, r: z.dist(zp), cross: cross(z, zp) }
    }

    fn sin_checked(&self) -> Result<f64> {
        let s = self.t.sin();
        if s.abs() < PHASE_SINGULAR {
            Err(Error::SingularTime { t: self.t, threshold: PHASE_SINGULAR })
        } else {
            Ok(s)
        }
    }
}

/// Time with a nonnegative regularisation; the actual time is `t − iε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexTime {
    pub t: f64,
    pub eps: f64,
}

impl ComplexTime {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::param("eps", "regularisation must be >= 0"));
        }
        Ok(ComplexTime { t, eps })
    }

    pub fn real(t: f64) -> Self {
        ComplexTime { t, eps: 0.0 }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.t, -self.eps)
    }
}

/// `𝒫(t, z, z′)`.
pub fn phase_p(p: &PhasePoint) -> Result<f64> {
    let s = p.sin_checked()?;
    Ok(p.t + p.r * p.r * p.t.cos() / (4.0 * s) + p.cross)
}

/// `∂_t𝒫 = 1 − r²/(4 sin² t)`.
pub fn dphase(p: &PhasePoint) -> Result<f64> {
    let s = p.sin_checked()?;
    Ok(1.0 - p.r * p.r / (4.0 * s * s))
}

/// `∂_t²𝒫 = r² cos t / (2 sin³ t)`.
pub fn d2phase(p: &PhasePoint) -> Result<f64> {
    let s = p.sin_checked()?;
    Ok(p.r * p.r * p.t.cos() / (2.0 * s * s * s))
}

/// `|∂_t𝒫| / |(2−r)(2+r) − 4cos²t|`.
///
/// Both expressions share the factor `4 − r² − 4cos²t`, so the ratio equals
/// `1/(4 sin² t)`; that limit is returned when numerator and denominator
/// vanish together.
pub fn comparability_ratio(p: &PhasePoint) -> Result<f64> {
    let s = p.sin_checked()?;
    let num = dphase(p)?.abs();
    let c = p.t.cos();
    let den = ((2.0 - p.r) * (2.0 + p.r) - 4.0 * c * c).abs();
    let scale = 4.0 + p.r * p.r;
    if den > 1e-9 * scale {
        Ok(num / den)
    } else if num < 1e-6 {
        Ok(1.0 / (4.0 * s * s))
    } else {
        Err(Error::OutOfRegime(format!("denominator underflow at t = {}, r = {}", p.t, p.r)))
    }
}

/// Analytically continued `𝒫(τ) − τ = r² cot τ / 4 + cross` at complex time.
pub fn phase_offset_complex(tau: Complex64, r2: f64, cross: f64) -> Complex64 {
    let cot = tau.cos() / tau.sin();
    cot * (0.25 * r2) + cross
}

/// Kernel of `e^{−i(t−iε)𝓛}`: `c (sin τ)^{−1} exp(i(𝒫(τ) − τ))`, `τ = t − iε`.
pub fn mehler_kernel(ct: ComplexTime, z: Point2, zp: Point2) -> Result<Complex64> {
    if ct.eps < 0.0 {
        return Err(Error::param("eps", "regularisation must be >= 0"));
    }
    if ct.eps == 0.0 && ct.t.sin().abs() <= KERNEL_SINGULAR {
        return Err(Error::SingularTime { t: ct.t, threshold: KERNEL_SINGULAR });
    }
    Ok(mehler_radial(ct.value(), z.dist_sq(zp)) * Complex64::new(0.0, cross(z, zp)).exp())
}

/// `c (sin τ)^{−1} exp(i r² cot τ / 4)`, the cross-free part of the kernel.
pub fn mehler_radial(tau: Complex64, r2: f64) -> Complex64 {
    let (s, c) = (tau.sin(), tau.cos());
    propagator_constant() / s * (Complex64::i() * (c / s) * (0.25 * r2)).exp()
}

/// `𝐋z = 2^{−1/2}(z₁ + z₂, z₁ − z₂)`.
pub fn symmetry_map_l(z: Point2) -> Point2 {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    Point2::new(k * (z.x + z.y), k * (z.x - z.y))
}

/// `𝒫(π − t, 𝐋z, 𝐋z′) + 𝒫(t, z, z′) − π`; zero up to rounding.
pub fn symmetry_check(p: &PhasePoint) -> Result<f64> {
    let q = PhasePoint::new(PI - p.t, symmetry_map_l(p.z), symmetry_map_l(p.zp));
    Ok(phase_p(&q)? + phase_p(p)? - PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_examples() {
        let z = Point2::new(0.4, -0.7);
        assert!((phase_p(&PhasePoint::new(1.1, z, z)).unwrap() - 1.1).abs() < 1e-15);
        let p = PhasePoint::new(PI / 4.0, Point2::new(1.0, 0.0), Point2::ORIGIN);
        assert!((phase_p(&p).unwrap() - (PI / 4.0 + 0.25)).abs() < 1e-15);
        let zp = Point2::new(-1.0, 0.3);
        let p = PhasePoint::new(PI / 2.0, z, zp);
        assert!((phase_p(&p).unwrap() - (PI / 2.0 + cross(z, zp))).abs() < 1e-15);
        assert!(phase_p(&PhasePoint::new(0.0, z, zp)).is_err());
    }

    #[test]
    fn derivative_examples() {
        let p = PhasePoint::new(PI / 2.0, Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0));
        assert!(dphase(&p).unwrap().abs() < 1e-15);
        assert!(d2phase(&p).unwrap().abs() < 1e-15);
        let p = PhasePoint::new(PI / 6.0, Point2::new(1.0, 0.0), Point2::ORIGIN);
        assert!(dphase(&p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn comparability_examples() {
        let p = PhasePoint::new(PI / 3.0, Point2::new(1.0, 0.0), Point2::ORIGIN);
        assert!((comparability_ratio(&p).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let p = PhasePoint::new(PI / 2.0, Point2::new(2.0, 0.0), Point2::ORIGIN);
        assert!((comparability_ratio(&p).unwrap() - 0.25).abs() < 1e-14);
        let p = PhasePoint::new(PI / 2.0 - 1.0 / 16.0, Point2::new(2.0 - 1.0 / 256.0, 0.0), Point2::ORIGIN);
        let v = comparability_ratio(&p).unwrap();
        assert!((0.25..=4.0).contains(&v));
    }

    #[test]
    fn symmetry_map_examples() {
        let l = symmetry_map_l(Point2::new(1.0, 1.0));
        assert!((l.x - 2f64.sqrt()).abs() < 1e-15 && l.y.abs() < 1e-15);
        let p = PhasePoint::new(1.0, Point2::new(0.3, -1.2), Point2::new(1.1, 0.4));
        assert!(symmetry_check(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kernel_rejects_singular_real_time() {
        assert!(mehler_kernel(ComplexTime::real(PI), Point2::ORIGIN, Point2::new(1.0, 0.0)).is_err());
        assert!(mehler_kernel(ComplexTime::new(PI, 0.1).unwrap(), Point2::ORIGIN, Point2::new(1.0, 0.0)).is_ok());
        assert!(ComplexTime::new(1.0, -1.0).is_err());
    }
}
