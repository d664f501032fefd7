use std::f64::consts::PI;

use proptest::prelude::*;
use twisted_riesz::propagator::*;
use twisted_riesz::{Complex64, Point2};

fn point() -> impl Strategy<Value = Point2> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, y)| Point2::new(x, y))
}

/// Times with `|sin t| ≥ 0.2`, on both sides of the real axis.
fn admissible_time() -> impl Strategy<Value = f64> {
    (0.2f64..PI - 0.2, prop::bool::ANY, -2i32..=2).prop_map(|(t, neg, k)| (if neg { -t } else { t }) + 2.0 * PI * k as f64)
}

fn phase_at(t: f64, z: Point2, zp: Point2) -> f64 {
    phase_p(&PhasePoint::new(t, z, zp)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn time_derivatives_match_finite_differences(t in admissible_time(), z in point(), zp in point()) {
        let p = PhasePoint::new(t, z, zp);
        let h = 1e-5;
        let fd1 = (phase_at(t + h, z, zp) - phase_at(t - h, z, zp)) / (2.0 * h);
        let d1 = dphase(&p).unwrap();
        prop_assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1.0), "{fd1} vs {d1}");

        // Fourth-order stencil keeps rounding below the tolerance.
        let k = 1e-3;
        let f = |s: f64| phase_at(t + s, z, zp);
        let fd2 = (-f(2.0 * k) + 16.0 * f(k) - 30.0 * f(0.0) + 16.0 * f(-k) - f(-2.0 * k)) / (12.0 * k * k);
        let d2 = d2phase(&p).unwrap();
        prop_assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1.0), "{fd2} vs {d2}");
    }

    #[test]
    fn phase_is_rotation_invariant(t in admissible_time(), z in point(), zp in point(), a in -PI..PI) {
        let p0 = phase_at(t, z, zp);
        let p1 = phase_at(t, z.rotate(a), zp.rotate(a));
        prop_assert!((p0 - p1).abs() <= 1e-12 * p0.abs().max(1.0));
    }

    #[test]
    fn cached_geometry(t in admissible_time(), z in point(), zp in point()) {
        let p = PhasePoint::new(t, z, zp);
        let q = PhasePoint::new(t, zp, z);
        prop_assert!((p.r - ((z.x - zp.x).powi(2) + (z.y - zp.y).powi(2)).sqrt()).abs() <= 1e-15);
        prop_assert_eq!(p.cross, -q.cross);
    }

    #[test]
    fn kernel_is_hermitian_in_time(t in admissible_time(), z in point(), zp in point()) {
        let a = mehler_kernel(ComplexTime::real(t), z, zp).unwrap();
        let b = mehler_kernel(ComplexTime::real(-t), zp, z).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-13 * a.norm());
    }

    #[test]
    fn real_time_kernel_has_free_modulus(t in admissible_time(), z in point(), zp in point()) {
        let k = mehler_kernel(ComplexTime::real(t), z, zp).unwrap();
        let expected = 1.0 / (4.0 * PI * t.sin().abs());
        prop_assert!((k.norm() - expected).abs() <= 1e-13 * expected);
    }

    #[test]
    fn kernel_is_continuous_in_regularisation(t in admissible_time(), z in point(), zp in point(), eps in 1e-6f64..1e-3) {
        let a = mehler_kernel(ComplexTime::new(t, eps).unwrap(), z, zp).unwrap();
        let b = mehler_kernel(ComplexTime::new(t, eps / 2.0).unwrap(), z, zp).unwrap();
        let c = mehler_kernel(ComplexTime::real(t), z, zp).unwrap();
        // |∂_ε K| ≤ |c|(|cos|/sin² + r²/(4 sin³) + r²|cos|... ) ≤ 100 for |sin t| ≥ 0.2, r ≤ 4√2.
        prop_assert!((a - b).norm() <= 100.0 * eps);
        // O(ε): in the linear regime halving ε halves the distance to the limit.
        let small = eps * 1e-2;
        let a = mehler_kernel(ComplexTime::new(t, small).unwrap(), z, zp).unwrap();
        let b = mehler_kernel(ComplexTime::new(t, small / 2.0).unwrap(), z, zp).unwrap();
        let (da, db) = ((a - c).norm(), (b - c).norm());
        prop_assert!((db / da - 0.5).abs() <= 0.05, "ratio {}", db / da);
    }

    #[test]
    fn symmetry_map_is_isometric_and_phase_symmetric(t in 0.1f64..PI - 0.1, z in point(), zp in point()) {
        let (lz, lzp) = (symmetry_map_l(z), symmetry_map_l(zp));
        prop_assert!((lz.dist(lzp) - z.dist(zp)).abs() <= 1e-14);
        let s = symmetry_check(&PhasePoint::new(t, z, zp)).unwrap();
        prop_assert!(s.abs() <= 1e-12 * (1.0 + phase_at(t, z, zp).abs()), "residual {s}");
    }

    #[test]
    fn comparability_is_inverse_sine_square(t in admissible_time(), z in point(), zp in point()) {
        let p = PhasePoint::new(t, z, zp);
        if let Ok(v) = comparability_ratio(&p) {
            let expected = 1.0 / (4.0 * t.sin().powi(2));
            prop_assert!((v - expected).abs() <= 1e-8 * expected);
        }
    }
}

#[test]
fn worked_symmetry_example() {
    let p = PhasePoint::new(1.0, Point2::new(0.3, -1.2), Point2::new(1.1, 0.4));
    assert!(symmetry_check(&p).unwrap().abs() <= 1e-12);
    let l = symmetry_map_l(Point2::new(1.0, 1.0));
    assert!((l.x - 2f64.sqrt()).abs() < 1e-15 && l.y == 0.0);
}

#[test]
fn constant_is_one_over_four_pi_i() {
    let c = propagator_constant();
    assert!((c * Complex64::new(0.0, 4.0 * PI) - 1.0).norm() < 1e-15);
}

#[test]
fn singular_times_are_rejected() {
    let (z, zp) = (Point2::new(0.1, 0.2), Point2::new(-0.3, 0.5));
    assert!(phase_p(&PhasePoint::new(0.0, z, zp)).is_err());
    assert!(mehler_kernel(ComplexTime::real(PI), z, zp).is_err());
    assert!(mehler_kernel(ComplexTime::new(PI, 1e-2).unwrap(), z, zp).is_ok());
    assert!(ComplexTime::new(1.0, -1e-3).is_err());
}
