use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use proptest::prelude::*;
use twisted_riesz::cutoffs::{BumpSpec, ChiTilde};
use twisted_riesz::error::Error;
use twisted_riesz::oscillatory_kernels::{BumpWindow, WindowedSymbol};
use twisted_riesz::propagator::{d2phase, dphase, phase_p, PhasePoint};
use twisted_riesz::stationary_phase::*;
use twisted_riesz::Point2;

/// A pair at distance `r` with midpoint `c` and direction `a`.
fn pair(r: f64, a: f64, c: Point2) -> (Point2, Point2) {
    let h = Point2::from_polar(0.5 * r, a);
    (c + h, c - h)
}

fn box_point() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    let e = 1.0 / 16.0 * (1.0 - 1e-6);
    (-e..e, -e..e, -e..e, -e..e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn critical_time_is_stationary(r in 1e-3f64..2.0, a in -PI..PI, cx in -2.0f64..2.0, cy in -2.0f64..2.0) {
        let (z, zp) = pair(r, a, Point2::new(cx, cy));
        let sc = stationary_point(z, zp).unwrap();
        prop_assert!((sc.sin() - 0.5 * z.dist(zp)).abs() <= 1e-14);
        prop_assert!(sc > 0.0 && sc <= FRAC_PI_2);
        let p = PhasePoint::new(sc, z, zp);
        prop_assert!(dphase(&p).unwrap().abs() <= 1e-12);
        let phi = phi_value(z, zp).unwrap();
        prop_assert!((phi - phase_p(&p).unwrap()).abs() <= 1e-12 * phi.abs().max(1.0));
    }

    #[test]
    fn rescaled_hessian_follows_the_chain_rule(r in 0.05f64..1.999, a in -PI..PI, j in 0u32..16) {
        let (z, zp) = pair(r, a, Point2::ORIGIN);
        let d = StationaryData::new(j, z, zp).unwrap();
        // 𝒫̃(t) = 2^{3j/2}𝒫(S_c + 2^{−j/2}t) ⇒ 𝒫̃″(0) = 2^{j/2}𝒫″(S_c).
        let oracle = 2f64.powf(j as f64 / 2.0) * d2phase(&PhasePoint::new(d.s_c, z, zp)).unwrap();
        prop_assert!((d.second_derivative - oracle).abs() <= 1e-12 * oracle.abs());
    }

    #[test]
    fn phase_and_amplitude_are_rotation_invariant(u in 0.3f64..0.95, a in -PI..PI, rot in -PI..PI, cx in -1.0f64..1.0, cy in -1.0f64..1.0) {
        let j = 4;
        let r = 2.0 - u * 2f64.powi(-(j as i32));
        let (z, zp) = pair(r, a, Point2::new(cx, cy));
        let chi = ChiTilde::new(2.0 - 0.6 * 2f64.powi(-(j as i32)), j, 1.0 / 16.0, 1.0).unwrap();
        let eta = |t: f64| BumpSpec::interval(1.3, 0.5, 1.0).eval(t);
        let (a0, p0) = (amplitude_a(j, &chi, &eta, z, zp).unwrap(), phi_value(z, zp).unwrap());
        let (zr, zpr) = (z.rotate(rot), zp.rotate(rot));
        let (a1, p1) = (amplitude_a(j, &chi, &eta, zr, zpr).unwrap(), phi_value(zr, zpr).unwrap());
        prop_assert!((a0 - a1).abs() <= 1e-12 * a0.abs().max(1.0));
        prop_assert!((p0 - p1).abs() <= 1e-12 * p0.abs().max(1.0));
    }

    #[test]
    fn model_determinant_is_one_eighth(z1 in 0.25f64..1.0, z2 in -0.25f64..0.25, s in -0.25f64..0.25, z1p in -0.25f64..0.25) {
        let z = Point2::new(z1, z2);
        let closed = cs_determinant(z, s, z1p, DerivativeRoute::Closed).unwrap();
        let fd = cs_determinant(z, s, z1p, DerivativeRoute::FiniteDifference).unwrap();
        prop_assert!((closed - 0.125).abs() <= 1e-15);
        prop_assert!((fd - 0.125).abs() <= 1e-9);
    }

    #[test]
    fn cosine_scaffold(x in 0.0f64..4.0) {
        prop_assert!((g(x) - (1.0 - x.sqrt().cos())).abs() <= 1e-15);
        let y = g(x);
        if x < 9.0 {
            prop_assert!((g_inverse(y) - x).abs() <= 1e-12 * x.max(1e-3));
        }
    }

    #[test]
    fn scaled_quantities_on_the_box((z1, z2, zp1, zp2) in box_point(), jk in 0usize..3) {
        let j = [6u32, 8, 10][jk];
        let bx = ScaledBox::new(0.5, 1.0 / 16.0).unwrap();
        let (z, zp) = (Point2::new(z1 - 0.5, z2), Point2::new(zp1, zp2));
        let g = scaled_geometry(j, &bx, z, zp).unwrap();
        // t̃ ∼ 1 and 𝔓 ∼ 1 on U.
        prop_assert!(g.t_tilde > 0.2 && g.t_tilde < 1.0 && g.frak_p > 0.2 && g.frak_p < 1.0);
        // S̃² = t̃(1 + 2^{−j}t̃ ℰ(2^{−j}t̃)).
        let t = g.t_tilde * 2f64.powi(-(j as i32));
        let s2 = g.t_tilde * (1.0 + t * e_residual(t));
        prop_assert!((g.s_tilde * g.s_tilde - s2).abs() <= 1e-12 * s2);
        prop_assert!((g.b1 - g.b1_factored).abs() <= 1e-10 * g.b1);
        prop_assert!((g.e1 - (g.t_tilde - g.frak_p)).abs() <= 1e-9);
    }
}

#[test]
fn scaled_derivatives_are_bounded_uniformly_in_j() {
    let bx = ScaledBox::new(0.5, 1.0 / 16.0).unwrap();
    let h = 1e-4;
    let mut sup = Vec::new();
    for j in [6u32, 8, 10] {
        let mut m = [0.0f64; 2];
        for (z, zp) in bx.samples(400) {
            // Keep the stencil inside the box.
            let z = Point2::new(z.x * 0.9 - 0.05, z.y * 0.9);
            let zp = Point2::new(zp.x * 0.9, zp.y * 0.9);
            let s = |dz: Point2| scaled_geometry(j, &bx, z + dz, zp).unwrap().s_tilde;
            let b = |dz: Point2| scaled_geometry(j, &bx, z + dz, zp).unwrap().b1;
            for (k, f) in [&s as &dyn Fn(Point2) -> f64, &b].into_iter().enumerate() {
                for e in [Point2::new(h, 0.0), Point2::new(0.0, h)] {
                    let d1 = (f(e) - f(e.scale(-1.0))) / (2.0 * h);
                    let d2 = (f(e) - 2.0 * f(Point2::ORIGIN) + f(e.scale(-1.0))) / (h * h);
                    m[k] = m[k].max(d1.abs()).max(d2.abs());
                }
            }
        }
        sup.push(m);
    }
    for k in 0..2 {
        let (lo, hi) = sup.iter().map(|m| m[k]).fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
        assert!(hi.is_finite() && hi <= 2.0 * lo, "component {k}: {sup:?}");
    }
}

#[test]
fn leading_term_scales_like_inverse_square_root() {
    let j = 3;
    let r = 2.0 - 0.8 * 2f64.powi(-(j as i32));
    let (z, zp) = (Point2::new(0.5 * r, 0.0), Point2::new(-0.5 * r, 0.0));
    let chi = ChiTilde::new(r, j, 0.25, 1.0).unwrap();
    let sc = stationary_point(z, zp).unwrap();
    let w = |lambda| WindowedSymbol::new(Arc::new(BumpWindow(BumpSpec::interval(sc, 0.25 * 2f64.powf(1.0 - j as f64 / 2.0), 4.0))), lambda);
    for lambda in [256.0, 1024.0, 4096.0] {
        let a = leading_term(lambda, j, &w(lambda), &chi, z, zp).unwrap();
        let b = leading_term(4.0 * lambda, j, &w(4.0 * lambda), &chi, z, zp).unwrap();
        assert!((b.norm() / a.norm() - 0.5).abs() <= 1e-14);
    }
    assert!(matches!(leading_term(16.0, 6, &w(16.0), &chi, z, zp), Err(Error::OutOfRegime(_))));
}

#[test]
fn worked_values() {
    let s = stationary_point(Point2::ORIGIN, Point2::new(2f64.sqrt(), 0.0)).unwrap();
    assert!((s - FRAC_PI_4).abs() < 1e-15);
    let (z, zp) = (Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0));
    assert_eq!(stationary_point(z, zp).unwrap(), FRAC_PI_2);
    assert!((phi_value(z, zp).unwrap() - FRAC_PI_2).abs() < 1e-15);
    assert!((e_residual(0.0) - 1.0 / 12.0).abs() < 1e-16);
    // g′(0) = 1/2.
    assert!((g(1e-8) / 1e-8 - 0.5).abs() < 1e-8);
}

#[test]
fn sphere_is_degenerate() {
    assert!(matches!(stationary_point(Point2::ORIGIN, Point2::new(2.1, 0.0)), Err(Error::NoStationaryPoint { .. })));
    let chi = ChiTilde::new(2.0 - 0.6 / 16.0, 4, 1.0 / 16.0, 1.0).unwrap();
    let r = amplitude_a(4, &chi, &|_| 1.0, Point2::ORIGIN, Point2::new(2.0, 0.0));
    assert!(matches!(r, Err(Error::DegenerateAmplitude { .. })));
    let hess: Vec<f64> = [1.9, 1.99, 1.999, 1.9999]
        .iter()
        .map(|&d| unscaled_hessian(Point2::ORIGIN, Point2::new(d, 0.0)).unwrap())
        .collect();
    assert!(hess.windows(2).all(|w| w[1] < w[0]) && hess[3] < 0.03, "{hess:?}");
}

#[test]
fn determinant_condition_on_the_scaled_phase() {
    let bx = ScaledBox::new(0.5, 1.0 / 16.0).unwrap();
    let devs: Vec<f64> = [6u32, 10]
        .iter()
        .map(|&j| {
            let rep = cs_condition_full(j, 0.01, &bx, 200).unwrap();
            assert!(!rep.verdict.is_failure(), "j = {j}: {:?}", rep.diagnostics);
            rep.diagnostics["max_deviation"]
        })
        .collect();
    // Raising j shrinks the part of the deviation due to the 2^{−j} residual.
    assert!(devs[1] <= devs[0], "{devs:?}");
    assert!(cs_condition_full(4, 0.01, &bx, 10).is_err());
}
