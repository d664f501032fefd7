use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use proptest::prelude::*;
use twisted_riesz::cutoffs::{self, BumpSpec};
use twisted_riesz::grid::Grid2;
use twisted_riesz::operator_lab::{ascent, AscentOptions, DEFAULT_MEMORY_CAP};
use twisted_riesz::oscillatory_kernels::*;
use twisted_riesz::propagator::propagator_constant;
use twisted_riesz::spectral::projection_closed;
use twisted_riesz::{Complex64, Point2};

fn interior_window() -> Arc<dyn Window> {
    Arc::new(BumpWindow(BumpSpec::interval(FRAC_PI_2, 1.2, 1.0)))
}

/// `∫ψ_ℓ^δ(s)e^{−ist}ds` by composite Simpson on a fine uniform grid.
fn hat_psi_simpson(ell: u32, delta: f64, t: f64) -> Complex64 {
    let (a, b) = (0.25 * 2f64.powi(ell as i32), 2f64.powi(ell as i32));
    let n = 20_000;
    let h = (b - a) / n as f64;
    let f = |s: f64| Complex64::new(0.0, -s * t).exp() * cutoffs::psi_ell_delta(ell, delta, s).unwrap();
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hat_psi_matches_simpson(ell in 1u32..6, delta in 0.0f64..2.0, t in -20.0f64..20.0) {
        let a = hat_psi_ell_delta(ell, delta, t);
        let b = hat_psi_simpson(ell, delta, t);
        prop_assert!((a - b).norm() <= 1e-9 * 2f64.powi(ell as i32), "{a} vs {b}");
    }

    #[test]
    fn hat_psi_of_real_symbol_is_hermitian(ell in 0u32..8, delta in 0.0f64..2.0, t in -50.0f64..50.0) {
        let a = hat_psi_ell_delta(ell, delta, t);
        let b = hat_psi_ell_delta(ell, delta, -t).conj();
        prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(1.0));
    }

    #[test]
    fn certified_quadrature_is_stable_under_refinement(x in -0.8f64..0.8, y in -0.8f64..0.8, xp in -0.8f64..0.8, yp in -0.8f64..0.8, k in 6i32..10) {
        let w = WindowedSymbol::new(interior_window(), 2f64.powi(k));
        let (z, zp) = (Point2::new(x, y), Point2::new(xp, yp));
        let a = bracket_kernel(&w, z, zp).unwrap();
        let fine = QuadratureOptions { phase_budget: 0.125, ..QuadratureOptions::default() };
        let b = bracket_kernel_with(&w, z, zp, &fine).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-8 * a.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn translated_windows_have_equal_modulus(n in -3i32..=3, ell in 0u32..4, x in -0.6f64..0.6, y in -0.6f64..0.6, xp in -0.6f64..0.6, yp in -0.6f64..0.6) {
        // [η(· + nπ)ψ̂(·)]^λ and [η ψ̂(· − nπ)]^λ.
        let eta = Arc::new(BumpWindow(BumpSpec::interval(FRAC_PI_2, 1.0, 1.0)));
        let shift = n as f64 * PI;
        let hp = |s: f64| Arc::new(HatPsiWindow { ell, delta: 0.5, shift: s, reach: f64::INFINITY });
        let a = product(vec![Arc::new(ShiftedWindow { inner: eta.clone(), shift }), hp(0.0)]);
        let b = product(vec![eta, hp(shift)]);
        let (z, zp) = (Point2::new(x, y), Point2::new(xp, yp));
        let ka = bracket_kernel(&WindowedSymbol::new(a, 64.0), z, zp).unwrap();
        let kb = bracket_kernel(&WindowedSymbol::new(b, 64.0), z, zp).unwrap();
        prop_assert!((ka.norm() - kb.norm()).abs() <= 1e-10 * ka.norm().max(1.0), "{ka} vs {kb}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn distance_pieces_resum_to_the_kernel(r in 0.05f64..2.6, a in -PI..PI, cx in -0.3f64..0.3, cy in -0.3f64..0.3, jm in 2u32..8) {
        let w = WindowedSymbol::new(Arc::new(Eta1Window), 64.0);
        let c = Point2::new(cx, cy);
        let (z, zp) = (c + Point2::from_polar(0.5 * r, a), c - Point2::from_polar(0.5 * r, a));
        let opts = QuadratureOptions::default();
        let full = bracket_kernel(&w, z, zp).unwrap();
        let mut sum = decomposed_kernel(&w, Piece::Inner { j_max: jm }, z, zp, &opts).unwrap()
            + decomposed_kernel(&w, Piece::Exterior { j_max: jm }, z, zp, &opts).unwrap();
        for j in 0..=jm {
            sum += decomposed_kernel(&w, Piece::J { j }, z, zp, &opts).unwrap();
        }
        prop_assert!((sum - full).norm() <= 1e-8 * full.norm().max(1.0), "{sum} vs {full}");
    }

    #[test]
    fn sphere_pieces_resum_to_the_distance_piece(u in 0.3f64..0.95, a in -PI..PI) {
        // 2 − |z − z′| inside supp χ_4.
        let j = 4u32;
        let r = 2.0 - u * 2f64.powi(2 - j as i32);
        let (z, zp) = (Point2::from_polar(0.5 * r, a), Point2::from_polar(-0.5 * r, a));
        let w = WindowedSymbol::new(Arc::new(Eta1Window), 256.0);
        let opts = QuadratureOptions::default();
        let target = decomposed_kernel(&w, Piece::J { j }, z, zp, &opts).unwrap();
        let mut sum = Complex64::new(0.0, 0.0);
        for l in L_MIN..=L_MAX {
            sum += decomposed_kernel(&w, Piece::JL { j, l }, z, zp, &opts).unwrap();
        }
        prop_assert!((sum - target).norm() <= 1e-8 * target.norm().max(1.0), "{sum} vs {target}");
    }
}

#[test]
fn zero_frequency_is_the_integral() {
    for (ell, delta) in [(1u32, 0.0), (3, 0.5), (5, 1.5)] {
        let v = hat_psi_ell_delta(ell, delta, 0.0);
        let expected = 2f64.powi(ell as i32) * psi_integral(delta);
        assert!((v.re - expected).abs() <= 1e-13 * expected && v.im.abs() <= 1e-15, "{v} vs {expected}");
    }
}

#[test]
fn fitted_decay_constant_bounds_held_out_points() {
    let (ell, delta, m) = (3u32, 0.5, 4);
    let sc = 2f64.powi(ell as i32);
    let fit: Vec<f64> = (0..200).map(|i| i as f64 * 0.5 / sc).collect();
    let c = hat_psi_decay_constant(ell, delta, m, &fit);
    for u in [0.37, 7.3, 33.3, 50.0, 71.1] {
        let t = u / sc;
        let v = hat_psi_ell_delta(ell, delta, t).norm() * (1.0 + u).powi(m) / sc;
        assert!(v <= c, "u = {u}: {v} > {c}");
    }
}

#[test]
fn rescaling_identity_against_the_eigensum() {
    // ψ_ℓ^δ(λ − 𝓛)(λ^{1/2}z, λ^{1/2}z′) = c(2π)^{−1}[ψ̂_ℓ^δ]^λ(z, z′).
    let (lambda, ell, delta) = (33.0f64, 2u32, 0.5);
    let sl = lambda.sqrt();
    let pairs = [
        (Point2::new(0.1, 0.0), Point2::new(0.0, 0.0)),
        (Point2::new(0.2, -0.1), Point2::new(-0.1, 0.15)),
        (Point2::new(-0.3, 0.25), Point2::new(0.05, 0.1)),
    ];
    let mut phases = Vec::new();
    for (z, zp) in pairs {
        let mut spectral = Complex64::new(0.0, 0.0);
        for k in 0..40u32 {
            let mu = 2 * k + 1;
            let m = cutoffs::psi_ell_delta(ell, delta, lambda - mu as f64).unwrap();
            if m != 0.0 {
                spectral += projection_closed(mu, z.scale(sl), zp.scale(sl)).unwrap() * m;
            }
        }
        let bracket = hat_psi_bracket_contour(ell, delta, lambda, 0.1, 100.0, z, zp).unwrap();
        let rhs = propagator_constant() / (2.0 * PI) * bracket;
        assert!((spectral.norm() - rhs.norm()).abs() <= 1e-4, "{spectral} vs {rhs}");
        phases.push((spectral / rhs).arg());
    }
    for p in &phases {
        assert!((p - phases[0]).abs() <= 1e-3, "phase not constant: {phases:?}");
    }
}

#[test]
fn kernel_piece_vanishes_off_its_shell() {
    let w = WindowedSymbol::new(Arc::new(Eta1Window), 64.0);
    let (z, zp) = (Point2::new(0.5, 0.0), Point2::new(-0.5, 0.0));
    let v = decomposed_kernel(&w, Piece::J { j: 9 }, z, zp, &QuadratureOptions::default()).unwrap();
    assert_eq!(v, Complex64::new(0.0, 0.0));
}

#[test]
fn envelopes_are_positive_and_decreasing_in_distance() {
    let fams = [KernelEnvelope::Kj { ell: 2, delta: 0.5, j: 6, shift: 0, n: 3 }, KernelEnvelope::Exterior { n: 3 }];
    for fam in fams {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let d = match fam {
                KernelEnvelope::Exterior { .. } => 2.0 + 0.02 * i as f64,
                _ => 0.01 * i as f64,
            };
            let v = fam.value(256.0, Point2::ORIGIN, Point2::new(d, 0.0));
            assert!(v > 0.0 && v <= prev, "{fam:?} at {d}");
            prev = v;
        }
    }
    let b = KernelEnvelope::Bl { j: 8, l: 8, n: 3 };
    assert!(b.value(4096.0, Point2::ORIGIN, Point2::new(1.99, 0.0)) > 0.0);
}

#[test]
fn exterior_envelope_constant_is_stable() {
    let samples: Vec<(Point2, Point2)> = (0..8)
        .map(|i| {
            let a = i as f64 * PI / 8.0;
            let c = Point2::from_polar(0.2, 2.0 * a);
            (c + Point2::from_polar(1.25, a), c - Point2::from_polar(1.25, a))
        })
        .collect();
    let rep = envelope_check(KernelEnvelope::Exterior { n: 3 }, &samples, &[64.0, 128.0, 256.0]).unwrap();
    assert!(!rep.verdict.is_failure(), "{:?}", rep.ys);
    assert!(rep.ys.iter().all(|y| *y > 0.0));
}

#[test]
fn sphere_envelope_holds_away_from_the_diagonal_band() {
    // |2l − j| > 6 at j = 8; 2 − |z − z′| inside supp χ_8.
    let samples: Vec<(Point2, Point2)> = (0..6)
        .map(|i| {
            let r = 2.0 - 2f64.powi(-8) * (1.2 + 0.4 * i as f64);
            let a = 0.7 * i as f64;
            (Point2::from_polar(0.5 * r, a), Point2::from_polar(-0.5 * r, a))
        })
        .collect();
    for l in [0, 8] {
        let rep = envelope_check(KernelEnvelope::Bl { j: 8, l, n: 3 }, &samples, &[4096.0, 8192.0]).unwrap();
        assert!(!rep.verdict.is_failure(), "l = {l}: {:?}", rep.ys);
    }
}

#[test]
fn vanishing_kernel_gives_zero_ratio() {
    // The time shell at j = 2 misses supp η₀.
    let samples = [(Point2::ORIGIN, Point2::new(0.1, 0.0))];
    let rep = envelope_check(KernelEnvelope::Kj { ell: 2, delta: 0.5, j: 2, shift: 0, n: 3 }, &samples, &[64.0]).unwrap();
    assert_eq!(rep.ys, vec![0.0]);
}

#[test]
fn tiles_have_eight_neighbours() {
    for q in [(0i64, 0i64), (-3, 5), (7, -2)] {
        let mut count = 0;
        for a in -4..=4 {
            for b in -4..=4 {
                let p = (q.0 + a, q.1 + b);
                if p != q && tiles_adjacent(q, p) {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 8);
    }
}

#[test]
fn tiling_split_is_exact() {
    let grid = Grid2::centered(8, 0.2, Point2::new(0.25, 0.25)).unwrap();
    let (near, far) = tiling_split(64.0, 2, 0.5, 0, grid, DEFAULT_MEMORY_CAP).unwrap();
    assert_eq!(far.max_abs_diff(&twisted_riesz::operator_lab::DiscreteOperator::zeros(grid, grid)), 0.0);
    assert!(near.max_abs_diff(&far) > 0.0);

    let grid = Grid2::new(24, 1.5).unwrap();
    let (near, far) = tiling_split(256.0, 2, 0.5, 0, grid, DEFAULT_MEMORY_CAP).unwrap();
    let sum = near.add(&far).unwrap();
    for (a, b) in [(0, 0), (3, 400), (100, 575), (311, 17)] {
        assert_eq!(sum.entry(a, b), near.entry(a, b) + far.entry(a, b));
        assert!(near.entry(a, b) == Complex64::new(0.0, 0.0) || far.entry(a, b) == Complex64::new(0.0, 0.0));
    }
    let opts = AscentOptions { restarts: 2, tolerance: 1e-4, ..AscentOptions::default() };
    let n1 = ascent(&near, 4.0, 4.0, &opts).unwrap().0;
    let n2 = ascent(&far, 4.0, 4.0, &opts).unwrap().0;
    assert!(n2 <= 1e-2 * n1, "near {n1}, far {n2}");
}
