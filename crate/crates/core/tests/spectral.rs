use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twisted_riesz::grid::{Grid2, SampledField};
use twisted_riesz::spectral::*;
use twisted_riesz::{Complex64, Point2};

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `L_k(x) = Σ_i C(k, i)(−x)^i / i!`.
fn laguerre_explicit(k: u32, x: f64) -> f64 {
    let mut fact = 1.0;
    (0..=k)
        .map(|i| {
            if i > 0 {
                fact *= i as f64;
            }
            binomial(k, i) * (-x).powi(i as i32) / fact
        })
        .sum()
}

fn gaussian_bump(grid: Grid2, width: f64) -> SampledField {
    SampledField::from_real_fn(grid, move |z| (-z.norm_sq() / (width * width)).exp())
}

/// Pseudo-random field supported in `|z| ≤ radius`.
fn random_field(grid: Grid2, radius: f64, seed: u64) -> SampledField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = grid
        .points()
        .into_iter()
        .map(|z| {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if z.norm() <= radius { v } else { Complex64::new(0.0, 0.0) }
        })
        .collect();
    SampledField::new(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn laguerre_matches_explicit_sum(k in 0u32..16, x in 0.0f64..4.0) {
        let e = laguerre_explicit(k, x);
        prop_assert!((laguerre(k, x) - e).abs() <= 1e-11 * e.abs().max(1.0));
        let all = laguerre_all(k, x);
        prop_assert!((all[k as usize] - e).abs() <= 1e-11 * e.abs().max(1.0));
    }

    #[test]
    fn laguerre_functions_are_bounded_by_one(k in 0u32..4000, x in 0.0f64..20000.0) {
        // |L_k(x)e^{−x/2}| ≤ 1 on x ≥ 0.
        let v = laguerre_functions(k, x);
        prop_assert!(v.iter().all(|f| f.is_finite() && f.abs() <= 1.0 + 1e-9));
    }

    #[test]
    fn laguerre_functions_agree_where_representable(k in 0u32..60, x in 0.0f64..60.0) {
        let v = laguerre_functions(k, x);
        let direct = laguerre(k, x) * (-0.5 * x).exp();
        prop_assert!((v[k as usize] - direct).abs() <= 1e-12);
    }

    #[test]
    fn critical_index_formula(p in 1.0f64..50.0) {
        let expected = (2.0 * (0.5 - 1.0 / p).abs() - 0.5).max(0.0);
        prop_assert_eq!(critical_delta(p), expected);
        if p > 1.0 {
            // Invariant under p ↦ p′ = p/(p − 1).
            prop_assert!((critical_delta(p) - critical_delta(p / (p - 1.0))).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_routes_agree(k in 0u32..4, x in -3.0f64..3.0, y in -3.0f64..3.0, xp in -3.0f64..3.0, yp in -3.0f64..3.0) {
        let mu = 2 * k + 1;
        let (z, zp) = (Point2::new(x, y), Point2::new(xp, yp));
        let a = projection_fourier(mu, z, zp, &DEFAULT_EPS_SCHEDULE).unwrap();
        let b = projection_closed(mu, z, zp).unwrap();
        prop_assert!((a - b).norm() <= 1e-6, "mu = {mu}: {a} vs {b}");
    }

    #[test]
    fn projection_kernel_is_hermitian_and_rotation_covariant(k in 0u32..8, x in -3.0f64..3.0, y in -3.0f64..3.0, xp in -3.0f64..3.0, yp in -3.0f64..3.0, a in -PI..PI) {
        let mu = 2 * k + 1;
        let (z, zp) = (Point2::new(x, y), Point2::new(xp, yp));
        let v = projection_closed(mu, z, zp).unwrap();
        let w = projection_closed(mu, zp, z).unwrap().conj();
        prop_assert!((v - w).norm() <= 1e-14);
        let r = projection_closed(mu, z.rotate(a), zp.rotate(a)).unwrap();
        prop_assert!((v - r).norm() <= 1e-13);
    }
}

#[test]
fn diagonal_of_every_projection_is_one_over_two_pi() {
    // Π_μ(z, z) = C·L_k(0) = 1/(2π).
    for mu in [1, 3, 9, 41, 129] {
        let v = projection_closed(mu, Point2::new(0.3, -0.8), Point2::new(0.3, -0.8)).unwrap();
        assert!((v - Complex64::new(1.0 / (2.0 * PI), 0.0)).norm() < 1e-14, "mu = {mu}: {v}");
    }
}

#[test]
fn discrete_projections_are_idempotent_and_orthogonal() {
    // h = 1/8; the domain must hold the outer ring of Π_15 f (radius ≈ 8).
    let grid = Grid2::new(192, 12.0).unwrap();
    let f = random_field(grid, 1.5, 7);
    let p: Vec<_> = [1u32, 7, 15].iter().map(|&mu| ProjectionKernel::build(mu, Route::ClosedForm, grid).unwrap()).collect();
    let pf: Vec<_> = p.iter().map(|pk| pk.apply(&f).unwrap()).collect();
    for (pk, v) in p.iter().zip(&pf) {
        let again = pk.apply(v).unwrap();
        let rel = again.sub(v).norm(2.0) / v.norm(2.0);
        assert!(rel <= 1e-4, "mu = {}: idempotence defect {rel:e}", pk.mu);
    }
    for (i, pi) in p.iter().enumerate() {
        for (j, v) in pf.iter().enumerate() {
            if i != j {
                let cross = pi.apply(v).unwrap().norm(2.0) / v.norm(2.0);
                assert!(cross <= 1e-4, "Pi_{} Pi_{}: {cross:e}", pi.mu, p[j].mu);
            }
        }
    }
}

#[test]
fn projections_are_eigenfunctions_of_the_operator() {
    let grid = Grid2::new(192, 12.0).unwrap();
    let f = gaussian_bump(grid, 1.0);
    for mu in [1u32, 5, 9] {
        let v = ProjectionKernel::build(mu, Route::ClosedForm, grid).unwrap().apply(&f).unwrap();
        let lv = apply_twisted_laplacian(&v).unwrap();
        let rel = lv.sub(&v.scale(Complex64::new(mu as f64, 0.0))).norm(2.0) / (mu as f64 * v.norm(2.0));
        assert!(rel <= 1e-2, "mu = {mu}: {rel:e}");
        let two_stage = apply_covariant_two_stage(&v).unwrap();
        assert!(two_stage.sub(&lv).norm(2.0) <= 1e-2 * lv.norm(2.0));
    }
}

#[test]
fn partial_sums_converge_monotonically() {
    let grid = Grid2::new(96, 6.0).unwrap();
    let f = gaussian_bump(grid, 1.0);
    let errors: Vec<f64> = [2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&lambda| {
            let spec = RieszSpec::new(lambda, 0.0, 2.0).unwrap();
            riesz_mean_eigensum(&spec, &f, DEFAULT_MU_MAX).unwrap().sub(&f).norm(2.0)
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[4] < 1e-3 * f.norm(2.0), "{errors:?}");
}

#[test]
fn ground_state_mean_is_a_single_eigenterm() {
    // e^{−|z|²/4} spans the range of Π_1 on radial functions.
    let grid = Grid2::new(96, 8.0).unwrap();
    let f = SampledField::from_real_fn(grid, |z| (-0.25 * z.norm_sq()).exp());
    for (lambda, delta) in [(9.0, 0.5), (33.0, 1.0), (129.0, 0.25)] {
        let spec = RieszSpec::new(lambda, delta, 4.0).unwrap();
        let s = riesz_mean_eigensum(&spec, &f, DEFAULT_MU_MAX).unwrap();
        let got = s.sub(&f).norm(4.0);
        let expected = (1.0 - (1.0 - 1.0 / lambda).powf(delta)) * f.norm(4.0);
        assert!((got - expected).abs() <= 1e-6 * f.norm(4.0), "lambda = {lambda}: {got} vs {expected}");
    }
}

#[test]
fn riesz_parameters_are_validated() {
    assert!(RieszSpec::new(0.0, 0.5, 4.0).is_err());
    assert!(RieszSpec::new(9.0, -0.5, 4.0).is_err());
    assert!(RieszSpec::new(9.0, 0.5, 0.5).is_err());
    let grid = Grid2::new(8, 1.0).unwrap();
    let spec = RieszSpec::new(257.0, 0.5, 4.0).unwrap();
    assert!(riesz_operator(&spec, grid, DEFAULT_MU_MAX).is_err());
    assert_eq!(critical_delta(4.0), 0.0);
    assert_eq!(critical_delta(f64::INFINITY), 0.5);
    assert!(ProjectionKernel::build(4, Route::ClosedForm, grid).is_err());
}
