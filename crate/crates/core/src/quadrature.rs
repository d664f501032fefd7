//! Gauss–Legendre panels and adaptive Gauss–Kronrod integration of complex
//! integrands.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// The 16-point rule used on every oscillatory panel.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Integrates `f` over `[a, b]` with a single 16-point Gauss panel.
pub fn gl16_panel<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64) -> Complex64 {
    let (x, w) = gl16();
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = Complex64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(w) {
        acc += f(m + h * xi) * *wi;
    }
    acc * h
}

/// Integrates a real function over consecutive panels given by `edges`.
pub fn composite_real<F: FnMut(f64) -> f64>(mut f: F, edges: &[f64], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let mut acc = 0.0;
    for e in edges.windows(2) {
        let (m, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        let mut s = 0.0;
        for (xi, wi) in rule.0.iter().zip(&rule.1) {
            s += wi * f(m + h * xi);
        }
        acc += s * h;
    }
    acc
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[k];
        if k % 2 == 1 {
            gauss += s * WG[k / 2];
        }
    }
    ((kron * h), ((kron - gauss) * h).norm())
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

/// Adaptive 7/15-point Gauss–Kronrod integration of a complex integrand over
/// the panels delimited by `breaks` (which must be increasing).
///
/// Refinement bisects the interval with the largest error estimate until the
/// total estimate drops below `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive_gk<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Integral> {
    let mut ivs: Vec<(f64, f64, Complex64, f64)> = breaks
        .windows(2)
        .filter(|e| e[1] > e[0])
        .map(|e| {
            let (v, err) = gk15(&mut f, e[0], e[1]);
            (e[0], e[1], v, err)
        })
        .collect();
    loop {
        let total: Complex64 = ivs.iter().map(|iv| iv.2).sum();
        let err: f64 = ivs.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(Integral { value: total, error: err, intervals: ivs.len() });
        }
        if ivs.len() >= max_intervals {
            return Err(Error::BudgetExceeded { panels: ivs.len(), cap: max_intervals });
        }
        let (worst, _) = ivs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (a, b, _, _) = ivs[worst];
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // Interval can no longer be split in floating point.
            return Ok(Integral { value: total, error: err, intervals: ivs.len() });
        }
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        ivs[worst] = (a, m, v1, e1);
        ivs.push((m, b, v2, e2));
    }
}

/// Richardson extrapolation of values computed at `h, h/2, h/4, …`
/// assuming an error expansion in integer powers of `h`.
///
/// Returns the extrapolated value and the magnitude of the last correction.
pub fn richardson(values: &[Complex64]) -> (Complex64, f64) {
    let mut table: Vec<Complex64> = values.to_vec();
    let mut residual = 0.0;
    let mut factor = 2.0;
    while table.len() > 1 {
        let next: Vec<Complex64> =
            table.windows(2).map(|w| w[1] + (w[1] - w[0]) / (factor - 1.0)).collect();
        residual = (next[next.len() - 1] - table[table.len() - 1]).norm();
        table = next;
        factor *= 2.0;
    }
    (table[0], residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // ∫ x^30 = 2/31
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gk_handles_oscillation() {
        // ∫_0^10 e^{i 20 t} dt = (e^{200i} - 1)/(20 i)
        let exact = (Complex64::new(0.0, 200.0).exp() - 1.0) / Complex64::new(0.0, 20.0);
        let r = adaptive_gk(|t| Complex64::new(0.0, 20.0 * t).exp(), &[0.0, 10.0], 1e-13, 0.0, 10_000)
            .unwrap();
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn richardson_removes_linear_and_quadratic_bias() {
        let f = |h: f64| Complex64::new(1.0 + 3.0 * h - 2.0 * h * h, 0.0);
        let (v, _) = richardson(&[f(0.1), f(0.05), f(0.025)]);
        assert!((v.re - 1.0).abs() < 1e-13);
    }
}
