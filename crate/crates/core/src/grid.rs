//! Uniform planar grids, sampled fields and twisted-convolution kernels.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Cell-centred `n × n` grid on `[−extent, extent]²`, row-major in `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub n: usize,
    pub extent: f64,
    #[serde(default)]
    pub center: Point2,
}

impl Grid2 {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        Self::centered(n, extent, Point2::ORIGIN)
    }

    pub fn centered(n: usize, extent: f64, center: Point2) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("grid_n", "must be positive"));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::param("grid_extent", "must be positive and finite"));
        }
        Ok(Grid2 { n, extent, center })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Quadrature weight of each node.
    pub fn weight(&self) -> f64 {
        self.h() * self.h()
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.h()
    }

    pub fn point(&self, idx: usize) -> Point2 {
        let (iy, ix) = (idx / self.n, idx % self.n);
        Point2::new(self.center.x + self.coord(ix), self.center.y + self.coord(iy))
    }

    pub fn points(&self) -> Vec<Point2> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Sorted distinct squared integer offsets `m² + k²`, `|m|, |k| < n`.
    pub fn distinct_offsets(&self) -> Vec<usize> {
        let n = self.n;
        let mut seen = vec![false; 2 * (n - 1) * (n - 1) + 1];
        for m in 0..n {
            for k in 0..=m {
                seen[m * m + k * k] = true;
            }
        }
        seen.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i).collect()
    }
}

/// Complex samples on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub grid: Grid2,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn from_fn<F: Fn(Point2) -> Complex64 + Sync>(grid: Grid2, f: F) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        SampledField { grid, values }
    }

    pub fn from_real_fn<F: Fn(Point2) -> f64 + Sync>(grid: Grid2, f: F) -> Self {
        Self::from_fn(grid, |z| Complex64::new(f(z), 0.0))
    }

    pub fn zeros(grid: Grid2) -> Self {
        SampledField { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn new(grid: Grid2, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param("values", format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        Ok(SampledField { grid, values })
    }

    /// Discrete `L^p` norm with Riemann weights; `p = ∞` gives the max norm.
    pub fn norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.grid.weight(), p)
    }

    pub fn sub(&self, other: &SampledField) -> SampledField {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        SampledField { grid: self.grid, values }
    }

    pub fn scale(&self, k: Complex64) -> SampledField {
        SampledField { grid: self.grid, values: self.values.iter().map(|v| v * k).collect() }
    }

    /// Weighted inner product `Σ w f ḡ`.
    pub fn inner(&self, other: &SampledField) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() * self.grid.weight()
    }

    /// Fraction of `L²` mass outside the disc of radius `radius`.
    pub fn mass_outside(&self, radius: f64) -> f64 {
        let (mut out, mut tot) = (0.0, 0.0);
        for (i, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            tot += m;
            if (self.grid.point(i) - self.grid.center).norm() > radius {
                out += m;
            }
        }
        if tot == 0.0 {
            0.0
        } else {
            out / tot
        }
    }
}

/// Weighted discrete `L^p` norm.
pub fn lp_norm(values: &[Complex64], weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    } else if p == 2.0 {
        (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight).sqrt()
    } else {
        (values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}

/// Kernel of the form `R(|z−z′|²)·e^{iα·cross(z,z′)}` on a single grid,
/// stored as a lookup table over the distinct integer offsets.
#[derive(Clone, Debug)]
pub struct TwistedConvolution {
    pub grid: Grid2,
    pub alpha: f64,
    /// `radial[m² + k²] = R(h²(m² + k²))`; unused slots are zero.
    pub radial: Vec<Complex64>,
}

impl TwistedConvolution {
    /// Tabulates `radial(s)` at every distinct squared distance of the grid.
    pub fn build<F: Fn(f64) -> Result<Complex64> + Sync>(grid: Grid2, alpha: f64, radial: F) -> Result<Self> {
        let h2 = grid.weight();
        let keys = grid.distinct_offsets();
        let vals: Vec<Complex64> =
            keys.par_iter().map(|&k| radial(h2 * k as f64)).collect::<Result<Vec<_>>>()?;
        Self::from_table(grid, alpha, &keys, &vals)
    }

    /// Builds from values already computed at `keys` (squared offsets).
    pub fn from_table(grid: Grid2, alpha: f64, keys: &[usize], vals: &[Complex64]) -> Result<Self> {
        let n = grid.n;
        let mut radial = vec![Complex64::new(0.0, 0.0); 2 * (n - 1) * (n - 1) + 1];
        for (&k, &v) in keys.iter().zip(vals) {
            radial[k] = v;
        }
        Ok(TwistedConvolution { grid, alpha, radial })
    }

    /// Separable phase table `t[row·n + col] = e^{iα y(row) x(col)/2}`, so that
    /// `e^{iα cross(z_a, z_b)} = t[y_a, x_b] · conj(t[y_b, x_a])`.
    fn phase_tables(&self) -> Vec<Complex64> {
        let n = self.grid.n;
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                let v = self.grid.coord(a) + self.grid.center.y;
                let u = self.grid.coord(b) + self.grid.center.x;
                t[a * n + b] = Complex64::new(0.0, 0.5 * self.alpha * v * u).exp();
            }
        }
        t
    }

    /// Entry `K(z_a, z_b)`.
    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        let n = self.grid.n;
        let (ya, xa) = (a / n, a % n);
        let (yb, xb) = (b / n, b % n);
        let dm = xa.abs_diff(xb);
        let dk = ya.abs_diff(yb);
        let za = self.grid.point(a);
        let zb = self.grid.point(b);
        self.radial[dm * dm + dk * dk] * Complex64::new(0.0, self.alpha * crate::geometry::cross(za, zb)).exp()
    }

    /// Dense row-major matrix `K(z_a, z_b)`.
    pub fn matrix(&self) -> Vec<Complex64> {
        let n = self.grid.n;
        let len = self.grid.len();
        let pt = self.phase_tables();
        let mut m = vec![Complex64::new(0.0, 0.0); len * len];
        m.par_chunks_mut(len).enumerate().for_each(|(a, row)| {
            let (ya, xa) = (a / n, a % n);
            for (b, out) in row.iter_mut().enumerate() {
                let (yb, xb) = (b / n, b % n);
                let dm = xa.abs_diff(xb);
                let dk = ya.abs_diff(yb);
                // cross = (y_a x_b − x_a y_b)/2
                let ph = pt[ya * n + xb] * pt[yb * n + xa].conj();
                *out = self.radial[dm * dm + dk * dk] * ph;
            }
        });
        m
    }

    /// Matrix-free application `(Kf)_a = Σ_b K(z_a, z_b) f_b h²`.
    pub fn apply(&self, f: &SampledField) -> Result<SampledField> {
        if f.grid != self.grid {
            return Err(Error::param("field", "grid mismatch"));
        }
        let n = self.grid.n;
        let w = self.grid.weight();
        let pt = self.phase_tables();
        // The second phase factor depends only on (x_a, y_b); fold it in per row block.
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|a| {
                let (ya, xa) = (a / n, a % n);
                let mut acc = Complex64::new(0.0, 0.0);
                for yb in 0..n {
                    let dk = ya.abs_diff(yb);
                    let mut row = Complex64::new(0.0, 0.0);
                    for xb in 0..n {
                        let dm = xa.abs_diff(xb);
                        row += self.radial[dm * dm + dk * dk] * pt[ya * n + xb] * f.values[yb * n + xb];
                    }
                    acc += row * pt[yb * n + xa].conj();
                }
                acc * w
            })
            .collect();
        Ok(SampledField { grid: self.grid, values })
    }
}
