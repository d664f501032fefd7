//! Numerical verification toolkit for Bochner–Riesz means of the planar
//! twisted Laplacian.
//!
//! The crate is organised along the proof pipeline:
//!
//! * [`cutoffs`] — every bump function and partition of unity;
//! * [`propagator`] — the Schrödinger phase, its time derivatives and the
//!   Mehler-type kernel of `e^{-it𝓛}`;
//! * [`spectral`] — the operator itself, its eigenprojections (two routes)
//!   and Bochner–Riesz means by eigensum;
//! * [`oscillatory_kernels`] — the time-integrated kernels `[η]^λ` and their
//!   decompositions;
//! * [`stationary_phase`] — stationary-point geometry, the leading-order
//!   asymptotic term and the scaled Carleson–Sjölin phase;
//! * [`operator_lab`] — discretisation, `L^p` norm brackets and scaling scans;
//! * [`cli`] — configuration, orchestration and report emission.
//!
//! Normalisation: the propagator constant is `c = 1/(4πi)` and the operator is
//! `𝓛 = −(∂ₓ + iy/2)² − (∂_y − ix/2)²`, for which the eigenprojections carry
//! the factor `e^{+i·cross}` with `cross = (z₂z₁′ − z₁z₂′)/2`.

pub mod acceptance;
pub mod cli;
pub mod cutoffs;
pub mod dump;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod operator_lab;
pub mod oscillatory_kernels;
pub mod propagator;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod stationary_phase;

pub use error::{Error, Result};
pub use geometry::Point2;
pub use num_complex::Complex64;

/// Library version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Human-readable statement of the normalisation convention, embedded in reports.
pub const NORMALIZATION: &str =
    "c = 1/(4*pi*i); L = -(d_x + i y/2)^2 - (d_y - i x/2)^2; cross = (z2 z1' - z1 z2')/2";
