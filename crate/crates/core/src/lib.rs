//! Dissipative dynamics of a qubit coupled through a nonlinear quantum
//! oscillator to an Ohmic bath, treated as a qubit in an effective bath.
//!
//! The pipeline runs from the bath description to the qubit population
//! difference P(t):
//!
//! - [`params`]: physical inputs and derived scales (Ω₁, n₁(0), n_th, γ̄, ς).
//! - [`spectral`]: Ohmic, linear and nonlinear effective spectral densities.
//! - [`correlation`]: S(τ), R(τ) by quadrature, closed form and damping expansion.
//! - [`gme`]: NIBA kernels and the time-domain master-equation solver.
//! - [`wda`]: analytic weak-damping solution, pole frequencies and decay rates.
//! - [`spectrum`]: Fourier magnitude of P(t) and peak extraction.
//! - [`scenario`]: figure presets and the CSV/summary writer behind the CLI.

pub mod correlation;
pub mod gme;
pub mod numerics;
pub mod params;
pub mod scenario;
pub mod spectral;
pub mod spectrum;
pub mod wda;

pub use params::{derived_scales, DerivedScales, SystemParams};
