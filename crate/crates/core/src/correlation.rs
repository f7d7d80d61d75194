//! Bath correlation function Q(τ) = S(τ) + iR(τ) of the effective bath.
//!
//! Three evaluators are provided: direct quadrature of
//!
//! ```text
//! S(τ) = ∫₀^∞ dω G(ω)/ω² coth(βω/2) (1 − cos ωτ)
//! R(τ) = ∫₀^∞ dω G(ω)/ω² sin ωτ
//! ```
//!
//! the pole-sum closed form (Matsubara terms dropped, 2Ω₁/(2Ω₁ ± iγ̄) ≈ 1),
//! and its expansion to first order in the damping.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::numerics::quadrature::{integrate, integrate_tail, QuadratureNonConvergence, Tolerance};
use crate::params::{DerivedScales, SystemParams};
use crate::spectral::geff;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("closed-form coefficients are singular for zero thermal width")]
    ZeroDamping,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureNonConvergence),
}

/// Absolute tolerance for each of the S and R integrals.
pub const QUADRATURE_ABS_TOL: f64 = 1e-8;

/// Placement hints for the quadrature: interior breakpoints and the point
/// beyond which the integral is treated as a tail.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureHints {
    pub breakpoints: Vec<f64>,
    pub tail_start: f64,
}

impl QuadratureHints {
    /// Splits around a Lorentzian peak at `centre` of half-width `width`.
    pub fn peaked(centre: f64, width: f64) -> Self {
        let width = width.max(1e-6 * centre);
        QuadratureHints {
            breakpoints: vec![(centre - 5.0 * width).max(0.0), centre, centre + 5.0 * width],
            tail_start: 10.0 * centre,
        }
    }
}

/// S(τ) and R(τ) by adaptive quadrature of the spectral weight `g`.
///
/// The finite part runs over `[0, tail_start]` with breakpoints at the hints
/// and at 2π/τ; where ωτ exceeds 20 it is pre-cut into half-periods. The rest
/// is mapped onto `(0, 1]`.
pub fn correlation_quadrature<G>(tau: f64, g: G, beta: f64, hints: &QuadratureHints) -> Result<(f64, f64), CorrelationError>
where
    G: Fn(f64) -> f64 + Sync,
{
    if tau < 0.0 {
        return Err(CorrelationError::NegativeTime(tau));
    }
    if tau == 0.0 {
        return Ok((0.0, 0.0));
    }
    let s_integrand = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let half = (0.5 * w * tau).sin();
        g(w) / (w * w) / (0.5 * beta * w).tanh() * 2.0 * half * half
    };
    let r_integrand = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        g(w) / (w * w) * (w * tau).sin()
    };

    let upper = hints.tail_start.max(4.0 * PI / tau);
    let mut cuts = hints.breakpoints.clone();
    cuts.push(2.0 * PI / tau);
    let onset = 20.0 / tau;
    if onset < upper {
        let piece = PI / tau;
        let mut w = onset;
        while w < upper {
            cuts.push(w);
            w += piece;
        }
    }
    let tol = Tolerance { abs: 0.5 * QUADRATURE_ABS_TOL, rel: 1e-12, max_intervals: 200_000 };
    let (s_finite, _) = integrate(s_integrand, 0.0, upper, &cuts, tol)?;
    let (s_tail, _) = integrate_tail(s_integrand, upper, tol)?;
    let (r_finite, _) = integrate(r_integrand, 0.0, upper, &cuts, tol)?;
    let (r_tail, _) = integrate_tail(r_integrand, upper, tol)?;
    Ok((s_finite + s_tail, r_finite + r_tail))
}

/// Coefficients of the closed-form S(τ), R(τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationCoefficients {
    pub i: f64,
    pub n: f64,
    pub x: f64,
    pub l: f64,
    pub z: f64,
}

pub fn closed_form_coefficients(s: &DerivedScales) -> Result<CorrelationCoefficients, CorrelationError> {
    let gb = s.gammabar;
    if !(gb > 0.0) {
        return Err(CorrelationError::ZeroDamping);
    }
    let w1 = s.omega1;
    let i = 2.0 * PI * s.varsigma * s.omega * s.omega / (w1 * w1 + gb * gb);
    let n = -i * (w1 / gb - gb / w1);
    let x = 2.0 / s.beta * i;
    // sinh/(cosh − cos) and 1/(cosh − cos), divided through by cosh(βΩ₁)
    let arg = s.beta * w1;
    let sech = 1.0 / arg.cosh();
    let (sin_b, cos_b) = (s.beta * gb).sin_cos();
    let den = 1.0 - cos_b * sech;
    let l = -i / gb * (w1 * arg.tanh() - gb * sin_b * sech) / den;
    let z = -i / gb * (gb * arg.tanh() + w1 * sin_b * sech) / den;
    Ok(CorrelationCoefficients { i, n, x, l, z })
}

pub fn correlation_closed_form(tau: f64, c: &CorrelationCoefficients, s: &DerivedScales) -> (f64, f64) {
    let envelope = (-s.gammabar * tau).exp();
    let (sin, cos) = (s.omega1 * tau).sin_cos();
    let big_s = c.x * tau + c.l * (envelope * cos - 1.0) + c.z * envelope * sin;
    let big_r = c.i - envelope * (c.n * sin + c.i * cos);
    (big_s, big_r)
}

/// Zeroth (Y, W) and first (A, B, C, V) order coefficients in the damping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WdaCoefficients {
    pub y: f64,
    pub w: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub v: f64,
}

impl WdaCoefficients {
    pub fn new(p: &SystemParams, s: &DerivedScales) -> Self {
        let w1 = s.omega1;
        let g2n4 = p.g * p.g * s.n1_pow4();
        let w = 4.0 * g2n4 / (w1 * p.omega * s.thermal_factor());
        let arg = s.beta * w1;
        // sinh(x)/(cosh(x) − 1) = coth(x/2)
        let coth_half = 1.0 / (0.5 * arg).tanh();
        let y = -w * coth_half;
        let v = 2.0 * g2n4 * p.gamma / (w1 * w1 * p.omega);
        let a = -s.gammabar * y;
        let b = 2.0 / s.beta * v;
        // (x + sinh x)/(cosh x − 1) = (x/sinh x + 1) coth(x/2)
        let c = -v * (arg / arg.sinh() + 1.0) * coth_half;
        WdaCoefficients { y, w, a, b, c, v }
    }
}

/// The four pieces S₀, S₁, R₀, R₁ of the damping expansion at time τ.
///
/// R₁ = V(1 − cos Ω₁τ − Ω₁τ sin Ω₁τ): the sine term carries the full Ω₁τ
/// weight produced by expanding e^{−γ̄τ} in the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WdaSplit {
    pub s0: f64,
    pub s1: f64,
    pub r0: f64,
    pub r1: f64,
}

pub fn wda_split(tau: f64, c: &WdaCoefficients, s: &DerivedScales) -> WdaSplit {
    let phase = s.omega1 * tau;
    let (sin, cos) = phase.sin_cos();
    WdaSplit {
        s0: c.y * (cos - 1.0),
        s1: c.a * tau * cos + c.b * tau + c.c * sin,
        r0: c.w * sin,
        r1: c.v * (1.0 - cos - phase * sin),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    Quadrature,
    ClosedForm,
    WdaSplit,
}

/// A correlation-function evaluator bound to one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationFn {
    Quadrature { scales: DerivedScales, hints: QuadratureHints },
    ClosedForm { scales: DerivedScales, coeffs: CorrelationCoefficients },
    WdaSplit { scales: DerivedScales, coeffs: WdaCoefficients },
}

impl CorrelationFn {
    /// Builds the requested evaluator. A closed form with zero thermal width
    /// falls back to the undamped split, whose first-order pieces vanish.
    pub fn new(kind: CorrelationKind, p: &SystemParams, s: &DerivedScales) -> Self {
        match kind {
            CorrelationKind::Quadrature => CorrelationFn::Quadrature {
                scales: *s,
                hints: QuadratureHints::peaked(s.omega1, s.gammabar),
            },
            CorrelationKind::ClosedForm => match closed_form_coefficients(s) {
                Ok(coeffs) => CorrelationFn::ClosedForm { scales: *s, coeffs },
                Err(_) => CorrelationFn::WdaSplit { scales: *s, coeffs: WdaCoefficients::new(p, s) },
            },
            CorrelationKind::WdaSplit => CorrelationFn::WdaSplit { scales: *s, coeffs: WdaCoefficients::new(p, s) },
        }
    }

    pub fn kind(&self) -> CorrelationKind {
        match self {
            CorrelationFn::Quadrature { .. } => CorrelationKind::Quadrature,
            CorrelationFn::ClosedForm { .. } => CorrelationKind::ClosedForm,
            CorrelationFn::WdaSplit { .. } => CorrelationKind::WdaSplit,
        }
    }

    /// (S(τ), R(τ)).
    pub fn eval(&self, tau: f64) -> Result<(f64, f64), CorrelationError> {
        if tau < 0.0 {
            return Err(CorrelationError::NegativeTime(tau));
        }
        match self {
            CorrelationFn::Quadrature { scales, hints } => {
                correlation_quadrature(tau, |w| geff(w, scales), scales.beta, hints)
            }
            CorrelationFn::ClosedForm { scales, coeffs } => Ok(correlation_closed_form(tau, coeffs, scales)),
            CorrelationFn::WdaSplit { scales, coeffs } => {
                let t = wda_split(tau, coeffs, scales);
                Ok((t.s0 + t.s1, t.r0 + t.r1))
            }
        }
    }

    /// Evaluates on τₙ = n·step, n = 0..=n_max, in parallel.
    pub fn eval_grid(&self, step: f64, n_max: usize) -> Result<Vec<(f64, f64)>, CorrelationError> {
        (0..=n_max).into_par_iter().map(|n| self.eval(n as f64 * step)).collect()
    }
}

/// One row of the `correlation` CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRow {
    pub tau: f64,
    pub s_quad: f64,
    pub r_quad: f64,
    pub s_closed: f64,
    pub r_closed: f64,
    pub split: WdaSplit,
}

pub const CORRELATION_HEADER: [&str; 9] = ["tau", "S_quad", "R_quad", "S_closed", "R_closed", "S0", "S1", "R0", "R1"];

/// Tabulates every evaluator on `points` equally spaced times in `[0, tau_max]`.
/// Closed-form columns are NaN when the thermal width vanishes.
pub fn correlation_table(p: &SystemParams, s: &DerivedScales, tau_max: f64, points: usize) -> Result<Vec<CorrelationRow>, CorrelationError> {
    let hints = QuadratureHints::peaked(s.omega1, s.gammabar);
    let closed = closed_form_coefficients(s).ok();
    let wda = WdaCoefficients::new(p, s);
    let denom = points.saturating_sub(1).max(1) as f64;
    (0..points)
        .into_par_iter()
        .map(|i| {
            let tau = tau_max * i as f64 / denom;
            let (s_quad, r_quad) = correlation_quadrature(tau, |w| geff(w, s), s.beta, &hints)?;
            let (s_closed, r_closed) = match &closed {
                Some(c) => correlation_closed_form(tau, c, s),
                None => (f64::NAN, f64::NAN),
            };
            Ok(CorrelationRow { tau, s_quad, r_quad, s_closed, r_closed, split: wda_split(tau, &wda, s) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derived_scales;

    fn fig3() -> (SystemParams, DerivedScales) {
        let p = SystemParams::reference();
        let s = derived_scales(&p);
        (p, s)
    }

    #[test]
    fn zero_time_vanishes() {
        let (p, s) = fig3();
        let c = closed_form_coefficients(&s).unwrap();
        assert_eq!(correlation_closed_form(0.0, &c, &s), (0.0, 0.0));
        let hints = QuadratureHints::peaked(s.omega1, s.gammabar);
        assert_eq!(correlation_quadrature(0.0, |w| geff(w, &s), s.beta, &hints).unwrap(), (0.0, 0.0));
        let t = wda_split(0.0, &WdaCoefficients::new(&p, &s), &s);
        assert_eq!((t.s0, t.s1, t.r0, t.r1), (0.0, 0.0, 0.0, 0.0));
        assert!(matches!(correlation_quadrature(-1.0, |w| w, 1.0, &hints), Err(CorrelationError::NegativeTime(_))));
    }

    #[test]
    fn coefficient_identities() {
        let (_, s) = fig3();
        let c = closed_form_coefficients(&s).unwrap();
        assert!((c.x / c.i - 2.0 / s.beta).abs() < 1e-15);
        let expected_i = 2.0 * PI * s.varsigma / (1.06f64.powi(2) + s.gammabar.powi(2));
        assert!((c.i - expected_i).abs() < 1e-15 * expected_i);
        assert!(c.i > 0.0);
        let varsigma = 0.18f64.powi(2) * SystemParams::reference().gamma * 0.88 / PI;
        assert!((s.varsigma - varsigma).abs() < 1e-15 * varsigma);
    }

    #[test]
    fn low_temperature_limits() {
        let p = SystemParams { beta: 400.0, ..SystemParams::reference() };
        let s = derived_scales(&p);
        let c = closed_form_coefficients(&s).unwrap();
        let l_lim = -c.i * s.omega1 / s.gammabar;
        assert!((c.l - l_lim).abs() < 1e-12 * l_lim.abs());
        assert!((c.z + c.i).abs() < 1e-12 * c.i);
        // And at a finite but large β the exact expression is already within
        // O(sin(βγ̄)/cosh(βΩ₁)) of the limit.
        let p = SystemParams { beta: 30.0, ..SystemParams::reference() };
        let s = derived_scales(&p);
        let c = closed_form_coefficients(&s).unwrap();
        assert!((c.z + c.i).abs() < 1e-10);
    }

    #[test]
    fn zero_damping_is_rejected() {
        let p = SystemParams { gamma: 0.0, ..SystemParams::reference() };
        let s = derived_scales(&p);
        assert_eq!(closed_form_coefficients(&s), Err(CorrelationError::ZeroDamping));
        let f = CorrelationFn::new(CorrelationKind::ClosedForm, &p, &s);
        assert_eq!(f.kind(), CorrelationKind::WdaSplit);
        let (big_s, big_r) = f.eval(1.3).unwrap();
        let c = WdaCoefficients::new(&p, &s);
        assert_eq!(c.v, 0.0);
        assert!((big_s - c.y * ((s.omega1 * 1.3).cos() - 1.0)).abs() < 1e-15);
        assert!((big_r - c.w * (s.omega1 * 1.3).sin()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_asymptotics() {
        let (_, s) = fig3();
        let c = closed_form_coefficients(&s).unwrap();
        let (_, r) = correlation_closed_form(2000.0, &c, &s);
        assert!((r - c.i).abs() < 1e-12);
        // S − Xτ settles to −L.
        let (s_late, _) = correlation_closed_form(2000.0, &c, &s);
        assert!((s_late - c.x * 2000.0 + c.l).abs() < 1e-10);
    }

    #[test]
    fn closed_form_is_non_negative() {
        for g in [0.0018, 0.18] {
            for alpha in [0.0, 0.02] {
                let p = SystemParams { g, alpha, ..SystemParams::reference() };
                let s = derived_scales(&p);
                let c = closed_form_coefficients(&s).unwrap();
                for i in 0..20_000 {
                    let (big_s, _) = correlation_closed_form(i as f64 * 0.005, &c, &s);
                    assert!(big_s >= 0.0, "g={g} alpha={alpha} tau={}", i as f64 * 0.005);
                }
            }
        }
    }

    #[test]
    fn wda_zeroth_order_coefficient() {
        let (p, s) = fig3();
        let c = WdaCoefficients::new(&p, &s);
        let w = 4.0 * 0.18f64.powi(2) * 0.88 / (1.06 * (2.0 * s.nth + 1.0));
        assert!((c.w - w).abs() < 1e-15);
        assert!(c.w > 0.0 && c.y < 0.0);
        assert!((c.a + s.gammabar * c.y).abs() < 1e-18);
        assert!((c.b - 2.0 * c.v / p.beta).abs() < 1e-18);
        // Y² − W² = W² / sinh²(βΩ₁/2)
        let lhs = c.y * c.y - c.w * c.w;
        let rhs = (c.w / (0.5 * p.beta * s.omega1).sinh()).powi(2);
        assert!((lhs - rhs).abs() < 1e-9 * rhs);
    }

    #[test]
    fn wda_split_tracks_closed_form_to_second_order() {
        // Halving γ cuts max|S − S₀ − S₁| by close to four.
        let residual = |gamma: f64| {
            let p = SystemParams { gamma, ..SystemParams::reference() };
            let s = derived_scales(&p);
            let c = closed_form_coefficients(&s).unwrap();
            let w = WdaCoefficients::new(&p, &s);
            (0..=2000)
                .map(|i| {
                    let tau = 20.0 * i as f64 / 2000.0;
                    let (big_s, big_r) = correlation_closed_form(tau, &c, &s);
                    let t = wda_split(tau, &w, &s);
                    ((big_s - t.s0 - t.s1).abs(), (big_r - t.r0 - t.r1).abs())
                })
                .fold((0.0f64, 0.0f64), |acc, x| (acc.0.max(x.0), acc.1.max(x.1)))
        };
        let gamma = SystemParams::reference().gamma;
        let (s_full, r_full) = residual(gamma);
        let (s_half, r_half) = residual(gamma / 2.0);
        assert!(s_full / s_half >= 3.5, "S ratio {}", s_full / s_half);
        // γ̄τ reaches ~1 at the end of the window, so R sits just under four.
        assert!(r_full / r_half >= 3.0, "R ratio {}", r_full / r_half);
    }

    #[test]
    fn first_order_r_matches_quadrature() {
        // At θ = Ω₁τ = (k + ½)π the R₁ sine term is largest; quadrature of the
        // true integral must agree with R₀ + R₁ to O(γ²) and reject a half-weight term.
        let p = SystemParams { gamma: SystemParams::reference().gamma / 4.0, ..SystemParams::reference() };
        let s = derived_scales(&p);
        let c = WdaCoefficients::new(&p, &s);
        let hints = QuadratureHints::peaked(s.omega1, s.gammabar);
        for k in [1.5, 2.5] {
            let tau = k * PI / s.omega1;
            let (_, r_quad) = correlation_quadrature(tau, |w| geff(w, &s), s.beta, &hints).unwrap();
            let t = wda_split(tau, &c, &s);
            let full = t.r0 + t.r1;
            let phase = s.omega1 * tau;
            let half_weight = full + 0.5 * c.v * phase * phase.sin();
            assert!((full - r_quad).abs() < 1e-3, "k={k} {full} {r_quad}");
            assert!((half_weight - r_quad).abs() > 2.0 * (full - r_quad).abs());
        }
    }

    #[test]
    fn ohmic_zero_temperature_oracle() {
        // G = 2Kω e^{−ω/ωc}: S = K ln(1 + ωc²τ²), R = 2K arctan(ωc τ) at T = 0.
        let (k, wc, beta) = (0.1, 50.0, 1e7);
        let hints = QuadratureHints { breakpoints: vec![wc], tail_start: 20.0 * wc };
        let mut last_r = 0.0;
        for &tau in &[0.01, 0.1, 1.0, 5.0, 20.0] {
            let (s, r) = correlation_quadrature(tau, |w: f64| 2.0 * k * w * (-w / wc).exp(), beta, &hints).unwrap();
            let s_exact = k * (1.0 + (wc * tau).powi(2)).ln();
            let r_exact = 2.0 * k * (wc * tau).atan();
            assert!((s - s_exact).abs() < 1e-6, "tau={tau} S={s} exact={s_exact}");
            assert!((r - r_exact).abs() < 1e-6, "tau={tau} R={r} exact={r_exact}");
            assert!(r >= last_r);
            last_r = r;
        }
        assert!((last_r - PI * k).abs() < 2e-3);
    }

    #[test]
    fn quadrature_long_time_limits() {
        // R(∞) = I and dS/dτ → X hold exactly for the true integral as well.
        let (_, s) = fig3();
        let c = closed_form_coefficients(&s).unwrap();
        let hints = QuadratureHints::peaked(s.omega1, s.gammabar);
        let (s1, r1) = correlation_quadrature(300.0, |w| geff(w, &s), s.beta, &hints).unwrap();
        let (s2, _) = correlation_quadrature(310.0, |w| geff(w, &s), s.beta, &hints).unwrap();
        assert!((r1 - c.i).abs() < 1e-5, "{r1} {}", c.i);
        assert!(((s2 - s1) / 10.0 - c.x).abs() < 2e-5, "{} {}", (s2 - s1) / 10.0, c.x);
    }
}
