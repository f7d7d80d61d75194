//! Weak-damping analytic solution for the unbiased qubit.
//!
//! The NIBA kernel is expanded to first order in the damping and its
//! zeroth-order factor e^{−S₀}{cos R₀, sin R₀} is written as a Bessel series
//! in the harmonics nΩ₁τ, truncated at n ≤ 1. The undamped pole equation then
//! reduces to a quadratic in λ², and the first-order kernel shifts the poles
//! off the imaginary axis. Those shifts are found here by Newton iteration on
//! the exact Laplace transform of the truncated kernel.

use num_complex::Complex64;
use thiserror::Error;

use crate::correlation::{wda_split, WdaCoefficients};
use crate::gme::{SeriesMeta, TimeSeries};
use crate::numerics::bessel::{bessel_i, bessel_j};
use crate::params::{derived_scales, DerivedScales, SystemParams};

pub const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WdaError {
    #[error("|u0| = {0:.4} ≥ 1: the n ≤ 1 truncation of the kernel series is not justified")]
    TruncationInvalid(f64),
    #[error("pole equation has no real positive frequencies (λ² = {0:e}, {1:e})")]
    ComplexFrequency(f64, f64),
    #[error("Newton iteration from iΩ = {seed:.6}i did not converge (|residual| = {residual:e})")]
    NoConvergence { seed: f64, residual: f64 },
    #[error("root seeded at iΩ = {seed:.6}i converged to {root}, nearer the other pole")]
    RootSwap { seed: f64, root: Complex64 },
}

/// Effective tunneling amplitudes of the truncated kernel series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTunneling {
    /// Bessel argument; purely imaginary, u₀ = i·W / sinh(βΩ₁/2).
    pub u0: Complex64,
    pub delta0c: f64,
    pub delta1c: f64,
    pub delta1s: f64,
    /// Y² − W² as computed from the raw coefficients (may suffer cancellation).
    pub raw_radicand: f64,
}

impl EffectiveTunneling {
    pub fn delta0c_sq(&self) -> f64 {
        self.delta0c * self.delta0c
    }
    pub fn delta1c_sq(&self) -> f64 {
        self.delta1c * self.delta1c
    }
    pub fn delta1s_sq(&self) -> f64 {
        self.delta1s * self.delta1s
    }
}

/// Δ₀c² = Δ² e^Y J₀(u₀), Δ₁c² = Δ² e^Y |u₀| cosh(βΩ₁/2),
/// Δ₁s² = Δ² e^Y |u₀| sinh(βΩ₁/2).
///
/// |u₀| ≥ 1 is logged, or returned as an error when `strict`.
pub fn effective_tunneling(
    c: &WdaCoefficients,
    s: &DerivedScales,
    delta: f64,
    strict: bool,
) -> Result<EffectiveTunneling, WdaError> {
    let half = 0.5 * s.beta * s.omega1;
    let r = c.w / half.sinh();
    let raw_radicand = c.y * c.y - c.w * c.w;
    if raw_radicand < 0.0 {
        log::warn!("Y² − W² = {raw_radicand:e} < 0; using the simplified u0 = iW/sinh(βΩ₁/2)");
    }
    if r >= 1.0 {
        if strict {
            return Err(WdaError::TruncationInvalid(r));
        }
        log::warn!("|u0| = {r:.4} ≥ 1: n ≤ 1 truncation of the kernel series is questionable");
    }
    let u0 = Complex64::new(0.0, r);
    let base = delta * delta * c.y.exp();
    let d0 = base * bessel_j(0, u0).re;
    let d1c = base * r * half.cosh();
    let d1s = base * r * half.sinh();
    Ok(EffectiveTunneling { u0, delta0c: d0.sqrt(), delta1c: d1c.sqrt(), delta1s: d1s.sqrt(), raw_radicand })
}

/// Undamped oscillation frequencies and the corresponding λ² roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleFrequencies {
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// λ₊² = −Ω₊² (the root of smaller magnitude).
    pub lambda2_plus: f64,
    pub lambda2_minus: f64,
    pub delta0c_sq: f64,
    pub delta1c_sq: f64,
}

impl PoleFrequencies {
    /// Amplitudes w± = (λ±² + Ω₁²)/(λ±² − λ∓²). The smaller one is computed
    /// directly and the other as its complement, so that they sum to one.
    /// Without qubit-oscillator coupling (Δ₁c = 0) the whole weight sits on
    /// the bare tunneling pole λ² = −Δ₀c², which also covers the degenerate
    /// case Δ₀c = Ω₁.
    pub fn weights(&self, omega1: f64) -> (f64, f64) {
        let b = omega1 * omega1;
        if self.lambda2_plus == self.lambda2_minus || (self.delta1c_sq == 0.0) {
            return if self.lambda2_plus == -self.delta0c_sq { (1.0, 0.0) } else { (0.0, 1.0) };
        }
        let wp = (self.lambda2_plus + b) / (self.lambda2_plus - self.lambda2_minus);
        let wm = (self.lambda2_minus + b) / (self.lambda2_minus - self.lambda2_plus);
        if wp.abs() <= wm.abs() {
            (wp, 1.0 - wp)
        } else {
            (1.0 - wm, wm)
        }
    }
}

/// Roots of λ⁴ + (Δ₀c² + Ω₁² + Δ₁c²) λ² + Δ₀c² Ω₁² = 0:
///
/// ```text
/// λ±² = −(a+b+c)/2 ± √[((a−b)/2)² + (c/2)(a + b + c/2)],  a = Δ₀c², b = Ω₁², c = Δ₁c².
/// ```
pub fn pole_frequencies(delta0c: f64, delta1c: f64, omega1: f64) -> Result<PoleFrequencies, WdaError> {
    let (a, b, c) = (delta0c * delta0c, omega1 * omega1, delta1c * delta1c);
    let radicand = (0.5 * (a - b)).powi(2) + 0.5 * c * (a + b + 0.5 * c);
    let mid = -0.5 * (a + b + c);
    let root = radicand.sqrt();
    let (lp, lm) = (mid + root, mid - root);
    if !(radicand >= 0.0) || !(lp < 0.0) || !lm.is_finite() {
        return Err(WdaError::ComplexFrequency(lp, lm));
    }
    // Vieta for the smaller root avoids cancellation in mid + root.
    let lp = a * b / lm;
    Ok(PoleFrequencies {
        omega_plus: (-lp).sqrt(),
        omega_minus: (-lm).sqrt(),
        lambda2_plus: lp,
        lambda2_minus: lm,
        delta0c_sq: a,
        delta1c_sq: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// coef · τ^power · trig(harmonic · Ω₁ τ), power ∈ {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub power: u8,
    pub trig: Trig,
    pub harmonic: i32,
}

impl Term {
    fn new(coef: f64, power: u8, trig: Trig, harmonic: i32) -> Self {
        // Fold negative harmonics: cos(−x) = cos x, sin(−x) = −sin x.
        if harmonic < 0 {
            let sign = if trig == Trig::Sin { -1.0 } else { 1.0 };
            Term { coef: sign * coef, power, trig, harmonic: -harmonic }
        } else {
            Term { coef, power, trig, harmonic }
        }
    }

    fn mul(&self, o: &Term) -> [Term; 2] {
        let c = 0.5 * self.coef * o.coef;
        let p = self.power + o.power;
        let (d, s) = (self.harmonic - o.harmonic, self.harmonic + o.harmonic);
        match (self.trig, o.trig) {
            (Trig::Cos, Trig::Cos) => [Term::new(c, p, Trig::Cos, d), Term::new(c, p, Trig::Cos, s)],
            (Trig::Sin, Trig::Sin) => [Term::new(c, p, Trig::Cos, d), Term::new(-c, p, Trig::Cos, s)],
            (Trig::Sin, Trig::Cos) => [Term::new(c, p, Trig::Sin, d), Term::new(c, p, Trig::Sin, s)],
            (Trig::Cos, Trig::Sin) => [Term::new(-c, p, Trig::Sin, d), Term::new(c, p, Trig::Sin, s)],
        }
    }
}

/// A kernel written as a finite sum of [`Term`]s with base frequency Ω₁.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSeries {
    pub omega1: f64,
    pub terms: Vec<Term>,
}

impl KernelSeries {
    fn product(a: &[Term], b: &[Term], omega1: f64) -> Self {
        let mut terms: Vec<Term> = Vec::new();
        for x in a {
            for y in b {
                for t in x.mul(y) {
                    if t.coef == 0.0 || (t.trig == Trig::Sin && t.harmonic == 0) {
                        continue;
                    }
                    match terms
                        .iter_mut()
                        .find(|u| u.power == t.power && u.trig == t.trig && u.harmonic == t.harmonic)
                    {
                        Some(u) => u.coef += t.coef,
                        None => terms.push(t),
                    }
                }
            }
        }
        KernelSeries { omega1, terms }
    }

    fn extend(&mut self, other: KernelSeries) {
        for t in other.terms {
            match self
                .terms
                .iter_mut()
                .find(|u| u.power == t.power && u.trig == t.trig && u.harmonic == t.harmonic)
            {
                Some(u) => u.coef += t.coef,
                None => self.terms.push(t),
            }
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let x = t.harmonic as f64 * self.omega1 * tau;
                let f = match t.trig {
                    Trig::Cos => x.cos(),
                    Trig::Sin => x.sin(),
                };
                t.coef * tau.powi(t.power as i32) * f
            })
            .sum()
    }

    /// Laplace transform K(λ) and its derivative K′(λ).
    pub fn laplace(&self, lambda: Complex64) -> (Complex64, Complex64) {
        let l2 = lambda * lambda;
        let mut k = Complex64::new(0.0, 0.0);
        let mut dk = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let w = t.harmonic as f64 * self.omega1;
            let w2 = w * w;
            let q = l2 + w2;
            let (f, df) = match (t.power, t.trig) {
                (0, Trig::Cos) => (lambda / q, (w2 - l2) / (q * q)),
                (0, Trig::Sin) => (w / q, -2.0 * lambda * w / (q * q)),
                (_, Trig::Cos) => ((l2 - w2) / (q * q), 2.0 * lambda * (3.0 * w2 - l2) / (q * q * q)),
                (_, Trig::Sin) => (2.0 * lambda * w / (q * q), 2.0 * w * (w2 - 3.0 * l2) / (q * q * q)),
            };
            k += t.coef * f;
            dk += t.coef * df;
        }
        (k, dk)
    }
}

/// Harmonic cut-off of the Bessel series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// n ≤ 1 with the leading-order amplitudes Δ₀c, Δ₁c, Δ₁s.
    #[default]
    First,
    /// n ≤ 2 with exact Bessel amplitudes; only for truncation-error estimates.
    Second,
}

/// The first-order symmetric kernel
///
/// ```text
/// Kˢ(τ) = Δ² e^{−S₀}[cos R₀ (1 − S₁) − sin R₀ R₁]
/// ```
///
/// with e^{−S₀} cos R₀ and e^{−S₀} sin R₀ replaced by their truncated series.
pub fn truncated_kernel(
    c: &WdaCoefficients,
    s: &DerivedScales,
    tunneling: &EffectiveTunneling,
    delta: f64,
    truncation: Truncation,
) -> KernelSeries {
    let w1 = s.omega1;
    let (even, odd): (Vec<Term>, Vec<Term>) = match truncation {
        Truncation::First => (
            vec![
                Term::new(tunneling.delta0c_sq(), 0, Trig::Cos, 0),
                Term::new(tunneling.delta1c_sq(), 0, Trig::Cos, 1),
            ],
            vec![Term::new(tunneling.delta1s_sq(), 0, Trig::Sin, 1)],
        ),
        Truncation::Second => {
            let r = tunneling.u0.im;
            let x = 0.5 * s.beta * w1;
            let base = delta * delta * c.y.exp();
            let mut even = vec![Term::new(base * bessel_i(0, r), 0, Trig::Cos, 0)];
            let mut odd = Vec::new();
            for n in 1..=2 {
                let amp = 2.0 * base * bessel_i(n as u32, r);
                let nx = n as f64 * x;
                even.push(Term::new(amp * nx.cosh(), 0, Trig::Cos, n));
                odd.push(Term::new(amp * nx.sinh(), 0, Trig::Sin, n));
            }
            (even, odd)
        }
    };
    // 1 − S₁ = 1 − Aτ cos θ − Bτ − C sin θ
    let one_minus_s1 = [
        Term::new(1.0, 0, Trig::Cos, 0),
        Term::new(-c.a, 1, Trig::Cos, 1),
        Term::new(-c.b, 1, Trig::Cos, 0),
        Term::new(-c.c, 0, Trig::Sin, 1),
    ];
    // −R₁ = −V(1 − cos θ − Ω₁τ sin θ)
    let minus_r1 = [
        Term::new(-c.v, 0, Trig::Cos, 0),
        Term::new(c.v, 0, Trig::Cos, 1),
        Term::new(c.v * w1, 1, Trig::Sin, 1),
    ];
    let mut k = KernelSeries::product(&even, &one_minus_s1, w1);
    k.extend(KernelSeries::product(&odd, &minus_r1, w1));
    k
}

/// Complex poles near iΩ± and the decay rates they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub root_plus: Complex64,
    pub root_minus: Complex64,
    /// −Re λ* for each pole (equals γκ±).
    pub rate_plus: f64,
    pub rate_minus: f64,
}

impl DecayRates {
    /// Dimensionless κ± = rate / γ; zero when γ = 0.
    pub fn kappas(&self, gamma: f64) -> (f64, f64) {
        if gamma > 0.0 {
            (self.rate_plus / gamma, self.rate_minus / gamma)
        } else {
            (0.0, 0.0)
        }
    }
}

fn newton(kernel: &KernelSeries, seed: f64, other: f64, scale: f64) -> Result<Complex64, WdaError> {
    let mut lambda = Complex64::new(0.0, seed);
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let (k, dk) = kernel.laplace(lambda);
        let f = lambda + k;
        residual = f.norm();
        if residual < NEWTON_TOL * scale {
            if (lambda.im - other).abs() < (lambda.im - seed).abs() {
                return Err(WdaError::RootSwap { seed, root: lambda });
            }
            return Ok(lambda);
        }
        lambda -= f / (1.0 + dk);
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            break;
        }
    }
    Err(WdaError::NoConvergence { seed, residual })
}

/// Solves λ + Kˢ(λ) = 0 by complex Newton iteration seeded at iΩ±.
/// Converged when |λ + Kˢ(λ)| < 1e−12·Δ²/Ω. A pole that carries no weight
/// in P(t) is not searched for and keeps its undamped position.
pub fn decay_rates(kernel: &KernelSeries, poles: &PoleFrequencies, delta: f64, omega: f64) -> Result<DecayRates, WdaError> {
    let scale = (delta * delta / omega).max(f64::MIN_POSITIVE);
    let (wp, wm) = poles.weights(kernel.omega1);
    let find = |w: f64, seed: f64, other: f64| {
        if w == 0.0 {
            Ok(Complex64::new(0.0, seed))
        } else {
            newton(kernel, seed, other, scale)
        }
    };
    let root_plus = find(wp, poles.omega_plus, poles.omega_minus)?;
    let root_minus = find(wm, poles.omega_minus, poles.omega_plus)?;
    Ok(DecayRates { root_plus, root_minus, rate_plus: -root_plus.re, rate_minus: -root_minus.re })
}

/// Everything the analytic P(t) needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WdaSpectrum {
    pub tunneling: EffectiveTunneling,
    pub poles: PoleFrequencies,
    pub decay: DecayRates,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub gamma: f64,
    pub omega1: f64,
}

impl WdaSpectrum {
    pub fn omega_plus(&self) -> f64 {
        self.poles.omega_plus
    }
    pub fn omega_minus(&self) -> f64 {
        self.poles.omega_minus
    }
    pub fn weights(&self) -> (f64, f64) {
        self.poles.weights(self.omega1)
    }
}

/// Full weak-damping analysis for `p` (bias is ignored; the solution is for ε = 0).
pub fn wda_spectrum(p: &SystemParams, strict: bool) -> Result<WdaSpectrum, WdaError> {
    wda_spectrum_with(p, &derived_scales(p), strict, Truncation::First)
}

pub fn wda_spectrum_with(
    p: &SystemParams,
    s: &DerivedScales,
    strict: bool,
    truncation: Truncation,
) -> Result<WdaSpectrum, WdaError> {
    if p.epsilon != 0.0 {
        log::warn!("weak-damping solution assumes ε = 0; ignoring ε = {}", p.epsilon);
    }
    let c = WdaCoefficients::new(p, s);
    let tunneling = effective_tunneling(&c, s, p.delta, strict)?;
    let poles = pole_frequencies(tunneling.delta0c, tunneling.delta1c, s.omega1)?;
    let kernel = truncated_kernel(&c, s, &tunneling, p.delta, truncation);
    let decay = decay_rates(&kernel, &poles, p.delta, p.omega)?;
    let (kappa_plus, kappa_minus) = decay.kappas(p.gamma);
    Ok(WdaSpectrum { tunneling, poles, decay, kappa_plus, kappa_minus, gamma: p.gamma, omega1: s.omega1 })
}

/// Σ± e^{−γκ± t} w± [cos Ω± t − (γκ±/Ω±) sin Ω± t].
///
/// Note Ṗ(0) = −2Σ w± γκ± rather than the zero the master equation implies;
/// the mismatch is first order in γ, like the rest of the expansion.
pub fn wda_population(t: f64, spec: &WdaSpectrum) -> f64 {
    let (wp, wm) = spec.weights();
    let branch = |w: f64, rate: f64, om: f64| {
        let (sin, cos) = (om * t).sin_cos();
        (-rate * t).exp() * w * (cos - rate / om * sin)
    };
    branch(wp, spec.decay.rate_plus, spec.poles.omega_plus) + branch(wm, spec.decay.rate_minus, spec.poles.omega_minus)
}

/// [`wda_population`] sampled on t = n·step up to `horizon`.
pub fn wda_series(spec: &WdaSpectrum, step: f64, horizon: f64) -> TimeSeries {
    let n = (horizon / step - 1e-9).ceil() as usize;
    TimeSeries {
        step,
        values: (0..=n).map(|i| wda_population(i as f64 * step, spec)).collect(),
        meta: SeriesMeta { params: None, order: 0, source: "wda" },
    }
}

/// Which resonance the analysis is anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResonanceCondition {
    /// Bare qubit and oscillator degenerate, Δ = Ω.
    #[default]
    DeltaEqualsOmega,
    /// Dressed resonance Ω₁ = Δ₀c.
    DressedResonance,
}

/// Which expansion of the pole frequencies applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingBranch {
    /// g ≥ α: split Ω∓ = Ω + 3α/2 ± g(1 − 3α/2Ω) around the mean.
    Splitting,
    /// g < α: Ω₊ = Ω, Ω₋ = Ω₁ (qubit and oscillator transitions decouple).
    WeakCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceReport {
    pub condition: ResonanceCondition,
    pub branch: CouplingBranch,
    /// Frequencies from the full pole equation.
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// Lowest-order expansion of the selected branch and condition.
    pub approx_plus: f64,
    pub approx_minus: f64,
    /// 2g(1 − 3α/2Ω).
    pub bs_shift: f64,
    /// Distance from the selected resonance (Δ − Ω or Ω₁ − Δ₀c).
    pub detuning: f64,
}

pub fn bloch_siegert_shift(g: f64, alpha: f64, omega: f64) -> f64 {
    2.0 * g * (1.0 - 1.5 * alpha / omega)
}

pub fn resonance_analysis(p: &SystemParams, condition: ResonanceCondition) -> Result<ResonanceReport, WdaError> {
    let s = derived_scales(p);
    let c = WdaCoefficients::new(p, &s);
    let t = effective_tunneling(&c, &s, p.delta, false)?;
    let poles = pole_frequencies(t.delta0c, t.delta1c, s.omega1)?;
    let branch = if p.g < p.alpha { CouplingBranch::WeakCoupling } else { CouplingBranch::Splitting };
    let bs_shift = bloch_siegert_shift(p.g, p.alpha, p.omega);
    let (approx_plus, approx_minus, detuning) = match (condition, branch) {
        (ResonanceCondition::DeltaEqualsOmega, CouplingBranch::Splitting) => {
            let mid = p.omega + 1.5 * p.alpha;
            (mid - 0.5 * bs_shift, mid + 0.5 * bs_shift, p.delta - p.omega)
        }
        (ResonanceCondition::DeltaEqualsOmega, CouplingBranch::WeakCoupling) => (p.omega, s.omega1, p.delta - p.omega),
        (ResonanceCondition::DressedResonance, _) => {
            (s.omega1 - 0.5 * t.delta1c, s.omega1 + 0.5 * t.delta1c, s.omega1 - t.delta0c)
        }
    };
    if detuning.abs() > 1e-9 * p.omega {
        log::warn!("resonance analysis at detuning {detuning:e}; lowest-order frequencies may not apply");
    }
    Ok(ResonanceReport {
        condition,
        branch,
        omega_plus: poles.omega_plus,
        omega_minus: poles.omega_minus,
        approx_plus,
        approx_minus,
        bs_shift,
        detuning,
    })
}

/// Direct first-order kernel Δ² e^{−S₀}[cos R₀(1 − S₁) − sin R₀ R₁], without
/// the Bessel series; reference for [`truncated_kernel`].
pub fn first_order_kernel(tau: f64, c: &WdaCoefficients, s: &DerivedScales, delta: f64) -> f64 {
    let w = wda_split(tau, c, s);
    delta * delta * (-w.s0).exp() * (w.r0.cos() * (1.0 - w.s1) - w.r0.sin() * w.r1)
}
