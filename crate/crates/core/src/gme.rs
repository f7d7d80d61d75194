//! NIBA kernels and the time-domain solver for the generalized master equation
//!
//! ```text
//! Ṗ(t) = −∫₀ᵗ dt′ [Kˢ(t − t′) P(t′) + Kᵃ(t′)],   P(0) = 1.
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::correlation::{CorrelationError, CorrelationFn, CorrelationKind};
use crate::params::{derived_scales, SystemParams};

/// Largest admissible h·ω for the fastest frequency in the problem.
pub const MAX_PHASE_STEP: f64 = 2.0 * PI / 40.0;
/// Points per period of the fastest frequency at the default step.
pub const DEFAULT_POINTS_PER_PERIOD: f64 = 80.0;
pub const DEFAULT_HORIZON: f64 = 100.0;

// |P| beyond this is treated as a blow-up.
const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmeError {
    #[error("step {step} too large: h·ω = {phase:.4} exceeds 2π/40 for ω = {omega}")]
    StepTooLarge { step: f64, omega: f64, phase: f64 },
    #[error("solution left the finite range at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("kernel grid covers t ≤ {available} but horizon {requested} was requested")]
    GridTooShort { available: f64, requested: f64 },
    #[error("step and horizon must be positive (step {step}, horizon {horizon})")]
    BadGrid { step: f64, horizon: f64 },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

/// Kˢ and Kᵃ sampled on tₙ = n·h.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub step: f64,
    pub ks: Vec<f64>,
    pub ka: Vec<f64>,
    /// Fastest frequency the kernels carry (max of Ω₁, Δ); bounds the step.
    pub omega_max: f64,
}

impl KernelGrid {
    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    /// Time of the last sample.
    pub fn span(&self) -> f64 {
        self.step * (self.len().saturating_sub(1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMeta {
    pub params: Option<SystemParams>,
    /// Nominal global order of the scheme that produced the series.
    pub order: u32,
    pub source: &'static str,
}

/// Uniformly sampled P(t), P[0] at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub step: f64,
    pub values: Vec<f64>,
    pub meta: SeriesMeta,
}

impl TimeSeries {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |n| n as f64 * self.step)
    }

    /// Values on t ≤ `t_max`.
    pub fn up_to(&self, t_max: f64) -> &[f64] {
        let n = ((t_max / self.step) + 1e-9).floor() as usize + 1;
        &self.values[..n.min(self.values.len())]
    }
}

/// Default step 2π / (80·max(Ω₁, Δ)).
pub fn default_step(omega1: f64, delta: f64) -> f64 {
    2.0 * PI / (DEFAULT_POINTS_PER_PERIOD * omega1.max(delta))
}

/// Kˢ(t) = Δ² e^{−S} cos R cos εt and Kᵃ(t) = Δ² e^{−S} sin R sin εt
/// on `samples` points of spacing `step`. The fill runs in parallel.
pub fn niba_kernels(
    step: f64,
    samples: usize,
    corr: &CorrelationFn,
    delta: f64,
    epsilon: f64,
    omega_max: f64,
) -> Result<KernelGrid, GmeError> {
    let sr = corr.eval_grid(step, samples.saturating_sub(1))?;
    let d2 = delta * delta;
    let (ks, ka) = sr
        .par_iter()
        .enumerate()
        .map(|(n, &(s, r))| {
            let t = n as f64 * step;
            let env = d2 * (-s).exp();
            let (sin_e, cos_e) = (epsilon * t).sin_cos();
            (env * r.cos() * cos_e, env * r.sin() * sin_e)
        })
        .unzip();
    Ok(KernelGrid { step, ks, ka, omega_max })
}

/// Integrates the master equation up to `horizon`.
///
/// The memory integral is discretized with trapezoid weights ½, 1, …, 1, ½ and
/// the time derivative with the implicit trapezoid rule. The unknown P_{n+1}
/// enters linearly, so each step is solved exactly rather than by iteration:
///
/// ```text
/// P_{n+1} (1 + h²Kˢ₀/4) = P_n + (h/2)(F_n + H_{n+1})
/// ```
///
/// where H_{n+1} is the right-hand side at t_{n+1} without its P_{n+1} term.
/// Global error O(h²); cost O(N²).
pub fn solve_gme(grid: &KernelGrid, horizon: f64) -> Result<TimeSeries, GmeError> {
    let h = grid.step;
    if !(h > 0.0) || !(horizon > 0.0) {
        return Err(GmeError::BadGrid { step: h, horizon });
    }
    let phase = h * grid.omega_max;
    if phase > MAX_PHASE_STEP * (1.0 + 1e-12) {
        return Err(GmeError::StepTooLarge { step: h, omega: grid.omega_max, phase });
    }
    let n_steps = (horizon / h - 1e-9).ceil() as usize;
    if grid.len() < n_steps + 1 {
        return Err(GmeError::GridTooShort { available: grid.span(), requested: horizon });
    }

    let ks = &grid.ks;
    // Ia_n = ∫₀^{t_n} Kᵃ, cumulative trapezoid.
    let mut ia = vec![0.0; n_steps + 1];
    for n in 1..=n_steps {
        ia[n] = ia[n - 1] + 0.5 * h * (grid.ka[n - 1] + grid.ka[n]);
    }

    let mut p = Vec::with_capacity(n_steps + 1);
    p.push(1.0);
    let denom = 1.0 + 0.25 * h * h * ks[0];
    let mut f_prev = 0.0;
    for n in 0..n_steps {
        // Σ_{j=1..n} Kˢ(t_{n+1−j}) P_j
        let hist: f64 = p[1..].iter().zip(ks[1..=n].iter().rev()).map(|(a, b)| a * b).sum();
        let h_next = -h * (0.5 * ks[n + 1] * p[0] + hist) - ia[n + 1];
        let next = (p[n] + 0.5 * h * (f_prev + h_next)) / denom;
        if !next.is_finite() || next.abs() > DIVERGENCE_BOUND {
            return Err(GmeError::NonFiniteState { t: (n + 1) as f64 * h });
        }
        f_prev = h_next - 0.5 * h * ks[0] * next;
        p.push(next);
    }
    Ok(TimeSeries { step: h, values: p, meta: SeriesMeta { params: None, order: 2, source: "niba" } })
}

/// Solver settings for a full NIBA run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NibaSettings {
    /// Time step; `None` selects [`default_step`].
    pub step: Option<f64>,
    pub horizon: f64,
    pub correlation: CorrelationKind,
}

impl Default for NibaSettings {
    fn default() -> Self {
        NibaSettings { step: None, horizon: DEFAULT_HORIZON, correlation: CorrelationKind::ClosedForm }
    }
}

/// Kernels plus solve for one parameter set.
pub fn run_niba(p: &SystemParams, settings: &NibaSettings) -> Result<TimeSeries, GmeError> {
    let s = derived_scales(p);
    let omega_max = s.omega1.max(p.delta);
    let step = settings.step.unwrap_or_else(|| default_step(s.omega1, p.delta));
    if !(step > 0.0) || !(settings.horizon > 0.0) {
        return Err(GmeError::BadGrid { step, horizon: settings.horizon });
    }
    let samples = (settings.horizon / step - 1e-9).ceil() as usize + 1;
    let corr = CorrelationFn::new(settings.correlation, p, &s);
    let grid = niba_kernels(step, samples, &corr, p.delta, p.epsilon, omega_max)?;
    let mut ts = solve_gme(&grid, settings.horizon)?;
    ts.meta.params = Some(*p);
    Ok(ts)
}
