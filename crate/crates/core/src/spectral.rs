//! Spectral densities of the bare and effective baths, and the linear
//! susceptibility of the damped quantum Duffing oscillator.
//!
//! The nonlinear effective density has two independent code paths: the direct
//! closed form ([`nonlinear_effective_density`]) and −ḡ²χ'' built from
//! [`chi_imag`]. Both take |ω| in the detuning and in the 2Ω₁/(|ω|+Ω₁) factor
//! with a single bare ω prefactor, so every density here is odd in ω.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{find_peak, Peak};
use crate::params::{convert_couplings, DerivedScales, ParamError, SystemParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("effective damping is singular at omega = 0; use the low-frequency slope")]
    DivisionByZero,
    #[error("drive amplitude must be positive, got {0}")]
    ZeroDrive(f64),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Ohmic density J(ω) = ηω.
pub fn ohmic_density(omega: f64, eta: f64) -> f64 {
    eta * omega
}

/// Lorentzian-like density of a qubit coupled to a damped harmonic oscillator:
/// J = ḡ²γω / [M(Ω²−ω²)² + Mγ²ω²].
pub fn linear_effective_density(w: f64, gbar: f64, gamma: f64, omega: f64, mass: f64) -> f64 {
    let detune = omega * omega - w * w;
    gbar * gbar * gamma * w / (mass * detune * detune + mass * gamma * gamma * w * w)
}

/// Imaginary part of the Duffing susceptibility in the vanishing-drive limit,
/// with the bare Ohmic J(ω) = Mγω inside.
pub fn chi_imag(w: f64, p: &SystemParams, s: &DerivedScales) -> f64 {
    let y04 = s.y0.powi(4);
    let n14 = s.n1_pow4();
    let j_drive = ohmic_density(w, p.mass * p.gamma);
    let j_res = ohmic_density(s.omega1, p.mass * p.gamma);
    let abs_w = w.abs();
    let num = y04 * j_drive * n14 * (2.0 * s.omega1 / (abs_w + s.omega1));
    let thermal = s.thermal_factor();
    let den = y04 * j_res * j_res * n14 * thermal * thermal + 4.0 * (abs_w - s.omega1).powi(2);
    -num / den
}

/// Effective spectral density of the qubit coordinate seen through the
/// nonlinear oscillator, evaluated directly from its closed form.
pub fn nonlinear_effective_density(w: f64, p: &SystemParams, s: &DerivedScales) -> Result<f64, ParamError> {
    let gbar = convert_couplings(p)?.gbar;
    Ok(nonlinear_effective_density_with(w, gbar, p, s))
}

fn nonlinear_effective_density_with(w: f64, gbar: f64, p: &SystemParams, s: &DerivedScales) -> f64 {
    let abs_w = w.abs();
    let n14 = s.n1_pow4();
    let thermal = s.thermal_factor();
    let num = p.gamma * w * n14 * (2.0 * s.omega1 / (abs_w + s.omega1));
    let den = p.mass * p.gamma * p.gamma * s.omega1 * s.omega1 * thermal * thermal * n14
        + 4.0 * p.mass * p.omega * p.omega * (abs_w - s.omega1).powi(2);
    gbar * gbar * num / den
}

/// Mapping identity J_eff = −ḡ²χ''.
pub fn effective_density_from_susceptibility(w: f64, p: &SystemParams, s: &DerivedScales) -> Result<f64, ParamError> {
    let gbar = convert_couplings(p)?.gbar;
    Ok(-gbar * gbar * chi_imag(w, p, s))
}

/// G_eff(ω) = 2ςΩ² ω [2Ω₁/(|ω|+Ω₁)] / [γ̄² + (|ω|−Ω₁)²], the combination
/// q₀²J_eff/πħ that enters the bath correlation function.
pub fn geff(w: f64, s: &DerivedScales) -> f64 {
    let abs_w = w.abs();
    let shape = 2.0 * s.omega1 / (abs_w + s.omega1);
    2.0 * s.varsigma * s.omega * s.omega * w * shape / (s.gammabar * s.gammabar + (abs_w - s.omega1).powi(2))
}

/// Real part of the frequency-dependent damping kernel, γ'_eff = J_eff/(μω).
pub fn effective_damping(w: f64, j_eff: f64, mu: f64) -> Result<f64, SpectralError> {
    if w == 0.0 {
        return Err(SpectralError::DivisionByZero);
    }
    Ok(j_eff / (mu * w))
}

/// χ = (A/F) e^{−iφ} from the steady-state amplitude and phase.
pub fn susceptibility_from_response(amplitude: f64, phase: f64, drive: f64) -> Result<Complex64, SpectralError> {
    if !(drive > 0.0) {
        return Err(SpectralError::ZeroDrive(drive));
    }
    Ok(Complex64::from_polar(amplitude / drive, -phase))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensityModel {
    Ohmic { eta: f64 },
    LinearEffective { gbar: f64, gamma: f64, omega: f64, mass: f64 },
    NonlinearEffective { params: SystemParams, scales: DerivedScales, gbar: f64 },
}

impl SpectralDensityModel {
    pub fn ohmic(p: &SystemParams) -> Self {
        SpectralDensityModel::Ohmic { eta: p.mass * p.gamma }
    }

    pub fn linear(p: &SystemParams) -> Result<Self, ParamError> {
        Ok(SpectralDensityModel::LinearEffective {
            gbar: convert_couplings(p)?.gbar,
            gamma: p.gamma,
            omega: p.omega,
            mass: p.mass,
        })
    }

    pub fn nonlinear(p: &SystemParams, s: &DerivedScales) -> Result<Self, ParamError> {
        Ok(SpectralDensityModel::NonlinearEffective {
            params: *p,
            scales: *s,
            gbar: convert_couplings(p)?.gbar,
        })
    }

    pub fn eval(&self, w: f64) -> f64 {
        match self {
            SpectralDensityModel::Ohmic { eta } => ohmic_density(w, *eta),
            SpectralDensityModel::LinearEffective { gbar, gamma, omega, mass } => {
                linear_effective_density(w, *gbar, *gamma, *omega, *mass)
            }
            SpectralDensityModel::NonlinearEffective { params, scales, gbar } => {
                nonlinear_effective_density_with(w, *gbar, params, scales)
            }
        }
    }

    /// Maximum on `(0, hi]`: grid scan with step Ω/2000 plus golden-section refinement.
    pub fn peak(&self, omega: f64, hi: f64) -> Peak {
        find_peak(|w| self.eval(w), omega * 1e-6, hi, omega / 2000.0)
    }
}

/// One row of the `spectral` CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRow {
    pub omega: f64,
    pub j_ohmic: f64,
    pub j_linear_eff: f64,
    pub j_nonlinear_eff: f64,
    pub chi_imag: f64,
    pub g_eff: f64,
}

pub const SPECTRAL_HEADER: [&str; 6] = ["omega", "J_ohmic", "J_linear_eff", "J_nonlinear_eff", "chi_imag", "G_eff"];

/// Tabulates every density on `points` equally spaced frequencies in `(0, omega_max]`.
pub fn spectral_table(p: &SystemParams, s: &DerivedScales, omega_max: f64, points: usize) -> Result<Vec<SpectralRow>, ParamError> {
    let ohmic = SpectralDensityModel::ohmic(p);
    let linear = SpectralDensityModel::linear(p)?;
    let nonlinear = SpectralDensityModel::nonlinear(p, s)?;
    Ok((1..=points)
        .map(|i| {
            let w = omega_max * i as f64 / points as f64;
            SpectralRow {
                omega: w,
                j_ohmic: ohmic.eval(w),
                j_linear_eff: linear.eval(w),
                j_nonlinear_eff: nonlinear.eval(w),
                chi_imag: chi_imag(w, p, s),
                g_eff: geff(w, s),
            }
        })
        .collect())
}
