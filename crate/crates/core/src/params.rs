//! Physical inputs and the scales derived from them.
//!
//! Everything is in reduced units: ħ = k_B = 1, frequencies in units of the
//! oscillator frequency Ω, the nonlinearity α in units of ħΩ and the inverse
//! temperature β in units of (ħΩ)⁻¹.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("value `{value}` for key `{key}` is not a number")]
    NotNumeric { key: String, value: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("rate `{0}` must be non-negative")]
    NegativeRate(&'static str),
    #[error("`{0}` must be non-negative")]
    Negative(&'static str),
    #[error("`{0}` must be finite")]
    NonFinite(&'static str),
    #[error("nonlinearity alpha = {0} drives n1(0) = 1 - 3 alpha / 2 Omega to zero or below")]
    NonlinearityTooLarge(f64),
    #[error("malformed config line {line}: `{text}`")]
    Syntax { line: usize, text: String },
    #[error("length scale `{0}` is zero")]
    ZeroLength(&'static str),
}

/// Physical parameters of the qubit, the nonlinear oscillator and the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Oscillator angular frequency.
    pub omega: f64,
    /// Oscillator mass.
    pub mass: f64,
    /// Effective mass of the qubit coordinate.
    pub mu: f64,
    /// Scaled quartic nonlinearity α = ᾱ y₀⁴ / 4.
    pub alpha: f64,
    /// Scaled qubit-oscillator coupling g = ḡ q₀ y₀ / (2√2 ħ).
    pub g: f64,
    /// Ohmic damping rate γ = η / M.
    pub gamma: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// Qubit tunneling amplitude.
    pub delta: f64,
    /// Qubit bias.
    pub epsilon: f64,
    /// Separation of the double-well minima; defaults to the oscillator length.
    pub q0: Option<f64>,
}

impl SystemParams {
    /// Reference parameter set (the `fig3` preset): α = 0.02, g = 0.18, γ/2π = 0.0154,
    /// β = 10, Δ = Ω = 1, unbiased.
    pub fn reference() -> Self {
        SystemParams {
            omega: 1.0,
            mass: 1.0,
            mu: 1.0,
            alpha: 0.02,
            g: 0.18,
            gamma: 2.0 * PI * 0.0154,
            beta: 10.0,
            delta: 1.0,
            epsilon: 0.0,
            q0: None,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let finite = [
            ("Omega", self.omega),
            ("M", self.mass),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("g", self.g),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("Delta", self.delta),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        for (name, v) in [("Omega", self.omega), ("M", self.mass), ("mu", self.mu), ("beta", self.beta)] {
            if v <= 0.0 {
                return Err(ParamError::NonPositive(name));
            }
        }
        if self.gamma < 0.0 {
            return Err(ParamError::NegativeRate("gamma"));
        }
        if self.alpha < 0.0 {
            return Err(ParamError::Negative("alpha"));
        }
        if self.delta < 0.0 {
            return Err(ParamError::Negative("Delta"));
        }
        if let Some(q0) = self.q0 {
            if !q0.is_finite() {
                return Err(ParamError::NonFinite("q0"));
            }
            if q0 <= 0.0 {
                return Err(ParamError::NonPositive("q0"));
            }
        }
        if 1.0 - 1.5 * self.alpha / self.omega <= 0.0 {
            return Err(ParamError::NonlinearityTooLarge(self.alpha));
        }
        Ok(())
    }

    /// Oscillator length y₀ = √(ħ / MΩ).
    pub fn oscillator_length(&self) -> f64 {
        (1.0 / (self.mass * self.omega)).sqrt()
    }

    pub fn q0_or_default(&self) -> f64 {
        self.q0.unwrap_or_else(|| self.oscillator_length())
    }

    /// Copy with the nonlinearity switched off; used for linear twin runs.
    pub fn linear_twin(&self) -> Self {
        SystemParams { alpha: 0.0, ..*self }
    }

    /// Non-fatal checks on the validity window of the effective-bath mapping.
    pub fn regime_warnings(&self) -> Vec<RegimeWarning> {
        let mut out = Vec::new();
        if self.g.abs() >= self.omega {
            out.push(RegimeWarning::StrongCoupling { g: self.g });
        }
        if 3.0 * self.alpha > NONLINEARITY_WINDOW * self.omega {
            out.push(RegimeWarning::LargeNonlinearity { alpha: self.alpha });
        }
        let scales = derived_scales(self);
        let temperature = 1.0 / self.beta;
        let matsubara = scales.gammabar / (2.0 * PI);
        if temperature < MATSUBARA_MARGIN * matsubara {
            out.push(RegimeWarning::LowTemperature { temperature, matsubara });
        }
        out
    }
}

/// 3α must stay below this fraction of ħΩ.
pub const NONLINEARITY_WINDOW: f64 = 0.25;
/// k_B T must exceed ħγ̄/2π by at least this factor for the Matsubara terms to be negligible.
pub const MATSUBARA_MARGIN: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub enum RegimeWarning {
    StrongCoupling { g: f64 },
    LargeNonlinearity { alpha: f64 },
    LowTemperature { temperature: f64, matsubara: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeWarning::StrongCoupling { g } => {
                write!(f, "coupling g = {g} is not small compared to Omega")
            }
            RegimeWarning::LargeNonlinearity { alpha } => write!(
                f,
                "3 alpha = {} exceeds {NONLINEARITY_WINDOW} hbar Omega; first-order nonlinearity treatment is questionable",
                3.0 * alpha
            ),
            RegimeWarning::LowTemperature { temperature, matsubara } => write!(
                f,
                "k_B T = {temperature} is not large against hbar gammabar / 2 pi = {matsubara}; Matsubara terms are not negligible"
            ),
        }
    }
}

/// How the fourth power of n₁(0) is formed wherever the formulas consume it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum N1Power {
    /// n₁⁴ expanded to first order in α: 1 − 6α/ħΩ.
    #[default]
    FirstOrder,
    /// Literal fourth power of n₁(0).
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    pub y0: f64,
    /// n₁(0) = 1 − 3α / 2ħΩ.
    pub n1: f64,
    pub n1_pow4_literal: f64,
    pub n1_pow4_first_order: f64,
    pub n1_power: N1Power,
    /// One-photon resonance Ω₁ = Ω + 3α/ħ.
    pub omega1: f64,
    /// Bose occupation at Ω₁.
    pub nth: f64,
    /// Thermal width γ̄_th = (2 n_th + 1) γ / 2.
    pub gammabar: f64,
    /// ς = g² γ n₁⁴ / (π Ω³).
    pub varsigma: f64,
    pub omega: f64,
    pub beta: f64,
}

impl DerivedScales {
    /// The n₁⁴ that downstream formulas use.
    pub fn n1_pow4(&self) -> f64 {
        match self.n1_power {
            N1Power::FirstOrder => self.n1_pow4_first_order,
            N1Power::Literal => self.n1_pow4_literal,
        }
    }

    /// n₁⁶, consistent with the chosen n₁⁴ convention.
    pub fn n1_pow6(&self) -> f64 {
        match self.n1_power {
            // 1 − 9α/ħΩ, and 1 − n₁ = 3α/2ħΩ.
            N1Power::FirstOrder => 1.0 - 6.0 * (1.0 - self.n1),
            N1Power::Literal => self.n1.powi(6),
        }
    }

    /// 2 n_th(Ω₁) + 1 = coth(βħΩ₁/2).
    pub fn thermal_factor(&self) -> f64 {
        2.0 * self.nth + 1.0
    }
}

/// Bose function n(ε) = 1 / (e^{βε} − 1).
pub fn bose(beta: f64, energy: f64) -> f64 {
    1.0 / (beta * energy).exp_m1()
}

pub fn derived_scales(p: &SystemParams) -> DerivedScales {
    derived_scales_with(p, N1Power::default())
}

pub fn derived_scales_with(p: &SystemParams, n1_power: N1Power) -> DerivedScales {
    let y0 = p.oscillator_length();
    let ratio = p.alpha / p.omega;
    let n1 = 1.0 - 1.5 * ratio;
    let omega1 = p.omega + 3.0 * p.alpha;
    let nth = bose(p.beta, omega1);
    let gammabar = (2.0 * nth + 1.0) * p.gamma / 2.0;
    let mut scales = DerivedScales {
        y0,
        n1,
        n1_pow4_literal: n1.powi(4),
        n1_pow4_first_order: 1.0 - 6.0 * ratio,
        n1_power,
        omega1,
        nth,
        gammabar,
        varsigma: 0.0,
        omega: p.omega,
        beta: p.beta,
    };
    scales.varsigma = p.g * p.g * p.gamma * scales.n1_pow4() / (PI * p.omega.powi(3));
    scales
}

/// Bare couplings (ḡ, ᾱ) of the oscillator Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareCouplings {
    pub gbar: f64,
    pub alphabar: f64,
}

pub fn convert_couplings(p: &SystemParams) -> Result<BareCouplings, ParamError> {
    let y0 = p.oscillator_length();
    let q0 = p.q0_or_default();
    if q0 == 0.0 {
        return Err(ParamError::ZeroLength("q0"));
    }
    if y0 == 0.0 {
        return Err(ParamError::ZeroLength("y0"));
    }
    Ok(BareCouplings {
        gbar: 2.0 * SQRT_2 * p.g / (q0 * y0),
        alphabar: 4.0 * p.alpha / y0.powi(4),
    })
}

/// Inverse of [`convert_couplings`]: scaled (g, α) from bare couplings.
pub fn scaled_couplings(bare: BareCouplings, q0: f64, y0: f64) -> Result<(f64, f64), ParamError> {
    if q0 == 0.0 {
        return Err(ParamError::ZeroLength("q0"));
    }
    if y0 == 0.0 {
        return Err(ParamError::ZeroLength("y0"));
    }
    Ok((bare.gbar * q0 * y0 / (2.0 * SQRT_2), bare.alphabar * y0.powi(4) / 4.0))
}

const KNOWN_KEYS: [&str; 11] = [
    "Omega",
    "M",
    "mu",
    "alpha",
    "g",
    "gamma",
    "gamma_over_2piOmega",
    "beta",
    "Delta",
    "epsilon",
    "q0",
];

/// Builds validated parameters from a key-value map.
///
/// `gamma` may be replaced by `gamma_over_2piOmega`; when both are present the
/// direct value wins. `M` and `mu` default to 1, `epsilon` to 0 and `q0` to the
/// oscillator length. Regime-flag violations are logged, not rejected.
pub fn build_params(raw: &BTreeMap<String, String>) -> Result<SystemParams, ParamError> {
    if let Some(key) = raw.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(ParamError::UnknownKey(key.clone()));
    }
    let num = |key: &str| -> Result<Option<f64>, ParamError> {
        raw.get(key)
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| ParamError::NotNumeric {
                    key: key.to_string(),
                    value: v.clone(),
                })
            })
            .transpose()
    };
    let required = |key: &str| -> Result<f64, ParamError> {
        num(key)?.ok_or_else(|| ParamError::MissingKey(key.to_string()))
    };

    let omega = required("Omega")?;
    let gamma = match (num("gamma")?, num("gamma_over_2piOmega")?) {
        (Some(g), _) => g,
        (None, Some(scaled)) => 2.0 * PI * omega * scaled,
        (None, None) => return Err(ParamError::MissingKey("gamma".to_string())),
    };
    let p = SystemParams {
        omega,
        mass: num("M")?.unwrap_or(1.0),
        mu: num("mu")?.unwrap_or(1.0),
        alpha: required("alpha")?,
        g: required("g")?,
        gamma,
        beta: required("beta")?,
        delta: required("Delta")?,
        epsilon: num("epsilon")?.unwrap_or(0.0),
        q0: num("q0")?,
    };
    p.validate()?;
    for w in p.regime_warnings() {
        log::warn!("{w}");
    }
    Ok(p)
}

/// Parses flat `key = value` text. `#` starts a comment; blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ParamError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ParamError::Syntax {
            line: i + 1,
            text: line.to_string(),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn fig3_raw() -> BTreeMap<String, String> {
        raw(&[
            ("Omega", "1"),
            ("alpha", "0.02"),
            ("g", "0.18"),
            ("gamma", "0.09676"),
            ("beta", "10"),
            ("Delta", "1"),
            ("epsilon", "0"),
        ])
    }

    #[test]
    fn builds_fig3_params() {
        let p = build_params(&fig3_raw()).unwrap();
        assert_eq!(p.alpha, 0.02);
        assert_eq!(p.mass, 1.0);
        assert_eq!(p.mu, 1.0);
        assert!(p.regime_warnings().is_empty());
    }

    #[test]
    fn builds_free_qubit_params() {
        let r = raw(&[
            ("Omega", "1"),
            ("alpha", "0"),
            ("g", "0"),
            ("gamma", "0"),
            ("beta", "10"),
            ("Delta", "1"),
            ("epsilon", "0"),
        ]);
        let p = build_params(&r).unwrap();
        assert_eq!(p.gamma, 0.0);
        assert_eq!(p.g, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut r = fig3_raw();
        r.insert("Omega".into(), "-1".into());
        assert_eq!(build_params(&r), Err(ParamError::NonPositive("Omega")));

        let mut r = fig3_raw();
        r.remove("beta");
        assert_eq!(build_params(&r), Err(ParamError::MissingKey("beta".into())));

        let mut r = fig3_raw();
        r.insert("gamma".into(), "-0.1".into());
        assert_eq!(build_params(&r), Err(ParamError::NegativeRate("gamma")));

        let mut r = fig3_raw();
        r.insert("beta".into(), "0".into());
        assert_eq!(build_params(&r), Err(ParamError::NonPositive("beta")));

        let mut r = fig3_raw();
        r.insert("g".into(), "abc".into());
        assert!(matches!(build_params(&r), Err(ParamError::NotNumeric { .. })));

        let mut r = fig3_raw();
        r.insert("gama".into(), "1".into());
        assert_eq!(build_params(&r), Err(ParamError::UnknownKey("gama".into())));
    }

    #[test]
    fn gamma_key_variants() {
        let mut r = fig3_raw();
        r.remove("gamma");
        r.insert("gamma_over_2piOmega".into(), "0.0154".into());
        let p = build_params(&r).unwrap();
        assert!((p.gamma - 2.0 * PI * 0.0154).abs() < 1e-15);

        r.insert("gamma".into(), "0.05".into());
        assert_eq!(build_params(&r).unwrap().gamma, 0.05);
    }

    #[test]
    fn config_text_round() {
        let text = "# fig3\nOmega = 1\nalpha=0.02 # nonlinearity\n\ng = 0.18\ngamma_over_2piOmega = 0.0154\nbeta = 10\nDelta = 1\n";
        let p = build_params(&parse_config(text).unwrap()).unwrap();
        assert_eq!(p.g, 0.18);
        assert!(matches!(parse_config("Omega 1"), Err(ParamError::Syntax { line: 1, .. })));
    }

    #[test]
    fn derived_scales_values() {
        let p = SystemParams::reference();
        let s = derived_scales(&p);
        assert!((s.n1 - 0.97).abs() < 1e-15);
        assert!((s.omega1 - 1.06).abs() < 1e-15);
        assert!((s.n1_pow4_first_order - 0.88).abs() < 1e-15);
        assert!((s.n1_pow4_literal - 0.97f64.powi(4)).abs() < 1e-15);
        // 1 / (e^{10.6} - 1)
        assert!((s.nth - 2.4917e-5).abs() < 1e-8, "{}", s.nth);
        assert!(s.gammabar >= p.gamma / 2.0);

        let lin = derived_scales(&p.linear_twin());
        assert_eq!(lin.n1, 1.0);
        assert_eq!(lin.omega1, 1.0);
        assert_eq!(lin.n1_pow4(), 1.0);
    }

    #[test]
    fn couplings() {
        let p = SystemParams { g: 0.0, ..SystemParams::reference() };
        assert_eq!(convert_couplings(&p).unwrap().gbar, 0.0);

        let p = SystemParams::reference();
        let bare = convert_couplings(&p).unwrap();
        assert_eq!(p.oscillator_length(), 1.0);
        assert!((bare.alphabar - 4.0 * p.alpha).abs() < 1e-15);
        let (g, a) = scaled_couplings(bare, p.q0_or_default(), 1.0).unwrap();
        assert!((g - p.g).abs() <= 1e-14 * p.g);
        assert!((a - p.alpha).abs() <= 1e-14 * p.alpha);

        assert_eq!(scaled_couplings(bare, 0.0, 1.0), Err(ParamError::ZeroLength("q0")));
    }

    #[test]
    fn shifted_frequency_consistency() {
        // Ω₁ n₁² − Ω = O(α²); fitted constant 27/4 for the literal n₁.
        let mut worst: f64 = 0.0;
        for i in 1..=50 {
            let alpha = 0.05 * i as f64 / 50.0;
            let p = SystemParams { alpha, ..SystemParams::reference() };
            let s = derived_scales(&p);
            let resid = (s.omega1 * s.n1 * s.n1 - p.omega).abs();
            worst = worst.max(resid / (alpha * alpha));
        }
        assert!(worst < 7.0, "{worst}");
    }

    proptest! {
        #[test]
        fn scales_are_scale_covariant(
            alpha in 0.0..0.05f64,
            g in 0.0..0.3f64,
            gamma in 0.0..0.2f64,
            beta in 1.0..50.0f64,
            factor in 0.1..10.0f64,
        ) {
            let p = SystemParams { alpha, g, gamma, beta, ..SystemParams::reference() };
            let q = SystemParams {
                omega: factor,
                alpha: alpha * factor,
                g: g * factor,
                gamma: gamma * factor,
                beta: beta / factor,
                delta: factor,
                ..p
            };
            let (a, b) = (derived_scales(&p), derived_scales(&q));
            prop_assert!((a.n1 - b.n1).abs() < 1e-14);
            prop_assert!((a.nth - b.nth).abs() <= 1e-12 * a.nth.max(1e-300));
            prop_assert!((a.varsigma - b.varsigma).abs() <= 1e-12 * a.varsigma.max(1e-300));
            prop_assert!(a.n1 > 0.0 && a.n1 <= 1.0);
            prop_assert!(a.omega1 >= p.omega);
            prop_assert!(a.gammabar >= p.gamma / 2.0);
        }
    }
}
