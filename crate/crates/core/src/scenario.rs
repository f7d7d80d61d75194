//! Figure presets and the artifact writer behind the CLI.
//!
//! Every run writes CSV files with a header row and values in `{:.16e}`, plus
//! a flat `key=value` summary. Outputs depend only on the inputs; parallel
//! pieces are merged in a fixed order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::correlation::{correlation_table, CorrelationError, CORRELATION_HEADER};
use crate::gme::{run_niba, GmeError, NibaSettings, SeriesMeta, TimeSeries};
use crate::params::{derived_scales, ParamError, SystemParams};
use crate::spectral::{spectral_table, SPECTRAL_HEADER};
use crate::spectrum::{fourier_spectrum, peak_extract, PeakList, SpectrumError, SpectrumResult, Window};
use crate::wda::{bloch_siegert_shift, resonance_analysis, wda_series, wda_spectrum, ResonanceCondition, WdaError, WdaSpectrum};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("parameters: {0}")]
    Param(#[from] ParamError),
    #[error("correlation: {0}")]
    Correlation(#[from] CorrelationError),
    #[error("master equation: {0}")]
    Gme(#[from] GmeError),
    #[error("weak-damping solution: {0}")]
    Wda(#[from] WdaError),
    #[error("spectrum: {0}")]
    Spectrum(#[from] SpectrumError),
    #[error("regime violation under --strict: {}", .0.join("; "))]
    Strict(Vec<String>),
    #[error("unknown figure tag {0:?}")]
    UnknownTag(String),
    #[error("{0}")]
    Input(String),
}

impl ScenarioError {
    /// Process exit status: 2 for regime violations under `--strict`, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Strict(_) | ScenarioError::Wda(WdaError::TruncationInvalid(_)) => 2,
            _ => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> ScenarioError {
    let context = context.into();
    move |source| ScenarioError::Io { context, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureTag {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Custom,
}

impl FromStr for FigureTag {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "fig2" => FigureTag::Fig2,
            "fig3" => FigureTag::Fig3,
            "fig4" => FigureTag::Fig4,
            "fig5" => FigureTag::Fig5,
            "fig6" => FigureTag::Fig6,
            "fig7" => FigureTag::Fig7,
            "fig8" => FigureTag::Fig8,
            "custom" => FigureTag::Custom,
            _ => return Err(ScenarioError::UnknownTag(s.to_string())),
        })
    }
}

impl FigureTag {
    pub fn name(self) -> &'static str {
        match self {
            FigureTag::Fig2 => "fig2",
            FigureTag::Fig3 => "fig3",
            FigureTag::Fig4 => "fig4",
            FigureTag::Fig5 => "fig5",
            FigureTag::Fig6 => "fig6",
            FigureTag::Fig7 => "fig7",
            FigureTag::Fig8 => "fig8",
            FigureTag::Custom => "custom",
        }
    }

    fn spectral(self) -> bool {
        matches!(self, FigureTag::Fig2 | FigureTag::Custom)
    }
    fn dynamics(self) -> bool {
        self != FigureTag::Fig2
    }
    fn spectra(self) -> bool {
        matches!(self, FigureTag::Fig4 | FigureTag::Fig6 | FigureTag::Fig8 | FigureTag::Custom)
    }
    fn twin(self) -> bool {
        matches!(self, FigureTag::Fig7 | FigureTag::Fig8)
    }
}

/// Solver and analysis settings of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSettings {
    pub niba: NibaSettings,
    pub window: Window,
    pub pad: usize,
    pub peaks: usize,
    pub omega_max: f64,
    pub spectral_points: usize,
    pub strict: bool,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        ScenarioSettings {
            niba: NibaSettings::default(),
            window: Window::None,
            pad: 1,
            peaks: 2,
            omega_max: 2.0,
            spectral_points: 1000,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tag: FigureTag,
    pub params: SystemParams,
    pub settings: ScenarioSettings,
}

/// Long horizon and Hann window used for the weak-coupling figures: the two
/// lines sit 0.06Ω apart and the oscillator line carries < 10⁻³ of the weight.
pub const WEAK_COUPLING_HORIZON: f64 = 1500.0;

impl Scenario {
    /// Parameter preset for a figure tag (`Custom` starts from the reference set).
    pub fn figure(tag: FigureTag) -> Self {
        let reference = SystemParams::reference();
        let mut settings = ScenarioSettings::default();
        let params = match tag {
            FigureTag::Fig2 => SystemParams { gamma: 0.097, ..reference },
            FigureTag::Fig5 | FigureTag::Fig6 => {
                settings.niba.horizon = WEAK_COUPLING_HORIZON;
                settings.window = Window::Hann;
                SystemParams { g: 0.0018, ..reference }
            }
            _ => reference,
        };
        Scenario { tag, params, settings }
    }

    pub fn custom(params: SystemParams) -> Self {
        Scenario { params, ..Scenario::figure(FigureTag::Custom) }
    }
}

/// Formats one CSV line with full double precision.
pub fn csv_line(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:.16e}").unwrap();
    }
    s
}

pub fn csv_text<I: IntoIterator<Item = Vec<f64>>>(header: &[&str], rows: I) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&csv_line(&r));
        out.push('\n');
    }
    out
}

pub fn spectral_csv(p: &SystemParams, omega_max: f64, points: usize) -> Result<String, ScenarioError> {
    let rows = spectral_table(p, &derived_scales(p), omega_max, points)?;
    Ok(csv_text(
        &SPECTRAL_HEADER,
        rows.iter().map(|r| vec![r.omega, r.j_ohmic, r.j_linear_eff, r.j_nonlinear_eff, r.chi_imag, r.g_eff]),
    ))
}

pub fn correlation_csv(p: &SystemParams, tau_max: f64, points: usize) -> Result<String, ScenarioError> {
    let rows = correlation_table(p, &derived_scales(p), tau_max, points)?;
    Ok(csv_text(
        &CORRELATION_HEADER,
        rows.iter().map(|r| vec![r.tau, r.s_quad, r.r_quad, r.s_closed, r.r_closed, r.split.s0, r.split.s1, r.split.r0, r.split.r1]),
    ))
}

pub fn series_csv(ts: &TimeSeries, column: &str) -> String {
    csv_text(&["t", column], ts.times().zip(&ts.values).map(|(t, &v)| vec![t, v]))
}

pub fn spectrum_csv(s: &SpectrumResult) -> String {
    csv_text(&["omega", "magnitude"], s.omega.iter().zip(&s.magnitude).map(|(&o, &m)| vec![o, m]))
}

/// Reads a `t,P` CSV (header optional) on a uniform grid starting at t = 0.
pub fn read_series_csv(text: &str) -> Result<TimeSeries, ScenarioError> {
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = (cols.next(), cols.next());
        match (a.and_then(|x| x.parse::<f64>().ok()), b.and_then(|x| x.parse::<f64>().ok())) {
            (Some(x), Some(y)) => {
                t.push(x);
                v.push(y);
            }
            _ if n == 0 => continue,
            _ => return Err(ScenarioError::Input(format!("line {}: expected two numeric columns", n + 1))),
        }
    }
    if t.len() < 2 {
        return Err(ScenarioError::Input("series needs at least two samples".into()));
    }
    let step = t[1] - t[0];
    if !(step > 0.0) {
        return Err(ScenarioError::Input("time column must increase".into()));
    }
    for (i, &ti) in t.iter().enumerate() {
        if (ti - t[0] - i as f64 * step).abs() > 1e-6 * step.max(ti.abs() * 1e-3) {
            return Err(ScenarioError::Input(format!("non-uniform time grid at row {}", i + 1)));
        }
    }
    Ok(TimeSeries { step, values: v, meta: SeriesMeta { params: None, order: 0, source: "csv" } })
}

/// Regime warnings, turned into an error under `strict`.
pub fn check_regime(p: &SystemParams, strict: bool) -> Result<(), ScenarioError> {
    let warnings: Vec<String> = p.regime_warnings().iter().map(|w| w.to_string()).collect();
    if strict && !warnings.is_empty() {
        return Err(ScenarioError::Strict(warnings));
    }
    Ok(())
}

/// NIBA and WDA runs for one parameter set.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub niba: TimeSeries,
    pub wda: TimeSeries,
    pub spectrum: WdaSpectrum,
}

pub fn dynamics(p: &SystemParams, settings: &ScenarioSettings) -> Result<Dynamics, ScenarioError> {
    let (niba, spectrum) = rayon::join(|| run_niba(p, &settings.niba), || wda_spectrum(p, settings.strict));
    let niba = niba?;
    let spectrum = spectrum?;
    let mut wda = wda_series(&spectrum, niba.step, settings.niba.horizon);
    wda.meta.params = Some(*p);
    Ok(Dynamics { niba, wda, spectrum })
}

/// Files written by a scenario and its summary lines, in output order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
}

impl ScenarioReport {
    pub fn summary_text(&self) -> String {
        self.summary.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, content: &str) -> Result<(), ScenarioError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(io_err(format!("writing {}", path.display())))?;
        self.files.push(path);
        Ok(())
    }
}

fn push(summary: &mut Vec<(String, String)>, key: impl Into<String>, value: impl ToString) {
    summary.push((key.into(), value.to_string()));
}

fn push_f(summary: &mut Vec<(String, String)>, key: impl Into<String>, value: f64) {
    push(summary, key, format!("{value:.16e}"));
}

fn push_peaks(summary: &mut Vec<(String, String)>, prefix: &str, peaks: &PeakList) {
    for (i, p) in peaks.peaks.iter().enumerate() {
        push_f(summary, format!("{prefix}_peak{}_omega", i + 1), p.omega);
        push_f(summary, format!("{prefix}_peak{}_height", i + 1), p.height);
        push_f(summary, format!("{prefix}_peak{}_half_width", i + 1), p.half_width);
    }
    push(summary, format!("{prefix}_peak_shortage"), peaks.shortage);
}

/// Runs the scenario and writes its artifacts into `out`.
pub fn run_scenario(sc: &Scenario, out: &Path) -> Result<ScenarioReport, ScenarioError> {
    sc.params.validate()?;
    check_regime(&sc.params, sc.settings.strict)?;
    fs::create_dir_all(out).map_err(io_err(format!("creating {}", out.display())))?;
    let mut w = Writer { dir: out, files: Vec::new() };
    let mut summary = Vec::new();
    let p = &sc.params;
    let s = derived_scales(p);
    push(&mut summary, "scenario", sc.tag.name());
    for (k, v) in [
        ("Omega", p.omega),
        ("alpha", p.alpha),
        ("g", p.g),
        ("gamma", p.gamma),
        ("beta", p.beta),
        ("Delta", p.delta),
        ("epsilon", p.epsilon),
        ("Omega1", s.omega1),
        ("n1", s.n1),
        ("nth", s.nth),
        ("gammabar", s.gammabar),
        ("varsigma", s.varsigma),
    ] {
        push_f(&mut summary, k, v);
    }

    if sc.tag.spectral() {
        w.put("spectral.csv", &spectral_csv(p, sc.settings.omega_max, sc.settings.spectral_points)?)?;
        let peak = crate::spectral::SpectralDensityModel::nonlinear(p, &s)?.peak(p.omega, sc.settings.omega_max);
        push_f(&mut summary, "J_eff_peak_omega", peak.x);
    }

    if sc.tag.dynamics() {
        let (main, twin) = if sc.tag.twin() {
            let linear = p.linear_twin();
            let (a, b) = rayon::join(|| dynamics(p, &sc.settings), || dynamics(&linear, &sc.settings));
            (a?, Some(b?))
        } else {
            (dynamics(p, &sc.settings)?, None)
        };
        let runs: Vec<(&str, &Dynamics)> =
            std::iter::once(("", &main)).chain(twin.as_ref().map(|d| ("_linear", d))).collect();
        for (suffix, d) in &runs {
            w.put(&format!("P_niba{suffix}.csv"), &series_csv(&d.niba, "P"))?;
            w.put(&format!("P_wda{suffix}.csv"), &series_csv(&d.wda, "P_wda"))?;
            let label = if suffix.is_empty() { "nonlinear".to_string() } else { suffix[1..].to_string() };
            let sp = &d.spectrum;
            let (wp, wm) = sp.weights();
            push_f(&mut summary, format!("{label}_omega_plus"), sp.omega_plus());
            push_f(&mut summary, format!("{label}_omega_minus"), sp.omega_minus());
            push_f(&mut summary, format!("{label}_kappa_plus"), sp.kappa_plus);
            push_f(&mut summary, format!("{label}_kappa_minus"), sp.kappa_minus);
            push_f(&mut summary, format!("{label}_weight_plus"), wp);
            push_f(&mut summary, format!("{label}_weight_minus"), wm);
            push_f(&mut summary, format!("{label}_u0_abs"), sp.tunneling.u0.norm());
            let dev = d.niba.values.iter().zip(&d.wda.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            push_f(&mut summary, format!("{label}_max_abs_wda_minus_niba"), dev);
            if sc.tag.spectra() {
                for (kind, ts) in [("niba", &d.niba), ("wda", &d.wda)] {
                    let spec = fourier_spectrum(ts, sc.settings.window, sc.settings.pad)?;
                    w.put(&format!("spectrum_{kind}{suffix}.csv"), &spectrum_csv(&spec))?;
                    push_f(&mut summary, format!("{label}_{kind}_resolution"), spec.resolution);
                    push_peaks(&mut summary, &format!("{label}_{kind}"), &peak_extract(&spec, sc.settings.peaks)?);
                }
            }
        }
        let res = resonance_analysis(p, ResonanceCondition::DeltaEqualsOmega)?;
        push_f(&mut summary, "bs_shift", bloch_siegert_shift(p.g, p.alpha, p.omega));
        push_f(&mut summary, "approx_omega_plus", res.approx_plus);
        push_f(&mut summary, "approx_omega_minus", res.approx_minus);
        push(&mut summary, "coupling_branch", format!("{:?}", res.branch));
    }

    let report = ScenarioReport { files: Vec::new(), summary };
    w.put("summary.txt", &report.summary_text())?;
    Ok(ScenarioReport { files: w.files, ..report })
}
