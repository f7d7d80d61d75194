//! Fourier magnitude of P(t) and peak extraction.

use std::f64::consts::PI;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::gme::TimeSeries;

pub const MIN_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("series has {0} samples; at least {MIN_SAMPLES} are needed")]
    TooShort(usize),
    #[error("no local maxima in the spectrum")]
    NoPeaks,
    #[error("zero-padding factor must be at least 1")]
    BadPadding,
    #[error("unknown window {0:?} (expected none or hann)")]
    UnknownWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    None,
    Hann,
}

impl FromStr for Window {
    type Err = SpectrumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "rect" => Ok(Window::None),
            "hann" | "hanning" => Ok(Window::Hann),
            _ => Err(SpectrumError::UnknownWindow(s.to_string())),
        }
    }
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::None => vec![1.0; n],
            // Periodic Hann: exact zeros at the bins next to a centred tone.
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub omega: f64,
    pub height: f64,
    /// Half width at half maximum, interpolated between bins.
    pub half_width: f64,
}

/// One-sided magnitude spectrum on ω ∈ [0, π/h].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    /// h·|DFT| of the mean-removed, windowed (and padded) signal.
    pub magnitude: Vec<f64>,
    /// Unpadded bin width 2π/(N h); what any resolution statement refers to.
    pub resolution: f64,
    /// Bin width of the (possibly padded) grid.
    pub bin: f64,
    /// Samples of the original series.
    pub samples: usize,
}

/// Magnitude spectrum of P(t) − mean, optionally windowed and zero-padded by
/// an integer factor. Padding only refines the grid used for peak location.
pub fn fourier_spectrum(ts: &TimeSeries, window: Window, pad: usize) -> Result<SpectrumResult, SpectrumError> {
    fourier_spectrum_raw(&ts.values, ts.step, window, pad)
}

pub fn fourier_spectrum_raw(values: &[f64], step: f64, window: Window, pad: usize) -> Result<SpectrumResult, SpectrumError> {
    let n = values.len();
    if n < MIN_SAMPLES {
        return Err(SpectrumError::TooShort(n));
    }
    if pad == 0 {
        return Err(SpectrumError::BadPadding);
    }
    let prepared = prepare(values, window);
    let len = n * pad;
    let mut buf: Vec<Complex<f64>> = prepared.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let bin = 2.0 * PI / (len as f64 * step);
    let half = len / 2;
    Ok(SpectrumResult {
        omega: (0..=half).map(|k| k as f64 * bin).collect(),
        magnitude: buf[..=half].iter().map(|c| step * c.norm()).collect(),
        resolution: 2.0 * PI / (n as f64 * step),
        bin,
        samples: n,
    })
}

/// Mean-removed, windowed signal as fed to the transform.
pub fn prepare(values: &[f64], window: Window) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().zip(window.coefficients(values.len())).map(|(v, w)| (v - mean) * w).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakList {
    pub peaks: Vec<SpectralPeak>,
    /// Fewer than the requested number of local maxima were found.
    pub shortage: bool,
}

/// The `k` highest local maxima, each refined by a parabola through three bins.
pub fn peak_extract(spec: &SpectrumResult, k: usize) -> Result<PeakList, SpectrumError> {
    let m = &spec.magnitude;
    let mut peaks: Vec<SpectralPeak> = (1..m.len().saturating_sub(1))
        .filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1])
        .map(|i| {
            let (a, b, c) = (m[i - 1], m[i], m[i + 1]);
            let curv = a - 2.0 * b + c;
            let delta = if curv != 0.0 { 0.5 * (a - c) / curv } else { 0.0 };
            let height = b - 0.25 * (a - c) * delta;
            SpectralPeak {
                omega: spec.omega[i] + delta * spec.bin,
                height,
                half_width: half_width(m, i, 0.5 * height) * spec.bin,
            }
        })
        .collect();
    if peaks.is_empty() {
        return Err(SpectrumError::NoPeaks);
    }
    peaks.sort_by(|x, y| y.height.partial_cmp(&x.height).unwrap());
    let shortage = peaks.len() < k;
    peaks.truncate(k);
    Ok(PeakList { peaks, shortage })
}

// Half-maximum crossings on either side of bin `i`, in bins.
fn half_width(m: &[f64], i: usize, level: f64) -> f64 {
    let cross = |from: usize, to: usize| (level - m[from]) / (m[to] - m[from]);
    let mut left = 0.0;
    let mut j = i;
    while j > 0 && m[j - 1] > level {
        j -= 1;
    }
    if j > 0 {
        left = (i - j) as f64 + cross(j, j - 1);
    } else {
        left += i as f64;
    }
    let mut right = (m.len() - 1 - i) as f64;
    let mut j = i;
    while j + 1 < m.len() && m[j + 1] > level {
        j += 1;
    }
    if j + 1 < m.len() {
        right = (j - i) as f64 + cross(j, j + 1);
    }
    0.5 * (left + right)
}
