//! Cross-module checks on the reference parameter sets.

use effbath::correlation::{CorrelationFn, CorrelationKind};
use effbath::gme::{niba_kernels, run_niba, NibaSettings};
use effbath::spectrum::{fourier_spectrum, peak_extract, Window};
use effbath::wda::{resonance_analysis, wda_spectrum, ResonanceCondition};
use effbath::{derived_scales, SystemParams};
use proptest::prelude::*;

#[test]
fn niba_peaks_sit_at_pole_frequencies() {
    let p = SystemParams::reference();
    let ts = run_niba(&p, &NibaSettings::default()).unwrap();
    let s = fourier_spectrum(&ts, Window::None, 1).unwrap();
    let peaks = peak_extract(&s, 2).unwrap().peaks;
    let spec = wda_spectrum(&p, true).unwrap();
    let mut found: Vec<f64> = peaks.iter().map(|q| q.omega).collect();
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((found[0] - spec.omega_plus()).abs() <= s.resolution);
    assert!((found[1] - spec.omega_minus()).abs() <= s.resolution);
}

#[test]
fn kernel_envelope_follows_closed_form_s() {
    let p = SystemParams::reference();
    let s = derived_scales(&p);
    let corr = CorrelationFn::new(CorrelationKind::ClosedForm, &p, &s);
    let k = niba_kernels(0.1, 301, &corr, p.delta, 0.0, s.omega1).unwrap();
    for (n, &v) in k.ks.iter().enumerate() {
        let (sv, _) = corr.eval(n as f64 * 0.1).unwrap();
        assert!(v.abs() <= (-sv).exp() * (1.0 + 1e-12));
    }
    assert_eq!(k.ks[0], p.delta * p.delta);
}

#[test]
fn quadrature_kernels_agree_with_closed_form_run() {
    let p = SystemParams::reference();
    let run = |correlation| run_niba(&p, &NibaSettings { horizon: 30.0, correlation, ..Default::default() }).unwrap();
    let (a, b) = (run(CorrelationKind::ClosedForm), run(CorrelationKind::Quadrature));
    let dev = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    // The closed form drops O(γ̄/Ω₁) terms (~3% of R); the runs inherit that.
    assert!(dev < 0.05, "{dev}");
}

#[test]
fn weak_coupling_resonance_branch() {
    let p = SystemParams { g: 0.0018, ..SystemParams::reference() };
    let r = resonance_analysis(&p, ResonanceCondition::DeltaEqualsOmega).unwrap();
    assert!((r.omega_plus - 1.0).abs() < 1e-4);
    assert!((r.omega_minus - 1.06).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn damped_niba_stays_bounded(g in 0.05f64..0.2, alpha in 0.0f64..0.03, gamma in 0.03f64..0.15) {
        let p = SystemParams { g, alpha, gamma, ..SystemParams::reference() };
        let ts = run_niba(&p, &NibaSettings { horizon: 60.0, ..Default::default() }).unwrap();
        prop_assert_eq!(ts.values[0], 1.0);
        prop_assert!(ts.values.iter().all(|v| v.abs() <= 1.02));
    }

    #[test]
    fn nonlinearity_shifts_pole_frequencies_up(g in 0.05f64..0.2, alpha in 0.005f64..0.03) {
        let p = SystemParams { g, alpha, ..SystemParams::reference() };
        let (a, b) = (wda_spectrum(&p, false).unwrap(), wda_spectrum(&p.linear_twin(), false).unwrap());
        prop_assert!(a.omega_plus() > b.omega_plus() && a.omega_minus() > b.omega_minus());
    }
}
