//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e} after {intervals} intervals")]
pub struct QuadratureNonConvergence {
    pub achieved: f64,
    pub requested: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-8, rel: 1e-10, max_intervals: 20_000 }
    }
}

/// Integrates `f` over `[a, b]`, starting from the given interior breakpoints
/// and bisecting the worst interval until the summed error estimate meets the
/// tolerance. Returns the value and the achieved error estimate.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<(f64, f64), QuadratureNonConvergence> {
    let mut edges: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();

    let mut segments: Vec<Segment> = edges.windows(2).map(|w| kronrod15(&f, w[0], w[1])).collect();
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok((value, error));
        }
        if segments.len() >= tol.max_intervals {
            return Err(QuadratureNonConvergence {
                achieved: error,
                requested: target,
                intervals: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .unwrap();
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval at floating-point resolution; nothing left to refine.
            return Err(QuadratureNonConvergence {
                achieved: error,
                requested: target,
                intervals: segments.len() + 1,
            });
        }
        segments.push(kronrod15(&f, s.a, mid));
        segments.push(kronrod15(&f, mid, s.b));
    }
}

/// Integrates `f` over `[a, ∞)` with the substitution x = a / u, u ∈ (0, 1].
/// Requires `a > 0` and `f` decaying faster than 1/x.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: Tolerance,
) -> Result<(f64, f64), QuadratureNonConvergence> {
    assert!(a > 0.0, "tail integration needs a positive lower limit");
    let g = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            let x = a / u;
            f(x) * a / (u * u)
        }
    };
    integrate(g, 0.0, 1.0, &[], tol)
}
