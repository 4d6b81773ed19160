//! Globally adaptive 15-point Gauss–Kronrod quadrature.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Maximum number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 200;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
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

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
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

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Integral of `f` over the finite interval `[a, b]` to within
/// `max(tol, tol·|I|)`. `f` must be finite on the open interval.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::arg("quadrature limits must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    heap.push(first);
    loop {
        if !value.is_finite() {
            return if value == f64::INFINITY {
                Ok(value)
            } else {
                Err(Error::Numeric {
                    message: "integrand is not finite on the integration range".into(),
                    partial: value,
                })
            };
        }
        if error <= tol.max(tol * value.abs()) {
            return Ok(value);
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Numeric {
                message: format!("quadrature did not reach tolerance {tol:e} within {MAX_INTERVALS} intervals (error {error:e})"),
                partial: value,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum to keep rounding from accumulating in the running totals.
        if heap.len() % 32 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integral over the whole real line through `x = centre + scale·tan(u)`.
pub fn integrate_real_line(f: impl Fn(f64) -> f64, centre: f64, scale: f64, tol: f64) -> Result<f64> {
    let half = std::f64::consts::FRAC_PI_2;
    integrate(
        |u| {
            let t = u.tan();
            let c = u.cos();
            let v = f(centre + scale * t);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (c * c)
            }
        },
        -half,
        half,
        tol,
    )
}

/// Integral over `(0, ∞)` through `x = scale·tan(u)`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, scale: f64, tol: f64) -> Result<f64> {
    integrate(
        |u| {
            let c = u.cos();
            let v = f(scale * u.tan());
            if v == 0.0 {
                0.0
            } else {
                v * scale / (c * c)
            }
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        tol,
    )
}
