//! Globally adaptive 21-point Gauss–Kronrod quadrature over a set of
//! panels, each carrying its own integrand.
//!
//! The panel with the largest error estimate is bisected until the summed
//! error estimate meets the requested absolute tolerance or the panel budget
//! is exhausted.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

// Kronrod abscissae (positive half) and weights for the 21-point rule,
// with the embedded 10-point Gauss weights on the odd-indexed abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value and estimated absolute error of one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub panels: usize,
}

/// One 21-point Gauss–Kronrod evaluation with a QUADPACK-style error estimate.
pub fn gauss_kronrod_21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut result_gauss = 0.0;
    let mut result_kronrod = WGK[10] * f_center;
    let mut result_abs = result_kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        result_kronrod += WGK[j] * (f1 + f2);
        result_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * result_kronrod;
    let mut result_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let result = result_kronrod * half;
    result_abs *= half.abs();
    result_asc *= half.abs();
    let mut err = ((result_kronrod - result_gauss) * half).abs();
    if result_asc != 0.0 && err != 0.0 {
        err = result_asc * (200.0 * err / result_asc).powf(1.5).min(1.0);
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * result_abs);
    }
    (result, err)
}

/// A closed interval together with the integrand to apply on it.
pub struct Segment<'a> {
    pub a: f64,
    pub b: f64,
    pub integrand: &'a (dyn Fn(f64) -> f64 + Sync),
}

impl<'a> Segment<'a> {
    pub fn new(a: f64, b: f64, integrand: &'a (dyn Fn(f64) -> f64 + Sync)) -> Self {
        Segment { a, b, integrand }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    segment: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates the sum over `segments` to absolute tolerance `tol`.
///
/// Panels narrower than the floating-point resolution of their midpoint are
/// not split further. Failure to converge within `max_panels` yields
/// [`Error::Convergence`] with the best estimate.
pub fn integrate_segments(segments: &[Segment<'_>], tol: f64, max_panels: usize) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    for (idx, seg) in segments.iter().enumerate() {
        if !(seg.b > seg.a) {
            continue;
        }
        let (value, error) = gauss_kronrod_21(seg.integrand, seg.a, seg.b);
        heap.push(Panel { a: seg.a, b: seg.b, value, error, segment: idx });
    }

    let exact_totals = |heap: &BinaryHeap<Panel>, v0: f64, e0: f64| {
        heap.iter().fold((v0, e0), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut value, mut error) = exact_totals(&heap, 0.0, 0.0);
    loop {
        if !value.is_finite() {
            return Err(Error::Domain("integrand produced a non-finite value".into()));
        }
        let panels = heap.len();
        if error <= tol {
            // the running sums drift; confirm with a fresh summation
            (value, error) = exact_totals(&heap, frozen_value, frozen_error);
            if error <= tol {
                return Ok(QuadResult { value, abs_error: error, panels });
            }
        }
        let exhausted = panels >= max_panels;
        let worst = match heap.pop() {
            Some(p) if !exhausted => p,
            _ => {
                let (value, error) = exact_totals(&heap, frozen_value, frozen_error);
                return Err(Error::Convergence {
                    estimate: value,
                    achieved: error,
                    requested: tol,
                    panels,
                });
            }
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 4.0 * f64::EPSILON * mid.abs() {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        let f = segments[worst.segment].integrand;
        let (v1, e1) = gauss_kronrod_21(f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_21(f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1, segment: worst.segment });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2, segment: worst.segment });
    }
}

/// Adaptive integration of a single function over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<QuadResult> {
    integrate_segments(&[Segment::new(a, b, &f)], tol, max_panels)
}
