//! Globally adaptive 10/21-point Gauss–Kronrod integration.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol · ∫|f|)`. Measuring against
//! `∫|f|` rather than `|∫f|` keeps integrals that cancel to zero from
//! spinning forever; for non-negative integrands the two coincide.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
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

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    abs_value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    Segment {
        a,
        b,
        value: res_k * half,
        abs_value: res_abs,
        err: rescale_error(err, res_abs, res_asc),
    }
}

/// Single 21-point Kronrod estimate of `∫_a^b f`, no adaptivity.
pub(crate) fn gk21_value<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    gk21(f, a, b).value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

/// Configurable adaptive integrator.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
    breakpoints: Vec<f64>,
}

impl Quadrature {
    pub fn new(rel_tol: f64) -> Self {
        Quadrature {
            rel_tol,
            abs_tol: 0.0,
            max_intervals: 20_000,
            breakpoints: Vec::new(),
        }
    }

    pub fn abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// Interior points the initial partition must contain. Points outside
    /// `(a, b)` are ignored.
    pub fn breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints = points.into_iter().collect();
        self
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        if !(self.rel_tol > 0.0) && !(self.abs_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("quadrature bounds must be finite"));
        }
        if a == b {
            return Ok(QuadResult {
                value: 0.0,
                abs_err: 0.0,
                intervals: 0,
            });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|&p| p > lo && p < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(lo);
        edges.extend(cuts);
        edges.push(hi);

        let mut heap = BinaryHeap::new();
        for w in edges.windows(2) {
            heap.push(gk21(&f, w[0], w[1]));
        }

        loop {
            let (value, abs_value, err) = heap.iter().fold((0.0, 0.0, 0.0), |acc, s| {
                (acc.0 + s.value, acc.1 + s.abs_value, acc.2 + s.err)
            });
            if !value.is_finite() {
                return Err(Error::invalid("integrand produced a non-finite value"));
            }
            let tol = self.abs_tol.max(self.rel_tol * abs_value);
            if err <= tol {
                return Ok(QuadResult {
                    value: sign * value,
                    abs_err: err,
                    intervals: heap.len(),
                });
            }
            let worst = heap.pop().expect("non-empty partition");
            let mid = 0.5 * (worst.a + worst.b);
            if heap.len() + 2 > self.max_intervals || mid <= worst.a || mid >= worst.b {
                return Err(Error::QuadratureDivergence {
                    a,
                    b,
                    intervals: heap.len() + 1,
                    abs_err: err,
                });
            }
            heap.push(gk21(&f, worst.a, mid));
            heap.push(gk21(&f, mid, worst.b));
        }
    }
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    Quadrature::new(rel_tol).integrate(f, a, b).map(|r| r.value)
}
