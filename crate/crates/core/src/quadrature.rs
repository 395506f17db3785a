//! Gauss-Kronrod panels, an adaptive bisection integrator, Gauss-Hermite
//! nodes and polynomial extrapolation to zero step.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul, Sub};
use num_complex::Complex64;
#[allow(unused_imports)] // inherent in std builds
use num_traits::Float;

use crate::error::{Error, Result};

/// Positive Kronrod abscissae on [-1, 1]; odd indices are the Gauss nodes.
pub const GK21_NODES: [f64; 11] = [
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

/// Kronrod weights matching [`GK21_NODES`].
pub const GK21_KRONROD: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_122_506_250,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Weights of the embedded 10-point Gauss rule at `GK21_NODES[1, 3, 5, 7, 9]`.
pub const GAUSS10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Anything that can be summed with real weights and measured.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// One node of a panel rule: position, Kronrod weight, Gauss weight (0 for
/// Kronrod-only nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub kronrod: f64,
    pub gauss: f64,
}

/// The 21 nodes of the Gauss-Kronrod rule mapped onto `[a, b]`.
pub fn gk21_nodes(a: f64, b: f64) -> [Node; 21] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [Node { t: 0.0, kronrod: 0.0, gauss: 0.0 }; 21];
    for i in 0..10 {
        let g = if i % 2 == 1 { GAUSS10[i / 2] * h } else { 0.0 };
        let k = GK21_KRONROD[i] * h;
        out[2 * i] = Node { t: c - h * GK21_NODES[i], kronrod: k, gauss: g };
        out[2 * i + 1] = Node { t: c + h * GK21_NODES[i], kronrod: k, gauss: g };
    }
    out[20] = Node { t: c, kronrod: GK21_KRONROD[10] * h, gauss: 0.0 };
    out
}

/// Kronrod estimate and `|K - G|` on one panel.
pub fn gk21<T: Integrand, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64) -> (T, f64) {
    let mut k = T::zero();
    let mut g = T::zero();
    for node in gk21_nodes(a, b) {
        let v = f(node.t);
        k = k + v * node.kronrod;
        if node.gauss != 0.0 {
            g = g + v * node.gauss;
        }
    }
    let err = (k - g).magnitude();
    (k, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

/// Globally adaptive GK21 on `[a, b]`: bisect the worst panel until the
/// summed error is below `max(abs_tol, rel_tol |I|)`.
pub fn integrate<T: Integrand, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate<T>> {
    let (value, err) = gk21(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, err });
    let (mut total, mut total_err) = (value, err);
    while total_err > abs_tol.max(rel_tol * total.magnitude()) {
        if heap.len() >= max_panels {
            return Err(Error::NonConvergence {
                panels: heap.len(),
                estimate_re: total.magnitude(),
                estimate_im: 0.0,
                error_bound: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to shed the drift from incremental updates.
    let mut value = T::zero();
    let mut error = 0.0;
    let panels = heap.len();
    for p in heap.into_vec() {
        value = value + p.value;
        error += p.err;
    }
    Ok(Estimate { value, error, panels })
}

/// Gauss-Hermite nodes and weights for `int e^{-x^2} f(x) dx`.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let pi_m4 = core::f64::consts::PI.powf(-0.25);
    let mut out = Vec::with_capacity(n);
    let mut z = 0.0;
    let m = n.div_ceil(2);
    let mut roots = Vec::with_capacity(m);
    let nf = n as f64;
    for i in 0..m {
        // Standard initial guesses for the largest roots, then extrapolated.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pi_m4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        roots.push(z);
        let w = 2.0 / (pp * pp);
        out.push((z, w));
        if !(n % 2 == 1 && i == m - 1) {
            out.push((-z, w));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Neville extrapolation of samples `(h_i, y_i)` to `h = 0`.
pub fn extrapolate_to_zero<T: Integrand>(h: &[f64], y: &[T]) -> T {
    let mut p: Vec<T> = y.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (h[i], h[i + level]);
            p[i] = (p[i + 1] * hi - p[i] * hj) * (1.0 / (hi - hj));
        }
    }
    p[0]
}

/// Trapezoid rule over an ascending grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}
