//! Brillouin-zone quadrature of the simple-cubic lattice Green function,
//! independent of the Bessel-integral route in the core crate.
//!
//! `g(l; z) = (2 pi)^-3 ∫ d^3q e^{i q.l} / (z - cos q1 - cos q2 - cos q3)`.
//! The `q3` integral is the closed-form chain Green function; the remaining
//! two are done by nested tanh-sinh quadrature in `x = cos q`, split at every
//! point where the integrand is singular.

use std::f64::consts::{FRAC_PI_2, PI};

use quasimol_core::Complex64;

/// Settings of the nested quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Relative tolerance of each one-dimensional integral.
    pub tolerance: f64,
    /// Finest tanh-sinh level (step `2^-max_level`).
    pub max_level: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_level: 9 }
    }
}

/// A tanh-sinh node: `x = endpoint + offset`, with the offset exact even
/// when `x` rounds onto the endpoint.
#[derive(Debug, Clone, Copy)]
struct Node {
    endpoint: f64,
    offset: f64,
    weight: f64,
}

impl Node {
    fn x(&self) -> f64 {
        self.endpoint + self.offset
    }

    /// `c - x` without cancellation when `c` is the nearest endpoint.
    fn from(&self, c: f64) -> f64 {
        (c - self.endpoint) - self.offset
    }
}

/// Range of the transformed variable; at its end the endpoint offset is
/// below `1e-36` of the interval.
const T_MAX: f64 = 4.0;

fn node(a: f64, b: f64, t: f64) -> Node {
    let half = 0.5 * (b - a);
    let u = FRAC_PI_2 * t.sinh();
    let cu = u.cosh();
    let weight = half * FRAC_PI_2 * t.cosh() / (cu * cu);
    if t >= 0.0 {
        Node { endpoint: b, offset: -half * 2.0 / (1.0 + (2.0 * u).exp()), weight }
    } else {
        Node { endpoint: a, offset: half * 2.0 / (1.0 + (-2.0 * u).exp()), weight }
    }
}

/// Level-doubling tanh-sinh rule on `[a, b]`.
fn tanh_sinh<F: FnMut(&Node) -> Complex64>(mut f: F, a: f64, b: f64, cfg: &OracleConfig) -> Complex64 {
    if !(b > a) {
        return Complex64::new(0.0, 0.0);
    }
    let mut eval = |t: f64| {
        let n = node(a, b, t);
        if n.offset == 0.0 || n.weight == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        f(&n) * n.weight
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += eval(k * h) + eval(-k * h);
        k += 1.0;
    }
    let mut estimate = sum * h;
    for _ in 0..cfg.max_level {
        h *= 0.5;
        let mut k = 1.0;
        while k * h <= T_MAX {
            sum += eval(k * h) + eval(-k * h);
            k += 2.0;
        }
        let next = sum * h;
        let delta = (next - estimate).norm();
        estimate = next;
        if delta <= cfg.tolerance * estimate.norm().max(1e-300) {
            break;
        }
    }
    estimate
}

/// Chebyshev polynomial `T_n(x)`.
fn chebyshev(n: u32, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    if n == 0 {
        return t0;
    }
    for _ in 1..n {
        let t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Chain Green function `(2 pi)^-1 ∫ dq e^{iqn} / (w + i0 - cos q)` from
/// `w - 1` and `w + 1`, both supplied to full relative precision.
fn chain_real(n: u32, wm1: f64, wp1: f64) -> Complex64 {
    if wm1 == 0.0 || wp1 == 0.0 {
        // Integrable singularity hit exactly: a single node of measure zero.
        return Complex64::new(0.0, 0.0);
    }
    let w = 0.5 * (wm1 + wp1);
    if wm1 < 0.0 && wp1 > 0.0 {
        let s = (-wm1 * wp1).sqrt();
        let phi = s.atan2(w);
        Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -(n as f64) * phi) / s
    } else {
        let sign = if wm1 >= 0.0 { 1.0 } else { -1.0 };
        let root = (wm1 * wp1).sqrt();
        let t = w - sign * root;
        Complex64::new(t.powi(n as i32) / (sign * root), 0.0)
    }
}

/// Chain Green function at complex `z` with `Im z > 0`.
fn chain_complex(n: u32, z: Complex64) -> Complex64 {
    let root = (z - 1.0).sqrt() * (z + 1.0).sqrt();
    let t = z - root;
    t.powu(n) / root
}

/// Breakpoints inside `(-1, 1)`, with both ends, ascending. Points within
/// `MERGE` of an end are merged into it.
fn pieces(points: &[f64]) -> Vec<f64> {
    const MERGE: f64 = 4e-16;
    let mut out = vec![-1.0, 1.0];
    out.extend(points.iter().copied().filter(|p| *p > -1.0 + MERGE && *p < 1.0 - MERGE));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn inv_sqrt_weight(n: &Node) -> f64 {
    // 1 - x and 1 + x relative to whichever endpoint is nearer.
    let one_minus = n.from(1.0);
    let one_plus = -n.from(-1.0);
    1.0 / (one_minus * one_plus).sqrt()
}

/// `g(l; e_prime + i eta)` by two-dimensional Brillouin-zone quadrature.
/// `eta = 0` gives the retarded boundary value.
pub fn lattice_green(l: [i32; 3], e_prime: f64, eta: f64, cfg: &OracleConfig) -> Complex64 {
    let mut a: Vec<u32> = l.iter().map(|v| v.unsigned_abs()).collect();
    a.sort_unstable();
    let (l1, l2, l3) = (a[0], a[1], a[2]);
    let outer_breaks = if eta == 0.0 { vec![e_prime - 2.0, e_prime, e_prime + 2.0] } else { vec![] };
    let outer = pieces(&outer_breaks);
    let mut total = Complex64::new(0.0, 0.0);
    for w in outer.windows(2) {
        total += tanh_sinh(
            |ny| {
                let shift = Shift {
                    s: e_prime - ny.x(),
                    minus_one: [ny.from(e_prime), ny.from(e_prime - 2.0)],
                    plus_one: [ny.from(e_prime + 2.0), ny.from(e_prime)],
                };
                let inner = inner_integral(l2, l3, &shift, eta, cfg);
                inner * (chebyshev(l1, ny.x()) * inv_sqrt_weight(ny))
            },
            w[0],
            w[1],
            cfg,
        );
    }
    total / (PI * PI)
}

/// Inner energy shift `s = E' - y` and the offsets of `s - 1` and `s + 1`
/// from the interval ends `-1` and `1`, each to full relative precision.
struct Shift {
    s: f64,
    minus_one: [f64; 2],
    plus_one: [f64; 2],
}

impl Shift {
    /// `c - x` at a node, where `c` is `s - 1` or `s + 1` with offsets `to`.
    fn gap(&self, c: f64, to: [f64; 2], n: &Node) -> f64 {
        let from_end = if n.endpoint == -1.0 {
            to[0]
        } else if n.endpoint == 1.0 {
            to[1]
        } else {
            c - n.endpoint
        };
        from_end - n.offset
    }
}

/// `∫ dx T_{l2}(x) / sqrt(1 - x^2) g_chain(l3; s - x)` over `[-1, 1]`.
fn inner_integral(l2: u32, l3: u32, shift: &Shift, eta: f64, cfg: &OracleConfig) -> Complex64 {
    let cfg = &OracleConfig { tolerance: 0.1 * cfg.tolerance, ..*cfg };
    let (sm1, sp1) = (shift.s - 1.0, shift.s + 1.0);
    let breaks = if eta == 0.0 { vec![sm1, sp1] } else { vec![] };
    let mut total = Complex64::new(0.0, 0.0);
    for w in pieces(&breaks).windows(2) {
        total += tanh_sinh(
            |nx| {
                let g = if eta == 0.0 {
                    chain_real(l3, shift.gap(sm1, shift.minus_one, nx), shift.gap(sp1, shift.plus_one, nx))
                } else {
                    chain_complex(l3, Complex64::new(shift.s - nx.x(), eta))
                };
                g * (chebyshev(l2, nx.x()) * inv_sqrt_weight(nx))
            },
            w[0],
            w[1],
            cfg,
        );
    }
    total
}

/// Neville extrapolation to `eta = 0` of damped oracle values on the ladder
/// `eta0, eta0/2, ...` (`levels` points).
pub fn extrapolated_green(l: [i32; 3], e_prime: f64, eta0: f64, levels: usize, cfg: &OracleConfig) -> Complex64 {
    let etas: Vec<f64> = (0..levels).map(|k| eta0 / f64::from(1u32 << k)).collect();
    let mut p: Vec<Complex64> = etas.iter().map(|eta| lattice_green(l, e_prime, *eta, cfg)).collect();
    for m in 1..levels {
        for i in 0..levels - m {
            p[i] = (p[i + 1] * etas[i] - p[i] * etas[i + m]) / (etas[i] - etas[i + m]);
        }
    }
    p[0]
}

/// Watson's closed form for `g(0; 3)`.
pub fn watson_integral() -> f64 {
    // sqrt(6)/(96 pi^3) Gamma(1/24) Gamma(5/24) Gamma(7/24) Gamma(11/24)
    const GAMMA_1_24: f64 = 23.462_487_693_183_32;
    const GAMMA_5_24: f64 = 4.396_800_100_000_252;
    const GAMMA_7_24: f64 = 3.081_505_560_003_435;
    const GAMMA_11_24: f64 = 1.932_235_335_236_375_3;
    6f64.sqrt() / (96.0 * PI.powi(3)) * GAMMA_1_24 * GAMMA_5_24 * GAMMA_7_24 * GAMMA_11_24
}
