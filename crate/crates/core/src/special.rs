//! Integer-order Bessel functions and the incomplete-gamma style tail
//! integral used by the lattice Green function.
//!
//! `J_n(x)` comes from Miller's backward recurrence for moderate arguments
//! and from the Hankel expansion of `J_0`, `J_1` plus forward recurrence for
//! large ones. Modified Bessel functions are only ever returned scaled by
//! `e^{-x}`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent in std builds
use num_traits::Float;

const RESCALE_AT: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Argument above which `J_0`/`J_1` switch to the Hankel expansion.
const J_ASYMPTOTIC_MIN: f64 = 25.0;

/// Argument above which the scaled `I_n` switch to their large-`x` series.
const I_ASYMPTOTIC_MIN: f64 = 2.0e4;

/// Hankel coefficients `a_k(n) = prod_{j=1..k} (4n^2 - (2j-1)^2) / (k! 8^k)`.
///
/// These drive both `J_n(x) ~ sqrt(2/(pi x)) Re[sum_k i^k a_k x^-k e^{i chi}]`
/// and `e^{-x} I_n(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k x^-k`.
pub fn hankel_coefficients(n: u32, count: usize) -> Vec<f64> {
    let mu = 4.0 * f64::from(n) * f64::from(n);
    let mut out = Vec::with_capacity(count);
    let mut a = 1.0;
    for k in 0..count {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (8.0 * k as f64);
        }
        out.push(a);
    }
    out
}

/// Sum of the Hankel series for `P_n(x)` and `Q_n(x)`.
fn hankel_pq(n: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * f64::from(n) * f64::from(n);
    let (mut p, mut q) = (1.0, 0.0);
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60usize {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * x);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        // i^k pattern: k = 1 -> +Q, 2 -> -P, 3 -> -Q, 4 -> +P
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn j_hankel(n: u32, x: f64) -> f64 {
    let (p, q) = hankel_pq(n, x);
    let chi = x - (f64::from(n) * 0.5 + 0.25) * core::f64::consts::PI;
    let (s, c) = chi.sin_cos();
    (2.0 / (core::f64::consts::PI * x)).sqrt() * (p * c - q * s)
}

/// Fills `out[n] = J_n(x)` for `n = 0..out.len()`, `x >= 0`.
pub fn bessel_j_orders(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let n_max = out.len() - 1;
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    if x >= J_ASYMPTOTIC_MIN && x >= 2.0 * n_max as f64 {
        out[0] = j_hankel(0, x);
        if n_max >= 1 {
            out[1] = j_hankel(1, x);
        }
        for n in 1..n_max {
            out[n + 1] = 2.0 * n as f64 / x * out[n] - out[n - 1];
        }
        return;
    }
    let top = n_max.max(x.ceil() as usize);
    let mut m = top + 20 + (40.0 * top as f64).sqrt().ceil() as usize;
    m += m & 1;
    out.fill(0.0);
    let (mut above, mut cur) = (0.0, 1e-30);
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        if k <= n_max {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let below = 2.0 * k as f64 / x * cur - above;
        above = cur;
        cur = below;
        if cur.abs() > RESCALE_AT {
            cur *= RESCALE_BY;
            above *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// `J_n(x)` for any integer order and real argument.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let mut buf = vec![0.0; order + 1];
    bessel_j_orders(x.abs(), &mut buf);
    let odd_flip = |v: f64, cond: bool| if cond && order % 2 == 1 { -v } else { v };
    odd_flip(odd_flip(buf[order], n < 0), x < 0.0)
}

/// Fills `out[n] = e^{-x} I_n(x)` for `n = 0..out.len()`, `x >= 0`.
pub fn bessel_i_scaled_orders(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let n_max = out.len() - 1;
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    if x >= I_ASYMPTOTIC_MIN && x >= 40.0 * (n_max * n_max) as f64 {
        let pre = 1.0 / (2.0 * core::f64::consts::PI * x).sqrt();
        for (n, v) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            let mut sign = 1.0;
            for (k, a) in hankel_coefficients(n as u32, 12).into_iter().enumerate() {
                sum += sign * a / x.powi(k as i32);
                sign = -sign;
            }
            *v = pre * sum;
        }
        return;
    }
    let mut m = n_max + 20 + (80.0 * x).sqrt().ceil() as usize;
    m += m & 1;
    out.fill(0.0);
    let (mut above, mut cur) = (0.0, 1e-30);
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        if k <= n_max {
            out[k] = cur;
        }
        norm += 2.0 * cur;
        let below = 2.0 * k as f64 / x * cur + above;
        above = cur;
        cur = below;
        if cur > RESCALE_AT {
            cur *= RESCALE_BY;
            above *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// `e^{-|x|} I_n(|x|)` for any integer order.
pub fn bessel_i_scaled(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let mut buf = vec![0.0; order + 1];
    bessel_i_scaled_orders(x.abs(), &mut buf);
    buf[order]
}

/// `int_{t0}^inf t^{-a} e^{-beta t} dt` for `a > 1`, `t0 > 0`, `Re beta >= 0`.
///
/// Equals `beta^{a-1} Gamma(1-a, beta t0)`. Large `|beta t0|` uses the
/// Legendre continued fraction, small ones the power series.
pub fn upper_tail_integral(a: f64, beta: Complex64, t0: f64) -> Complex64 {
    let z = beta * t0;
    let s = 1.0 - a;
    if z.norm() < 1e-14 {
        return Complex64::new(t0.powf(s) / (a - 1.0), 0.0);
    }
    if z.norm() >= 1.5 {
        return t0.powf(s) * (-z).exp() * gamma_cf(s, z);
    }
    // beta^{-s} Gamma(s) - t0^s sum_n (-z)^n / (n! (s + n))
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut n = 0usize;
    loop {
        let add = term / (s + n as f64);
        sum += add;
        if add.norm() <= 1e-17 * sum.norm() || n > 200 {
            break;
        }
        n += 1;
        term *= -z / n as f64;
    }
    beta.powf(-s) * libm::tgamma(s) - t0.powf(s) * sum
}

/// Continued fraction `h` with `Gamma(s, z) = e^{-z} z^s h(s, z)`.
fn gamma_cf(s: f64, z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = z + 1.0 - s;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..5000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = b + an / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Reference values from an arbitrary-precision evaluator.
    #[test]
    fn j_reference_values() {
        assert_relative_eq!(bessel_j(0, 30.0), -0.0863679835810402, max_relative = 1e-12);
        assert_relative_eq!(bessel_j(5, 30.0), -0.143240295512077, max_relative = 1e-12);
        assert_relative_eq!(bessel_j(12, 7.5), 0.00522504468580346, max_relative = 1e-12);
        assert_relative_eq!(bessel_j(1, 1.0), 0.440050585744933, max_relative = 1e-13);
        assert_relative_eq!(bessel_j(0, 2.404825557695773), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn j_branches_meet() {
        // A 13-entry table at x = 25 is forced onto the Miller branch.
        let mut miller = [0.0; 13];
        bessel_j_orders(25.0, &mut miller);
        for n in 0..=12u32 {
            let hankel = if n < 2 { j_hankel(n, 25.0) } else { bessel_j(n as i32, 25.0) };
            assert!((miller[n as usize] - hankel).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn j_negative_order_and_argument() {
        assert_relative_eq!(bessel_j(-3, 2.0), -bessel_j(3, 2.0), max_relative = 1e-15);
        assert_relative_eq!(bessel_j(3, -2.0), -bessel_j(3, 2.0), max_relative = 1e-15);
        assert_relative_eq!(bessel_j(4, -2.0), bessel_j(4, 2.0), max_relative = 1e-15);
    }

    #[test]
    fn j_tiny_argument() {
        let mut out = [0.0; 6];
        bessel_j_orders(1e-3, &mut out);
        assert_relative_eq!(out[0], 1.0 - 2.5e-7, max_relative = 1e-12);
        assert_relative_eq!(out[1], 5e-4, max_relative = 1e-6);
        assert!(out[5] > 0.0 && out[5] < 1e-17);
    }

    #[test]
    fn i_scaled_reference_values() {
        assert_relative_eq!(bessel_i_scaled(3, 400.0), 0.0197298618160321, max_relative = 1e-12);
        assert_relative_eq!(bessel_i_scaled(0, 1.0), 0.465759607593640, max_relative = 1e-13);
        assert_relative_eq!(bessel_i_scaled(2, 0.5), 0.0193520577096633, max_relative = 1e-13);
    }

    #[test]
    fn i_scaled_asymptotic_branch_matches_miller() {
        let x = I_ASYMPTOTIC_MIN;
        let mut a = [0.0; 4];
        bessel_i_scaled_orders(x, &mut a);
        let mut b = [0.0; 4];
        bessel_i_scaled_orders(x * (1.0 - 1e-12), &mut b);
        for n in 0..4 {
            assert_relative_eq!(a[n], b[n], max_relative = 1e-11);
        }
    }

    #[test]
    fn tail_integral_limits() {
        let t0 = 400.0;
        let zero = upper_tail_integral(1.5, Complex64::new(0.0, 0.0), t0);
        assert_relative_eq!(zero.re, 0.1, max_relative = 1e-15);
        // Real beta: compare against exp(-beta t0) t0^{-a}/beta leading behaviour.
        let r = upper_tail_integral(2.5, Complex64::new(2.0, 0.0), t0);
        let lead = (-800.0f64).exp() * t0.powf(-2.5) / 2.0;
        assert!((r.re - lead).abs() <= 1e-2 * lead.abs() + 1e-300);
    }

    #[test]
    fn tail_integral_reference() {
        // beta^{a-1} Gamma(1-a, beta t0) from an arbitrary-precision evaluator.
        let v = upper_tail_integral(1.5, Complex64::new(0.01, -0.003), 400.0);
        assert_relative_eq!(v.re, 2.3642183786041776e-05, max_relative = 1e-12);
        assert_relative_eq!(v.im, 1.668679063378625e-04, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn j_recurrence_and_sum_rule(x in 0.01f64..80.0) {
            let mut out = [0.0; 16];
            bessel_j_orders(x, &mut out);
            let mut s = out[0];
            for n in 1..15 {
                let lhs = out[n - 1] + out[n + 1];
                prop_assert!((lhs - 2.0 * n as f64 / x * out[n]).abs() < 1e-11 * (1.0 + 2.0 * n as f64 / x));
            }
            for v in out.iter().skip(2).step_by(2) { s += 2.0 * v; }
            if x < 1.5 { prop_assert!((s - 1.0).abs() < 1e-12); }
        }

        #[test]
        fn i_scaled_positive_and_decreasing_in_order(x in 0.01f64..600.0) {
            let mut out = [0.0; 12];
            bessel_i_scaled_orders(x, &mut out);
            for n in 0..11 {
                prop_assert!(out[n] > 0.0);
                prop_assert!(out[n + 1] < out[n]);
            }
        }

        #[test]
        fn tail_integral_recurrence(a in 1.2f64..6.0, br in 0.0f64..0.5, bi in -3.0f64..3.0) {
            // R(a+1) = (t0^{-a} e^{-beta t0} - beta R(a)) / a
            let t0 = 50.0;
            let beta = Complex64::new(br, bi);
            let r0 = upper_tail_integral(a, beta, t0);
            let r1 = upper_tail_integral(a + 1.0, beta, t0);
            let rhs = (t0.powf(-a) * (-beta * t0).exp() - beta * r0) / a;
            prop_assert!((r1 - rhs).norm() <= 1e-9 * r1.norm().max(t0.powf(-a)));
        }
    }
}
