//! Bessel functions of the first kind for integer order.
//!
//! Values come from Miller's downward recurrence normalised with
//! `J₀(x) + 2 Σₖ J₂ₖ(x) = 1`, which is stable for every order and argument
//! in the supported envelope.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Largest supported `|n|`.
pub const MAX_ORDER: i32 = 200;
/// Largest supported `|x|`.
pub const MAX_ARG: f64 = 1000.0;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

fn check(order: i32, x: f64) -> Result<()> {
    if order.unsigned_abs() > MAX_ORDER as u32 || !(x.abs() <= MAX_ARG) {
        return Err(Error::OutsideEnvelope { order, x });
    }
    Ok(())
}

/// `Jₙ(x)` for `|n| ≤ 200`, `|x| ≤ 1000`.
pub fn bessel_jn(n: i32, x: f64) -> Result<f64> {
    check(n, x)?;
    let order = n.unsigned_abs() as usize;
    let value = bessel_j_sequence(order, x)?[order];
    Ok(if n < 0 && order % 2 == 1 { -value } else { value })
}

/// `[J₀(x), J₁(x), …, J_{n_max}(x)]`.
pub fn bessel_j_sequence(n_max: usize, x: f64) -> Result<Vec<f64>> {
    check(n_max.min(i32::MAX as usize) as i32, x)?;
    let ax = x.abs();
    let mut out = vec![0.0; n_max + 1];
    if ax < 1e-30 {
        // leading series term; higher orders underflow
        out[0] = 1.0;
        if n_max >= 1 {
            out[1] = 0.5 * ax;
        }
    } else {
        miller(ax, &mut out);
    }
    if x < 0.0 {
        out.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
    }
    Ok(out)
}

fn miller(x: f64, out: &mut [f64]) {
    let n_max = out.len() - 1;
    let reach = (n_max as f64).max(x) + 12.0 * libm::cbrt(x) + 30.0;
    let mut start = libm::ceil(reach) as usize;
    start += start % 2;
    let two_over_x = 2.0 / x;
    let (mut above, mut current) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    // current holds J_k (unnormalised), above holds J_{k+1}
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        let m = k - 1;
        if m <= n_max {
            out[m] = current;
        }
        if m == 0 {
            norm += current;
        } else if m % 2 == 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out[m.min(n_max + 1)..].iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// `J₀'(x) = −J₁(x)`.
fn j0_and_derivative(x: f64) -> (f64, f64) {
    let j = bessel_j_sequence(1, x).unwrap_or_else(|_| vec![f64::NAN, f64::NAN]);
    (j[0], -j[1])
}

/// Zeros of `J₀` in `[lo, hi]`, ascending, each refined until `|J₀| < 1e-14`
/// or the bracket collapses.
pub fn j0_zeros_in(lo: f64, hi: f64) -> Vec<f64> {
    let mut zeros = Vec::new();
    if !(hi > lo) || lo < 0.0 || hi > MAX_ARG {
        return zeros;
    }
    // zeros of J₀ are separated by more than 2.9
    let step = 0.1;
    let mut a = lo;
    let mut fa = j0_and_derivative(a).0;
    while a < hi {
        let b = (a + step).min(hi);
        let fb = j0_and_derivative(b).0;
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            zeros.push(refine_j0_zero(a, b, fa));
        } else if fb == 0.0 && b == hi {
            zeros.push(b);
        }
        a = b;
        fa = fb;
    }
    zeros
}

/// Safeguarded Newton iteration inside a sign-changing bracket.
fn refine_j0_zero(mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sign_a = fa.signum();
    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        let (f, df) = j0_and_derivative(x);
        if f == 0.0 {
            return x;
        }
        if f.signum() == sign_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - f / df;
        let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}
