#![allow(dead_code)]

use rydberg_core::basis::{chain_adjacency, Basis, Constraint};
use rydberg_core::evolve::Model;
use rydberg_core::geometry::{Cutoff, GeometryKind, InteractionMatrix, Layout};
use rydberg_core::{C6_70S, C64};

/// Adaptive Gauss–Kronrod (7/15) quadrature of a complex integrand.
pub fn integrate<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64) -> C64 {
    let (value, err) = gk15(f, a, b);
    adapt(f, a, b, tol, value, err, 0)
}

fn adapt<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64, value: C64, err: f64, depth: u32) -> C64 {
    if err <= tol || depth > 40 {
        return value;
    }
    let m = 0.5 * (a + b);
    let (l, el) = gk15(f, a, m);
    let (r, er) = gk15(f, m, b);
    adapt(f, a, m, 0.5 * tol, l, el, depth + 1) + adapt(f, m, b, 0.5 * tol, r, er, depth + 1)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    ((kronrod * h), ((kronrod - gauss) * h).norm())
}

/// `Jₙ(x)` from the periodic trapezoid rule on `(1/2π)∫cos(nτ − x sin τ)dτ`.
pub fn bessel_trapezoid(n: i32, x: f64) -> f64 {
    let m = 4096;
    let sum: f64 = (0..m)
        .map(|k| {
            let tau = std::f64::consts::TAU * k as f64 / m as f64;
            (n as f64 * tau - x * tau.sin()).cos()
        })
        .sum();
    sum / m as f64
}

/// Root of `f` in `[a, b]` by bisection, assuming a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) <= 0.0, "no sign change in [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || b - a < 1e-15 * m.abs().max(1.0) {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

pub fn chain(sites: usize, d: f64) -> rydberg_core::geometry::AtomArray {
    Layout::new(GeometryKind::Chain, sites, d).build().unwrap()
}

pub fn full_chain(sites: usize, d: f64) -> (Model, Basis) {
    let m = InteractionMatrix::new(&chain(sites, d), C6_70S, Cutoff::AllPairs).unwrap();
    (Model::Full(m), Basis::enumerate(sites, Constraint::Unconstrained, &[]).unwrap())
}

pub fn pxp_chain(sites: usize) -> (Model, Basis) {
    let b = Basis::enumerate(sites, Constraint::NearestNeighbor, &chain_adjacency(sites, 1)).unwrap();
    (Model::pxp(), b)
}

pub fn ppxpp_chain(sites: usize) -> (Model, Basis) {
    let b = Basis::enumerate(sites, Constraint::NextNearestNeighbor, &chain_adjacency(sites, 2)).unwrap();
    (Model::ppxpp(), b)
}

/// Random normalised amplitudes from a simple LCG.
pub fn random_state(dim: usize, seed: u64) -> Vec<C64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let v: Vec<C64> = (0..dim).map(|_| C64::new(next(), next())).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}
