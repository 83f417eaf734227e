//! Floquet perturbation theory for the sinusoidal detuning drive.
//!
//! In the interaction picture of `H₀(t) = Δ(t)·Σnᵢ` every Rydberg
//! excitation carries the phase `θ(t) = (Δ₀/ω)·sin ωt`, and the Jacobi–Anger
//! expansion `e^{iθ} = Σₙ Jₙ(Δ₀/ω)·e^{inωt}` turns period averages into
//! Bessel sums.
//!
//! Conventions: amplitudes are quoted as effective Rabi frequencies, so a
//! kinetic coefficient `c` stands for the operator `(c/2)·Σσˣ` (the drive
//! itself is `(Ω/2)·Σσˣ`). `delta0` enters with the sign of `H₀` above,
//! which is opposite to the lab-frame `−Δ(t)·Σnᵢ`; only the odd-order
//! quantities (second-order term, resonance amplitude) care.

mod bessel;
mod fock;

use alloc::vec::Vec;
use core::f64::consts::TAU;

pub use self::bessel::{bessel_j_sequence, bessel_jn, j0_zeros_in, MAX_ARG, MAX_ORDER};
pub use self::fock::{three_site_fock_check, three_site_hamiltonian, FockCheck};

use crate::geometry::InteractionMatrix;
use crate::{Error, Result, C64};

/// Drive frequencies `ω*` in `[lo, hi]` with `J₀(Δ₀/ω*) = 0`, descending.
pub fn predict_freezing_frequencies(delta0: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("omega range", "need 0 < lo < hi"));
    }
    let a = delta0.abs();
    if a == 0.0 {
        return Ok(Vec::new());
    }
    let (x_lo, x_hi) = (a / hi, (a / lo).min(MAX_ARG));
    Ok(j0_zeros_in(x_lo, x_hi).into_iter().map(|x| a / x).collect())
}

/// Diagonal coupling `V_k` between sites `k` apart, `Σᵢ V_k nᵢ n_{i+k}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffsetCoupling {
    pub offset: usize,
    pub strength: f64,
}

/// Couplings `V_k` for `k ≥ min_offset` read off the first row of a
/// translation-invariant chain.
pub fn chain_couplings(matrix: &InteractionMatrix, min_offset: usize) -> Vec<OffsetCoupling> {
    (min_offset.max(1)..matrix.sites())
        .map(|k| OffsetCoupling { offset: k, strength: matrix.get(0, k) })
        .filter(|c| c.strength != 0.0)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FptFirstOrder {
    /// Effective Rabi frequency multiplying `(1/2)·Σσˣ`, in rad/μs.
    pub kinetic_coefficient: f64,
    /// Diagonal couplings, unchanged at first order.
    pub interaction_terms: Vec<OffsetCoupling>,
}

/// Period-averaged Hamiltonian to first order.
///
/// For `harmonic = 0` the coefficient is `Ω₀·J₀(Δ₀/ω)`. For a Rabi drive
/// `(Ω₀/2)[1 + cos rωt]` the average of `cos(rωt)·e^{iθ}` is
/// `(J_r + J_{−r})/2`, so the coefficient is `(Ω₀/2)[J₀ + J_r]` for even
/// `r` and `(Ω₀/2)·J₀` for odd `r`.
pub fn fpt_first_order(
    delta0: f64,
    omega0: f64,
    omega: f64,
    harmonic: u32,
    interactions: &[OffsetCoupling],
) -> Result<FptFirstOrder> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", "must be positive"));
    }
    let x = delta0 / omega;
    let kinetic_coefficient = match harmonic {
        0 => omega0 * bessel_jn(0, x)?,
        r => {
            let r = i32::try_from(r).map_err(|_| Error::invalid("r", "harmonic too large"))?;
            let side = 0.5 * (bessel_jn(r, x)? + bessel_jn(-r, x)?);
            0.5 * omega0 * (bessel_jn(0, x)? + side)
        }
    };
    Ok(FptFirstOrder { kinetic_coefficient, interaction_terms: interactions.to_vec() })
}

/// Where the spin flip sits in a mixed flip–occupation term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixedTerm {
    /// `σᵢˣ n_{i+k}`
    FlipLeft,
    /// `nᵢ σ_{i+k}ˣ`
    FlipRight,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondOrderTerm {
    pub kind: MixedTerm,
    pub offset: usize,
    /// Effective-Rabi coefficient; the operator weight is half of it.
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FptSecondOrder {
    /// `Σ_{n≠0} Jₙ(Δ₀/ω)/(nω)` over `|n| ≤ n_max`, in μs.
    pub bessel_sum: f64,
    pub terms: Vec<SecondOrderTerm>,
    pub n_max: usize,
    /// Bound on the omitted `|n| > n_max` part of any coefficient.
    pub tail_bound: f64,
}

/// Interaction-induced second-order terms
/// `Ω₀·Σ_{n≠0} Jₙ(Δ₀/ω)/(nω) · Σ_{i,k} V_k (σᵢˣ n_{i+k} + nᵢ σ_{i+k}ˣ)`.
///
/// These are the only second-order pieces linear in both `Ω₀` and `V_k`
/// once the square of the first-order term is removed. Even `n` cancel
/// pairwise, so only odd orders contribute.
pub fn fpt_second_order(
    delta0: f64,
    omega0: f64,
    omega: f64,
    interactions: &[OffsetCoupling],
    n_max: usize,
) -> Result<FptSecondOrder> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", "must be positive"));
    }
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let x = delta0 / omega;
    let j = bessel_j_sequence(n_max, x)?;
    // J₋ₙ/(−n) = (−1)^{n+1} Jₙ/n: even n cancel, odd n double
    let bessel_sum = (1..=n_max).step_by(2).map(|n| 2.0 * j[n] / (n as f64 * omega)).sum::<f64>();
    let tail = bessel_tail(x, n_max) * 2.0 / ((n_max + 1) as f64 * omega);
    let max_v = interactions.iter().map(|c| c.strength.abs()).fold(0.0, f64::max);
    let mut terms = Vec::with_capacity(2 * interactions.len());
    for c in interactions.iter().filter(|c| c.strength != 0.0) {
        let coefficient = omega0 * bessel_sum * c.strength;
        for kind in [MixedTerm::FlipLeft, MixedTerm::FlipRight] {
            terms.push(SecondOrderTerm { kind, offset: c.offset, coefficient });
        }
    }
    Ok(FptSecondOrder { bessel_sum, terms, n_max, tail_bound: omega0.abs() * max_v * tail })
}

/// Upper bound on `Σ_{n>n_max} |Jₙ(x)|` from `|Jₙ(x)| ≤ (|x|/2)ⁿ/n!`.
fn bessel_tail(x: f64, n_max: usize) -> f64 {
    let half = 0.5 * x.abs();
    if half == 0.0 {
        return 0.0;
    }
    let first = n_max + 1;
    let log_first = (1..=first).map(|n| libm::log(half / n as f64)).sum::<f64>();
    let mut term = libm::exp(log_first);
    let mut sum = 0.0;
    let mut n = first;
    // sum exactly until the ratio drops below 1/2, then bound geometrically
    while half / (n + 1) as f64 > 0.5 {
        sum += term;
        n += 1;
        term *= half / n as f64;
    }
    sum + 2.0 * term
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceAmplitude {
    /// `∫₀ᵀ Ω₀ e^{iΔ₀ sin(ωt)/ω − iVt} dt`.
    pub value: C64,
    pub n_max: usize,
    /// Contribution of each harmonic `n`, `−n_max ≤ n ≤ n_max`.
    pub terms: Vec<(i32, C64)>,
}

/// Closed form of the first-order amplitude into a configuration whose
/// interaction energy is `V`:
///
/// ```text
/// 2Ω₀ Σₙ Jₙ(Δ₀/ω) e^{−i(V−nω)T/2} sin[(V−nω)T/2]/(V−nω)
/// ```
///
/// Each term tends to `Ω₀·T·Jₙ` as `V → nω`.
pub fn fock_resonance_amplitude(
    v: f64,
    delta0: f64,
    omega0: f64,
    omega: f64,
    n_max: usize,
) -> Result<ResonanceAmplitude> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", "must be positive"));
    }
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let period = TAU / omega;
    let j = bessel_j_sequence(n_max, delta0 / omega)?;
    let mut terms = Vec::with_capacity(2 * n_max + 1);
    let mut value = C64::new(0.0, 0.0);
    for n in -(n_max as i32)..=n_max as i32 {
        let jn = j[n.unsigned_abs() as usize] * if n < 0 && n % 2 != 0 { -1.0 } else { 1.0 };
        let half_phase = 0.5 * (v - n as f64 * omega) * period;
        // e^{−iu}·sin(u)/a with a = 2u/T, written through sinc for u → 0
        let term = C64::from_polar(omega0 * period * jn * sinc(half_phase), -half_phase);
        terms.push((n, term));
        value += term;
    }
    Ok(ResonanceAmplitude { value, n_max, terms })
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        libm::sin(u) / u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freezing_frequencies_delta20() {
        let w = predict_freezing_frequencies(20.0, 1.5, 4.5).unwrap();
        let expect = [3.6232, 2.3112, 1.6961];
        assert_eq!(w.len(), 3);
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
            assert!(bessel_jn(0, 20.0 / a).unwrap().abs() < 1e-10);
        }
        assert_eq!(predict_freezing_frequencies(-20.0, 1.5, 4.5).unwrap(), w);
    }

    #[test]
    fn freezing_frequencies_delta16_5() {
        let w = predict_freezing_frequencies(16.5, 1.2, 4.5).unwrap();
        let expect = [2.9891, 1.9067, 1.3993];
        assert_eq!(w.len(), 3);
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn freezing_frequencies_edge_cases() {
        assert!(predict_freezing_frequencies(0.0, 1.0, 5.0).unwrap().is_empty());
        assert!(predict_freezing_frequencies(20.0, 10.0, 12.0).unwrap().is_empty());
        assert!(predict_freezing_frequencies(20.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn first_order_values() {
        let f = fpt_first_order(0.0, 2.0, 3.0, 0, &[]).unwrap();
        assert_eq!(f.kinetic_coefficient, 2.0);
        let f = fpt_first_order(20.0, 2.0, 20.0 / 5.520_078_110_286_311, 0, &[]).unwrap();
        assert!(f.kinetic_coefficient.abs() < 1e-12);
        let f = fpt_first_order(20.0, 5.0, 2.0, 2, &[]).unwrap();
        let expect = 2.5 * (bessel_jn(0, 10.0).unwrap() + bessel_jn(2, 10.0).unwrap());
        assert!((f.kinetic_coefficient - expect).abs() < 1e-15);
        let f = fpt_first_order(20.0, 5.0, 2.0, 1, &[]).unwrap();
        assert!((f.kinetic_coefficient - 2.5 * bessel_jn(0, 10.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn second_order_structure() {
        let none = fpt_second_order(20.0, 2.0, 2.5, &[], 60).unwrap();
        assert!(none.terms.is_empty());
        let zero = fpt_second_order(20.0, 2.0, 2.5, &[OffsetCoupling { offset: 2, strength: 0.0 }], 60).unwrap();
        assert!(zero.terms.iter().all(|t| t.coefficient == 0.0));

        let one = fpt_second_order(20.0, 2.0, 2.5, &[OffsetCoupling { offset: 2, strength: 7.858 }], 60).unwrap();
        assert_eq!(one.terms.len(), 2);
        assert!(one.terms.iter().all(|t| t.offset == 2 && t.coefficient != 0.0));
        let two = fpt_second_order(20.0, 2.0, 2.5, &[OffsetCoupling { offset: 2, strength: 2.0 * 7.858 }], 60).unwrap();
        for (a, b) in one.terms.iter().zip(&two.terms) {
            assert!((2.0 * a.coefficient - b.coefficient).abs() < 1e-14 * b.coefficient.abs());
        }
        assert!(one.tail_bound < 1e-20);
    }

    #[test]
    fn bessel_sum_matches_signed_series() {
        // direct two-sided sum over n ≠ 0
        let (x, omega) = (20.0 / 2.5, 2.5);
        let direct: f64 = (-60i32..=60)
            .filter(|&n| n != 0)
            .map(|n| bessel_jn(n, x).unwrap() / (n as f64 * omega))
            .sum();
        let s = fpt_second_order(20.0, 1.0, omega, &[], 60).unwrap().bessel_sum;
        assert!((s - direct).abs() < 1e-14);
    }

    #[test]
    fn resonance_limits() {
        let (d0, o0, w) = (20.0, 2.0, 2.5);
        let period = TAU / w;
        let x = d0 / w;
        let at_zero = fock_resonance_amplitude(0.0, d0, o0, w, 40).unwrap();
        assert!((at_zero.value - C64::new(o0 * period * bessel_jn(0, x).unwrap(), 0.0)).norm() < 1e-12);
        let at_one = fock_resonance_amplitude(w, d0, o0, w, 40).unwrap();
        assert!((at_one.value - C64::new(o0 * period * bessel_jn(1, x).unwrap(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn resonance_truncation_converged() {
        for &(v, d0, w) in &[(7.86, 20.0, 2.5), (3.0, 12.0, 1.0), (50.0, -16.0, 1.2)] {
            let a = fock_resonance_amplitude(v, d0, 2.0, w, 40).unwrap().value;
            let b = fock_resonance_amplitude(v, d0, 2.0, w, 80).unwrap().value;
            assert!((a - b).norm() < 1e-12, "{v} {d0} {w}");
        }
    }
}
