//! Three-site blockaded chain in its five-state Fock space.

use alloc::vec;
use alloc::vec::Vec;

use super::{bessel_jn, fock_resonance_amplitude};
use crate::dense::{self, RealMatrix, TaylorScratch};
use crate::drive::DriveProtocol;
use crate::evolve::{DenseModel, QuantumState, Sampling};
use crate::{Result, C64};

/// Configurations `000, 100, 010, 001, 101` (site 0 leftmost).
const CONFIGS: [u64; 5] = [0b000, 0b001, 0b010, 0b100, 0b101];
const ORACLE_STEPS: usize = 2000;
const RESONANCE_ORDERS: usize = 60;

fn hopping() -> RealMatrix {
    let mut k = RealMatrix::zeros(5);
    for a in 0..5 {
        for b in 0..5 {
            if (CONFIGS[a] ^ CONFIGS[b]).count_ones() == 1 {
                k.set(a, b, 1.0);
            }
        }
    }
    k
}

/// `H(t) = Δ₀cos(ωt)·Σnᵢ + (Ω₀/2)·Σσˣ + V·n₀n₂` on the five allowed
/// configurations, in the order `000, 100, 010, 001, 101`.
pub fn three_site_hamiltonian(v: f64, delta0: f64, omega0: f64, omega: f64, t: f64) -> RealMatrix {
    let k = hopping();
    let d = delta0 * libm::cos(omega * t);
    let mut h = RealMatrix::zeros(5);
    for a in 0..5 {
        for b in 0..5 {
            h.set(a, b, 0.5 * omega0 * k.get(a, b));
        }
        let n = CONFIGS[a].count_ones() as f64;
        h.set(a, a, n * d + if CONFIGS[a] == 0b101 { v } else { 0.0 });
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockCheck {
    /// Mean Rydberg density after one period from the exact evolution.
    pub simulated: f64,
    /// Same quantity from the period-averaged first-order Hamiltonian.
    pub predicted: f64,
    pub discrepancy: f64,
    /// Effective Rabi frequency `Ω₀·J₀(Δ₀/ω)` of the `000 ↔ single` hops.
    pub j0_channel: f64,
    /// `∫₀ᵀ Ω₀ e^{iΔ₀ sin(ωt)/ω + iVt} dt` feeding `single ↔ 101`.
    pub resonance: C64,
}

/// Evolves `|000⟩` over one period of `Δ₀cos ωt` and compares with the
/// first-order interaction-picture average.
///
/// In the frame of `Δ(t)Σn + V n₀n₂` the hops out of the vacuum carry
/// `e^{i(Δ₀/ω)sin ωt}`, averaging to `(Ω₀/2)J₀`, while the hops into `101`
/// also carry `e^{iVt}` and average to the resonance amplitude over `2T`.
/// The frame rotation is diagonal and trivial at `t = T` apart from a phase
/// on `101`, so densities compare directly.
pub fn three_site_fock_check(v: f64, delta0: f64, omega0: f64, omega: f64) -> Result<FockCheck> {
    let protocol = DriveProtocol::single(delta0, omega0, omega);
    protocol.validate()?;
    let period = protocol.period();

    let interaction = CONFIGS.iter().map(|&c| if c == 0b101 { v } else { 0.0 }).collect();
    let model = DenseModel::from_parts(3, CONFIGS.to_vec(), interaction, hopping(), 1.0)?;
    let schedule = protocol.discretize(period, ORACLE_STEPS)?;
    let run = model.evolve(&schedule, Sampling::FinalOnly, &QuantumState::vacuum(5))?;
    let simulated = run.final_density();

    let j0_channel = omega0 * bessel_jn(0, delta0 / omega)?;
    let resonance = fock_resonance_amplitude(-v, delta0, omega0, omega, RESONANCE_ORDERS)?.value;
    let averaged = averaged_hamiltonian(j0_channel, resonance / (2.0 * period));
    let mut psi = vec![C64::new(0.0, 0.0); 5];
    psi[0] = C64::new(1.0, 0.0);
    let bound = averaged.iter().map(|row| row.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let apply = |x: &[C64], y: &mut [C64]| {
        for (row, o) in averaged.iter().zip(y.iter_mut()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    };
    dense::expm_action(apply, bound, period, 1e-15, &mut psi, &mut TaylorScratch::default());
    let (_, predicted) = model.densities(&psi);

    Ok(FockCheck { simulated, predicted, discrepancy: (simulated - predicted).abs(), j0_channel, resonance })
}

/// Hermitian 5×5 average with `⟨single|H̄|000⟩ = c/2` and
/// `⟨101|H̄|001⟩ = ⟨101|H̄|100⟩ = g`.
fn averaged_hamiltonian(c: f64, g: C64) -> Vec<[C64; 5]> {
    let zero = C64::new(0.0, 0.0);
    let mut h = vec![[zero; 5]; 5];
    for s in 1..4 {
        h[s][0] = C64::new(0.5 * c, 0.0);
        h[0][s] = C64::new(0.5 * c, 0.0);
    }
    for s in [1, 3] {
        h[4][s] = g;
        h[s][4] = g.conj();
    }
    h
}
