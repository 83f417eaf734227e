//! Time evolution under the driven Rydberg Hamiltonian
//!
//! ```text
//! H(t) = −Δ(t) Σᵢ nᵢ + (Ω(t)/2) Σᵢ σᵢˣ + Σ_{i<j} V_ij nᵢ nⱼ
//! ```
//!
//! either on the full 2^L space or projected onto a blockade subspace.
//! [`Hamiltonian`] drives the second-order Trotter integrator; [`DenseModel`]
//! is an independently assembled matrix used by the exact-exponential oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{Basis, Constraint};
use crate::dense::{self, RealMatrix, TaylorScratch};
use crate::drive::{DriveProtocol, Schedule};
use crate::geometry::InteractionMatrix;
use crate::{Error, Result, C64};

/// Largest basis the dense oracle accepts.
pub const ORACLE_DIM_LIMIT: usize = 4096;

/// Truncation bound of the projected kinetic exponential per Trotter step.
/// Small enough that a few thousand steps keep the norm within 1e-9.
pub const KINETIC_TOLERANCE: f64 = 1e-12;

/// Allowed norm drift over a run before the integrator reports failure.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Which Hamiltonian is simulated.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    /// Complete van der Waals model on all 2^L configurations.
    Full(InteractionMatrix),
    /// Blockade-projected model. `tails` optionally keeps diagonal couplings
    /// beyond the blockaded shells.
    Constrained { constraint: Constraint, tails: Option<InteractionMatrix> },
}

impl Model {
    pub fn pxp() -> Self {
        Model::Constrained { constraint: Constraint::NearestNeighbor, tails: None }
    }

    pub fn ppxpp() -> Self {
        Model::Constrained { constraint: Constraint::NextNearestNeighbor, tails: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Full(_) => "full",
            Model::Constrained { constraint, .. } => constraint.as_str(),
        }
    }

    /// Constraint of the basis this model acts on.
    pub fn constraint(&self) -> Constraint {
        match self {
            Model::Full(_) => Constraint::Unconstrained,
            Model::Constrained { constraint, .. } => *constraint,
        }
    }

    fn interactions(&self) -> Option<&InteractionMatrix> {
        match self {
            Model::Full(m) => Some(m),
            Model::Constrained { tails, .. } => tails.as_ref(),
        }
    }

    fn check_basis(&self, basis: &Basis) -> Result<()> {
        match self {
            Model::Full(_) if !basis.is_complete() => {
                return Err(Error::IncompatibleBasis("the full model needs all 2^L configurations"))
            }
            Model::Constrained { constraint, .. } if *constraint != basis.constraint() => {
                return Err(Error::IncompatibleBasis("basis constraint differs from the model's"))
            }
            _ => {}
        }
        if let Some(m) = self.interactions() {
            if m.sites() != basis.sites() {
                return Err(Error::DimensionMismatch { expected: basis.sites(), found: m.sites() });
            }
        }
        Ok(())
    }
}

/// Normalised amplitude vector over the states of a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// All atoms in the ground state. The empty configuration always sits at
    /// index 0 of a sorted basis.
    pub fn vacuum(dim: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[0] = C64::new(1.0, 0.0);
        QuantumState { amplitudes }
    }

    /// Basis state of a single configuration.
    pub fn from_config(basis: &Basis, config: u64) -> Result<Self> {
        let idx = basis
            .index_of(config)
            .ok_or_else(|| Error::invalid("config", "configuration is not in the basis"))?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(QuantumState { amplitudes })
    }

    /// Wraps amplitudes that must already be normalised to within 1e-9.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = dense::norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("amplitudes", "state is not normalised"));
        }
        Ok(QuantumState { amplitudes })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(dense::norm_sqr(&self.amplitudes))
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }
}

/// `⟨nᵢ⟩` for every site and their mean.
pub fn rydberg_density(basis: &Basis, state: &QuantumState) -> Result<(Vec<f64>, f64)> {
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: state.dim() });
    }
    let mut site = vec![0.0; basis.sites()];
    for (&c, a) in basis.configs().iter().zip(state.amplitudes()) {
        accumulate_bits(&mut site, c, a.norm_sqr());
    }
    let mean = site.iter().sum::<f64>() / basis.sites() as f64;
    Ok((site, mean))
}

#[inline]
fn accumulate_bits(site: &mut [f64], config: u64, weight: f64) {
    if weight == 0.0 {
        return;
    }
    let mut rest = config;
    while rest != 0 {
        site[rest.trailing_zeros() as usize] += weight;
        rest &= rest - 1;
    }
}

#[derive(Clone, Debug)]
enum Kinetic {
    /// Independent single-site rotations on a complete basis (index = config).
    SingleSite,
    /// Explicit hops `(target, weight)` per basis state.
    Projected { offsets: Vec<usize>, hops: Vec<(u32, f64)>, row_bound: f64 },
}

/// Structured Hamiltonian used by the Trotter integrator.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    sites: usize,
    occupation: Vec<u32>,
    interaction: Vec<f64>,
    kinetic: Kinetic,
    /// Configurations represented by each state (two for mirror pairs).
    members: Vec<[u64; 2]>,
    orbit: Vec<u8>,
}

impl Hamiltonian {
    pub fn new(model: &Model, basis: &Basis) -> Result<Self> {
        model.check_basis(basis)?;
        let configs = basis.configs();
        let interaction = match model.interactions() {
            Some(m) => configs.iter().map(|&c| m.energy(c)).collect(),
            None => vec![0.0; configs.len()],
        };
        let kinetic = match model {
            Model::Full(_) => Kinetic::SingleSite,
            Model::Constrained { .. } => {
                let mut offsets = Vec::with_capacity(configs.len() + 1);
                let mut hops = Vec::new();
                offsets.push(0);
                for &c in configs {
                    for s in 0..basis.sites() {
                        if let Some(j) = basis.index_of(c ^ 1 << s) {
                            hops.push((j as u32, 1.0));
                        }
                    }
                    offsets.push(hops.len());
                }
                let row_bound = row_bound(&offsets, &hops);
                Kinetic::Projected { offsets, hops, row_bound }
            }
        };
        Ok(Hamiltonian {
            sites: basis.sites(),
            occupation: configs.iter().map(|c| c.count_ones()).collect(),
            interaction,
            kinetic,
            members: configs.iter().map(|&c| [c, c]).collect(),
            orbit: vec![1; configs.len()],
        })
    }

    /// Restriction to the reflection-even sector, spanned by
    /// `(|c⟩ + |Rc⟩)/√2` and mirror-symmetric `|c⟩`. The vacuum lives here.
    pub fn parity_reduced(model: &Model, basis: &Basis) -> Result<Self> {
        model.check_basis(basis)?;
        let pairing = basis.reflection_pairing()?;
        let configs = basis.configs();
        let energy = |c: u64| model.interactions().map_or(0.0, |m| m.energy(c));
        let reps: Vec<usize> = (0..configs.len()).filter(|&k| pairing[k] >= k).collect();
        let mut sector_of = vec![0u32; configs.len()];
        for (s, &k) in reps.iter().enumerate() {
            sector_of[k] = s as u32;
            sector_of[pairing[k]] = s as u32;
        }
        let orbit: Vec<u8> = reps.iter().map(|&k| if pairing[k] == k { 1 } else { 2 }).collect();
        let mut interaction = Vec::with_capacity(reps.len());
        for &k in &reps {
            let (e, e_mirror) = (energy(configs[k]), energy(configs[pairing[k]]));
            if (e - e_mirror).abs() > 1e-9 * (1.0 + e.abs()) {
                return Err(Error::NotReflectionSymmetric);
            }
            interaction.push(e);
        }
        let mut offsets = Vec::with_capacity(reps.len() + 1);
        let mut hops: Vec<(u32, f64)> = Vec::new();
        offsets.push(0);
        for (s, &k) in reps.iter().enumerate() {
            let start = hops.len();
            let members = if orbit[s] == 1 { &[k][..] } else { &[k, pairing[k]][..] };
            for &a in members {
                for site in 0..basis.sites() {
                    let Some(b) = basis.index_of(configs[a] ^ 1 << site) else { continue };
                    let t = sector_of[b];
                    let w = 1.0 / libm::sqrt(orbit[s] as f64 * orbit[t as usize] as f64);
                    match hops[start..].iter_mut().find(|h| h.0 == t) {
                        Some(h) => h.1 += w,
                        None => hops.push((t, w)),
                    }
                }
            }
            offsets.push(hops.len());
        }
        let row_bound = row_bound(&offsets, &hops);
        Ok(Hamiltonian {
            sites: basis.sites(),
            occupation: reps.iter().map(|&k| configs[k].count_ones()).collect(),
            interaction,
            kinetic: Kinetic::Projected { offsets, hops, row_bound },
            members: reps.iter().map(|&k| [configs[k], configs[pairing[k]]]).collect(),
            orbit,
        })
    }

    pub fn dim(&self) -> usize {
        self.occupation.len()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Diagonal energy `−δ·N + E_int` of state `k`.
    pub fn diagonal(&self, k: usize, delta: f64) -> f64 {
        self.interaction[k] - delta * self.occupation[k] as f64
    }

    /// `out = H(δ, Ω)·psi`.
    pub fn apply(&self, delta: f64, omega: f64, psi: &[C64], out: &mut [C64]) -> Result<()> {
        if psi.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.len().min(out.len()) });
        }
        for (k, (o, p)) in out.iter_mut().zip(psi).enumerate() {
            *o = p * self.diagonal(k, delta);
        }
        let half = 0.5 * omega;
        match &self.kinetic {
            Kinetic::SingleSite => {
                for (c, o) in out.iter_mut().enumerate() {
                    for s in 0..self.sites {
                        *o += psi[c ^ 1 << s] * half;
                    }
                }
            }
            Kinetic::Projected { offsets, hops, .. } => {
                for (k, o) in out.iter_mut().enumerate() {
                    for &(j, w) in &hops[offsets[k]..offsets[k + 1]] {
                        *o += psi[j as usize] * (half * w);
                    }
                }
            }
        }
        Ok(())
    }

    /// Per-site densities and their mean for a state of this Hamiltonian.
    pub fn densities(&self, psi: &[C64]) -> (Vec<f64>, f64) {
        let mut site = vec![0.0; self.sites];
        for (k, a) in psi.iter().enumerate() {
            let p = a.norm_sqr();
            if self.orbit[k] == 1 {
                accumulate_bits(&mut site, self.members[k][0], p);
            } else {
                accumulate_bits(&mut site, self.members[k][0], 0.5 * p);
                accumulate_bits(&mut site, self.members[k][1], 0.5 * p);
            }
        }
        let mean = site.iter().sum::<f64>() / self.sites as f64;
        (site, mean)
    }

    /// `psi ← exp(−i·h·(Ω/2)·K)·psi` for the hopping operator `K`.
    fn kinetic_step(&self, h: f64, omega: f64, psi: &mut [C64], scratch: &mut TaylorScratch) {
        if omega == 0.0 {
            return;
        }
        let half = 0.5 * omega;
        match &self.kinetic {
            Kinetic::SingleSite => {
                let (s, c) = libm::sincos(h * half);
                let mix = C64::new(0.0, -s);
                for site in 0..self.sites {
                    let bit = 1usize << site;
                    for base in (0..psi.len()).step_by(bit << 1) {
                        for lo in base..base + bit {
                            let (a, b) = (psi[lo], psi[lo | bit]);
                            psi[lo] = a * c + b * mix;
                            psi[lo | bit] = a * mix + b * c;
                        }
                    }
                }
            }
            Kinetic::Projected { offsets, hops, row_bound } => {
                let apply = |x: &[C64], y: &mut [C64]| {
                    for (k, o) in y.iter_mut().enumerate() {
                        *o = hops[offsets[k]..offsets[k + 1]]
                            .iter()
                            .map(|&(j, w)| x[j as usize] * (half * w))
                            .sum();
                    }
                };
                dense::expm_action(apply, half * row_bound, h, KINETIC_TOLERANCE, psi, scratch);
            }
        }
    }

    /// Second-order Trotter evolution over a discretised drive.
    pub fn evolve_trotter(
        &self,
        protocol: &DriveProtocol,
        plan: &Integration,
        initial: &QuantumState,
    ) -> Result<EvolutionResult> {
        plan.validate(2)?;
        if initial.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: initial.dim() });
        }
        let schedule = plan.schedule(protocol)?;
        let steps = schedule.steps();
        let h = schedule.end_time() / steps as f64;
        // exp(−i·h/2·E_int), fixed across steps
        let int_phase: Vec<C64> =
            self.interaction.iter().map(|&e| C64::from_polar(1.0, -0.5 * h * e)).collect();
        let mut det_phase = vec![C64::new(1.0, 0.0); self.sites + 1];
        let mut psi = initial.amplitudes().to_vec();
        let mut scratch = TaylorScratch::default();
        let mut recorder = Recorder::new(plan.sample_steps(steps), self.sites);
        recorder.record(0, 0.0, || self.densities(&psi));
        for k in 0..steps {
            let (delta, omega) = (schedule.delta[k], schedule.omega[k]);
            for (n, p) in det_phase.iter_mut().enumerate() {
                *p = C64::from_polar(1.0, 0.5 * h * delta * n as f64);
            }
            let diag = |psi: &mut [C64]| {
                for ((a, ip), &n) in psi.iter_mut().zip(&int_phase).zip(&self.occupation) {
                    *a *= ip * det_phase[n as usize];
                }
            };
            diag(&mut psi);
            self.kinetic_step(h, omega, &mut psi, &mut scratch);
            diag(&mut psi);
            recorder.record(k + 1, schedule.breakpoints[k + 1], || self.densities(&psi));
        }
        recorder.finish(psi)
    }
}

fn row_bound(offsets: &[usize], hops: &[(u32, f64)]) -> f64 {
    offsets
        .windows(2)
        .map(|w| hops[w[0]..w[1]].iter().map(|h| h.1.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// When densities are recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Only the state at the end of the run.
    FinalOnly,
    /// `n + 1` samples at uniform times from 0 to the end (snapped to step
    /// boundaries).
    Uniform(usize),
}

/// Discretisation of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Integration {
    pub cycles: usize,
    pub steps_per_cycle: usize,
    pub sampling: Sampling,
}

impl Integration {
    /// Single cycle, 400 steps, final time only.
    pub fn one_cycle(steps_per_cycle: usize) -> Self {
        Integration { cycles: 1, steps_per_cycle, sampling: Sampling::FinalOnly }
    }

    pub fn sampled(self, samples: usize) -> Self {
        Integration { sampling: Sampling::Uniform(samples), ..self }
    }

    fn validate(&self, min_steps: usize) -> Result<()> {
        if self.cycles == 0 {
            return Err(Error::invalid("cycles", "at least one cycle is required"));
        }
        if self.steps_per_cycle < min_steps {
            return Err(Error::invalid("steps_per_cycle", "too few steps per cycle"));
        }
        if self.sampling == Sampling::Uniform(0) {
            return Err(Error::invalid("samples", "need at least one sample interval"));
        }
        Ok(())
    }

    pub fn schedule(&self, protocol: &DriveProtocol) -> Result<Schedule> {
        protocol.discretize(self.cycles as f64 * protocol.period(), self.cycles * self.steps_per_cycle)
    }

    fn sample_steps(&self, steps: usize) -> Vec<usize> {
        match self.sampling {
            Sampling::FinalOnly => vec![steps],
            Sampling::Uniform(n) => {
                let mut v: Vec<usize> = (0..=n)
                    .map(|k| libm::round(k as f64 * steps as f64 / n as f64) as usize)
                    .collect();
                v.dedup();
                v
            }
        }
    }
}

impl Default for Integration {
    fn default() -> Self {
        Self::one_cycle(400)
    }
}

/// Densities along a run and the final state.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionResult {
    pub sample_times: Vec<f64>,
    pub mean_density: Vec<f64>,
    pub site_density: Vec<Vec<f64>>,
    pub final_state: QuantumState,
}

impl EvolutionResult {
    /// Mean density at the last sample.
    pub fn final_density(&self) -> f64 {
        *self.mean_density.last().unwrap_or(&f64::NAN)
    }
}

struct Recorder {
    steps: Vec<usize>,
    next: usize,
    result: EvolutionResult,
}

impl Recorder {
    fn new(steps: Vec<usize>, _sites: usize) -> Self {
        Recorder {
            steps,
            next: 0,
            result: EvolutionResult {
                sample_times: Vec::new(),
                mean_density: Vec::new(),
                site_density: Vec::new(),
                final_state: QuantumState { amplitudes: Vec::new() },
            },
        }
    }

    fn record(&mut self, step: usize, t: f64, densities: impl FnOnce() -> (Vec<f64>, f64)) {
        if self.steps.get(self.next) == Some(&step) {
            let (site, mean) = densities();
            self.result.sample_times.push(t);
            self.result.site_density.push(site);
            self.result.mean_density.push(mean);
            self.next += 1;
        }
    }

    fn finish(mut self, psi: Vec<C64>) -> Result<EvolutionResult> {
        let drift = (libm::sqrt(dense::norm_sqr(&psi)) - 1.0).abs();
        if !(drift <= NORM_DRIFT_LIMIT) {
            return Err(Error::NormDrift { drift });
        }
        self.result.final_state = QuantumState { amplitudes: psi };
        Ok(self.result)
    }
}

/// `H|ψ⟩` for a model on `basis`.
pub fn hamiltonian_apply(
    model: &Model,
    basis: &Basis,
    delta: f64,
    omega: f64,
    state: &QuantumState,
) -> Result<Vec<C64>> {
    let ham = Hamiltonian::new(model, basis)?;
    let mut out = vec![C64::new(0.0, 0.0); ham.dim()];
    ham.apply(delta, omega, state.amplitudes(), &mut out)?;
    Ok(out)
}

/// Trotter evolution of `initial` under `model`.
pub fn trotter_cycle(
    model: &Model,
    basis: &Basis,
    protocol: &DriveProtocol,
    plan: &Integration,
    initial: &QuantumState,
) -> Result<EvolutionResult> {
    Hamiltonian::new(model, basis)?.evolve_trotter(protocol, plan, initial)
}

/// Hamiltonian assembled as an explicit real matrix
/// `H = diag(E_int + s·δ·N) + (Ω/2)·K`, with `s = −1` for the lab-frame
/// sign convention.
#[derive(Clone, Debug)]
pub struct DenseModel {
    sites: usize,
    configs: Vec<u64>,
    interaction: Vec<f64>,
    occupation: Vec<f64>,
    hopping: RealMatrix,
    detuning_sign: f64,
}

impl DenseModel {
    /// Assembles the matrix of `model` on `basis` from pair distances of
    /// configurations; it shares no kernels with [`Hamiltonian`].
    pub fn new(model: &Model, basis: &Basis) -> Result<Self> {
        model.check_basis(basis)?;
        let dim = basis.dim();
        if dim > ORACLE_DIM_LIMIT {
            return Err(Error::OracleTooLarge { dim, limit: ORACLE_DIM_LIMIT });
        }
        let configs = basis.configs().to_vec();
        let pairs = model.interactions().map(|m| m.nonzero_pairs()).unwrap_or_default();
        let interaction = configs
            .iter()
            .map(|&c| {
                pairs
                    .iter()
                    .filter(|&&(i, j, _)| c >> i & 1 == 1 && c >> j & 1 == 1)
                    .map(|p| p.2)
                    .sum()
            })
            .collect();
        let mut hopping = RealMatrix::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                if (configs[a] ^ configs[b]).count_ones() == 1 {
                    hopping.set(a, b, 1.0);
                }
            }
        }
        Ok(DenseModel {
            sites: basis.sites(),
            occupation: configs.iter().map(|c| c.count_ones() as f64).collect(),
            configs,
            interaction,
            hopping,
            detuning_sign: -1.0,
        })
    }

    /// Explicit model from its parts. `hopping` holds the σˣ pattern.
    pub fn from_parts(
        sites: usize,
        configs: Vec<u64>,
        interaction: Vec<f64>,
        hopping: RealMatrix,
        detuning_sign: f64,
    ) -> Result<Self> {
        let dim = configs.len();
        if interaction.len() != dim || hopping.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: interaction.len() });
        }
        if !hopping.is_symmetric() {
            return Err(Error::invalid("hopping", "must be symmetric"));
        }
        Ok(DenseModel {
            sites,
            occupation: configs.iter().map(|c| c.count_ones() as f64).collect(),
            configs,
            interaction,
            hopping,
            detuning_sign,
        })
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    /// The full matrix at fixed drive values.
    pub fn matrix(&self, delta: f64, omega: f64) -> RealMatrix {
        let n = self.dim();
        let mut m = RealMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, 0.5 * omega * self.hopping.get(i, j));
            }
            m.set(i, i, self.interaction[i] + self.detuning_sign * delta * self.occupation[i]);
        }
        m
    }

    pub fn densities(&self, psi: &[C64]) -> (Vec<f64>, f64) {
        let mut site = vec![0.0; self.sites];
        for (&c, a) in self.configs.iter().zip(psi) {
            accumulate_bits(&mut site, c, a.norm_sqr());
        }
        let mean = site.iter().sum::<f64>() / self.sites as f64;
        (site, mean)
    }

    /// Evolves `initial` through `schedule`, applying on every interval the
    /// exponential of the piecewise-constant matrix, converged to machine
    /// precision.
    pub fn evolve(&self, schedule: &Schedule, sampling: Sampling, initial: &QuantumState) -> Result<EvolutionResult> {
        if initial.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: initial.dim() });
        }
        let plan = Integration { cycles: 1, steps_per_cycle: schedule.steps(), sampling };
        let hopping = self.hopping.compress();
        let max_hops = self.hopping.inf_norm();
        let mut psi = initial.amplitudes().to_vec();
        let mut scratch = TaylorScratch::default();
        let mut recorder = Recorder::new(plan.sample_steps(schedule.steps()), self.sites);
        recorder.record(0, 0.0, || self.densities(&psi));
        let mut diag = vec![0.0; self.dim()];
        for k in 0..schedule.steps() {
            let (delta, omega, h) = (schedule.delta[k], schedule.omega[k], schedule.interval(k));
            for (d, (e, n)) in diag.iter_mut().zip(self.interaction.iter().zip(&self.occupation)) {
                *d = e + self.detuning_sign * delta * n;
            }
            // shift the spectrum to centre the diagonal, then restore the phase
            let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let shift = 0.5 * (lo + hi);
            let bound = 0.5 * (hi - lo) + 0.5 * omega * max_hops;
            let apply = |x: &[C64], y: &mut [C64]| {
                hopping.matvec(x, y);
                for ((o, v), d) in y.iter_mut().zip(x).zip(&diag) {
                    *o = *o * (0.5 * omega) + v * (d - shift);
                }
            };
            dense::expm_action(apply, bound, h, 1e-15, &mut psi, &mut scratch);
            let phase = C64::from_polar(1.0, -h * shift);
            psi.iter_mut().for_each(|a| *a *= phase);
            recorder.record(k + 1, schedule.breakpoints[k + 1], || self.densities(&psi));
        }
        recorder.finish(psi)
    }
}

/// Exact-exponential reference evolution of `model` for comparison with
/// [`trotter_cycle`] on the same schedule.
pub fn oracle_cycle(
    model: &Model,
    basis: &Basis,
    protocol: &DriveProtocol,
    plan: &Integration,
    initial: &QuantumState,
) -> Result<EvolutionResult> {
    plan.validate(1)?;
    let dense_model = DenseModel::new(model, basis)?;
    dense_model.evolve(&plan.schedule(protocol)?, plan.sampling, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{chain_adjacency, parse_config};
    use crate::geometry::{Cutoff, GeometryKind, Layout};
    use crate::C6_70S;

    fn full_chain(n: usize, d: f64) -> (Model, Basis) {
        let array = Layout::new(GeometryKind::Chain, n, d).build().unwrap();
        let m = InteractionMatrix::new(&array, C6_70S, Cutoff::AllPairs).unwrap();
        (Model::Full(m), Basis::enumerate(n, Constraint::Unconstrained, &[]).unwrap())
    }

    fn pxp_chain(n: usize) -> (Model, Basis) {
        (Model::pxp(), Basis::enumerate(n, Constraint::NearestNeighbor, &chain_adjacency(n, 1)).unwrap())
    }

    #[test]
    fn diagonal_action() {
        let (model, basis) = full_chain(3, 4.7);
        let state = QuantumState::from_config(&basis, parse_config("101").unwrap()).unwrap();
        let out = hamiltonian_apply(&model, &basis, 1.3, 0.0, &state).unwrap();
        let Model::Full(m) = &model else { unreachable!() };
        let idx = basis.index_of(0b101).unwrap();
        assert!((out[idx].re - (-2.0 * 1.3 + m.get(0, 2))).abs() < 1e-12);
        assert_eq!(out.iter().filter(|a| a.norm() > 0.0).count(), 1);
    }

    #[test]
    fn projected_flip_annihilated() {
        let (model, basis) = pxp_chain(3);
        let state = QuantumState::from_config(&basis, 0b101).unwrap();
        let out = hamiltonian_apply(&model, &basis, 0.0, 2.0, &state).unwrap();
        // only 100 and 001 are reachable; 111 is outside the subspace
        let nonzero: Vec<u64> = out
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(k, _)| basis.configs()[k])
            .collect();
        assert_eq!(nonzero, [0b001, 0b100]);
    }

    #[test]
    fn densities_of_simple_states() {
        let (_, basis) = pxp_chain(3);
        let (site, mean) = rydberg_density(&basis, &QuantumState::vacuum(basis.dim())).unwrap();
        assert_eq!(site, [0.0, 0.0, 0.0]);
        assert_eq!(mean, 0.0);
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        let s = core::f64::consts::FRAC_1_SQRT_2;
        amps[basis.index_of(parse_config("001").unwrap()).unwrap()] = C64::new(s, 0.0);
        amps[basis.index_of(parse_config("100").unwrap()).unwrap()] = C64::new(s, 0.0);
        let (site, mean) = rydberg_density(&basis, &QuantumState::from_amplitudes(amps).unwrap()).unwrap();
        assert!((site[0] - 0.5).abs() < 1e-15 && site[1] == 0.0 && (site[2] - 0.5).abs() < 1e-15);
        assert!((mean - 1.0 / 3.0).abs() < 1e-15);
        let (site, mean) =
            rydberg_density(&basis, &QuantumState::from_config(&basis, 0b101).unwrap()).unwrap();
        assert_eq!(site, [1.0, 0.0, 1.0]);
        assert!((mean - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rabi_keeps_vacuum() {
        let (model, basis) = full_chain(6, 4.7);
        let protocol = DriveProtocol::single(20.0, 0.0, 2.5);
        let plan = Integration::one_cycle(400).sampled(16);
        let r = trotter_cycle(&model, &basis, &protocol, &plan, &QuantumState::vacuum(basis.dim())).unwrap();
        assert!(r.mean_density.iter().all(|&n| n == 0.0));
        let o = oracle_cycle(&model, &basis, &protocol, &plan, &QuantumState::vacuum(basis.dim())).unwrap();
        assert!(o.mean_density.iter().all(|&n| n == 0.0));
        // 400 steps at 1e-15 each
        assert!((o.final_state.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_basis_mismatch() {
        let (model, _) = full_chain(3, 4.7);
        let (_, pxp_basis) = pxp_chain(3);
        assert!(Hamiltonian::new(&model, &pxp_basis).is_err());
        let (_, full_basis) = full_chain(3, 4.7);
        assert!(Hamiltonian::new(&Model::pxp(), &full_basis).is_err());
    }

    #[test]
    fn sampling_grid() {
        let plan = Integration::one_cycle(400).sampled(64);
        let r = {
            let (model, basis) = pxp_chain(4);
            trotter_cycle(&model, &basis, &DriveProtocol::single(20.0, 2.0, 3.0), &plan, &QuantumState::vacuum(basis.dim()))
                .unwrap()
        };
        assert_eq!(r.sample_times.len(), 65);
        assert_eq!(r.sample_times[0], 0.0);
        assert!((r.sample_times[64] - core::f64::consts::TAU / 3.0).abs() < 1e-12);
        assert_eq!(r.site_density.len(), 65);
    }

    #[test]
    fn oracle_rejects_large_basis() {
        let basis = Basis::enumerate(13, Constraint::Unconstrained, &[]).unwrap();
        let m = InteractionMatrix::from_pairs(13, &[]).unwrap();
        let err = DenseModel::new(&Model::Full(m), &basis);
        assert!(matches!(err, Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn dense_matrix_matches_structured_action() {
        for (model, basis) in [full_chain(5, 5.0), pxp_chain(7)] {
            let ham = Hamiltonian::new(&model, &basis).unwrap();
            let dm = DenseModel::new(&model, &basis).unwrap();
            let m = dm.matrix(3.3, 1.7);
            assert!(m.is_symmetric());
            let psi: Vec<C64> =
                (0..basis.dim()).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
            let mut a = vec![C64::new(0.0, 0.0); basis.dim()];
            let mut b = a.clone();
            ham.apply(3.3, 1.7, &psi, &mut a).unwrap();
            m.matvec(&psi, &mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-9 * (1.0 + x.norm()));
            }
        }
    }
}
