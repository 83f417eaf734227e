//! Frequency sweeps of the one-cycle density and fringe extraction.

use alloc::string::String;
use alloc::vec::Vec;

use crate::basis::Basis;
use crate::drive::DriveProtocol;
use crate::evolve::{Hamiltonian, Integration, Model, QuantumState};
use crate::{Error, Result};

/// Default minimum prominence, as a fraction of the curve's range.
pub const DEFAULT_DEPTH: f64 = 0.2;

/// Default sweep window in rad/μs.
pub const DEFAULT_OMEGA_RANGE: (f64, f64) = (1.5, 4.5);
pub const DEFAULT_GRID_POINTS: usize = 61;

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("grid", "need 0 < lo < hi and at least two points"));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|k| if k == points - 1 { hi } else { lo + k as f64 * step }).collect())
}

pub fn default_grid() -> Vec<f64> {
    let (lo, hi) = DEFAULT_OMEGA_RANGE;
    uniform_grid(lo, hi, DEFAULT_GRID_POINTS).expect("static grid is valid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepMetadata {
    pub model: String,
    pub geometry: String,
    pub delta0: f64,
    pub omega0: f64,
    pub harmonic: u32,
    pub half_cycle: bool,
    pub steps_per_cycle: usize,
    pub cycles: usize,
}

impl SweepMetadata {
    pub fn new(model: &Model, geometry: impl Into<String>, protocol: &DriveProtocol, plan: &Integration) -> Self {
        SweepMetadata {
            model: model.name().into(),
            geometry: geometry.into(),
            delta0: protocol.delta0,
            omega0: protocol.omega0,
            harmonic: protocol.harmonic,
            half_cycle: protocol.half_cycle,
            steps_per_cycle: plan.steps_per_cycle,
            cycles: plan.cycles,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

impl PointStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok)
    }
}

/// Final density against drive frequency. Failed points hold `NaN`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub omega_grid: Vec<f64>,
    pub n_final: Vec<f64>,
    pub status: Vec<PointStatus>,
    pub metadata: Option<SweepMetadata>,
}

impl SweepResult {
    pub fn new(
        omega_grid: Vec<f64>,
        n_final: Vec<f64>,
        status: Vec<PointStatus>,
        metadata: Option<SweepMetadata>,
    ) -> Result<Self> {
        if n_final.len() != omega_grid.len() || status.len() != omega_grid.len() {
            return Err(Error::DimensionMismatch { expected: omega_grid.len(), found: n_final.len() });
        }
        if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("omega_grid", "must be strictly ascending"));
        }
        Ok(SweepResult { omega_grid, n_final, status, metadata })
    }

    /// Builds a sweep with every point marked successful.
    pub fn from_values(omega_grid: Vec<f64>, n_final: Vec<f64>) -> Result<Self> {
        let status = alloc::vec![PointStatus::Ok; omega_grid.len()];
        Self::new(omega_grid, n_final, status, None)
    }

    pub fn len(&self) -> usize {
        self.omega_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_grid.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.status.iter().filter(|s| !s.is_ok()).count()
    }

    /// Value at the grid point nearest `omega`.
    pub fn nearest(&self, omega: f64) -> Option<(f64, f64)> {
        self.omega_grid
            .iter()
            .zip(&self.n_final)
            .min_by(|a, b| (a.0 - omega).abs().total_cmp(&(b.0 - omega).abs()))
            .map(|(&w, &n)| (w, n))
    }
}

/// One-cycle density of `hamiltonian` started from the vacuum.
pub fn sweep_point(hamiltonian: &Hamiltonian, protocol: &DriveProtocol, omega: f64, plan: &Integration) -> Result<f64> {
    let run = hamiltonian.evolve_trotter(&protocol.with_omega(omega), plan, &QuantumState::vacuum(hamiltonian.dim()))?;
    Ok(run.final_density())
}

/// Sequential sweep; a failing point is recorded and the sweep continues.
pub fn frequency_sweep(
    model: &Model,
    basis: &Basis,
    protocol: &DriveProtocol,
    omega_grid: &[f64],
    plan: &Integration,
    geometry: &str,
) -> Result<SweepResult> {
    let hamiltonian = Hamiltonian::new(model, basis)?;
    let (n_final, status) = omega_grid
        .iter()
        .map(|&w| match sweep_point(&hamiltonian, protocol, w, plan) {
            Ok(n) => (n, PointStatus::Ok),
            Err(e) => (f64::NAN, PointStatus::Failed(alloc::format!("{e}"))),
        })
        .unzip();
    let metadata = SweepMetadata::new(model, geometry, protocol, plan);
    SweepResult::new(omega_grid.to_vec(), n_final, status, Some(metadata))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub omega: f64,
    pub n: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeMinimum {
    /// Parabolic estimate of the minimum's location.
    pub omega: f64,
    /// Sampled grid point.
    pub grid_omega: f64,
    pub n_min: f64,
    pub left_peak: Extremum,
    pub right_peak: Extremum,
    pub prominence: f64,
    /// Against the higher of the two flanking peaks.
    pub visibility: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FringeReport {
    pub depth_threshold: f64,
    /// Global range of the curve that the threshold is relative to.
    pub range: f64,
    pub minima: Vec<FringeMinimum>,
}

impl FringeReport {
    /// Deepest reported minimum.
    pub fn principal(&self) -> Option<&FringeMinimum> {
        self.minima.iter().min_by(|a, b| a.n_min.total_cmp(&b.n_min))
    }

    pub fn near(&self, omega: f64, tolerance: f64) -> Option<&FringeMinimum> {
        self.minima
            .iter()
            .filter(|m| (m.omega - omega).abs() <= tolerance)
            .min_by(|a, b| (a.omega - omega).abs().total_cmp(&(b.omega - omega).abs()))
    }

    pub fn in_window(&self, lo: f64, hi: f64) -> impl Iterator<Item = &FringeMinimum> {
        self.minima.iter().filter(move |m| m.omega >= lo && m.omega <= hi)
    }
}

/// Strict interior minima whose topographic prominence is at least
/// `depth·(max − min)` of the curve.
///
/// Prominence is the smaller of the two climbs needed to reach a lower
/// point (or the curve's end) on either side. Failed points are dropped
/// before the search.
pub fn find_minima(sweep: &SweepResult, depth: f64) -> FringeReport {
    let (w, n): (Vec<f64>, Vec<f64>) = sweep
        .omega_grid
        .iter()
        .zip(&sweep.n_final)
        .zip(&sweep.status)
        .filter(|(p, s)| s.is_ok() && p.1.is_finite())
        .map(|(p, _)| (*p.0, *p.1))
        .unzip();
    let mut report = FringeReport { depth_threshold: depth, range: 0.0, minima: Vec::new() };
    if n.len() < 3 {
        return report;
    }
    let hi = n.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = n.iter().copied().fold(f64::INFINITY, f64::min);
    report.range = hi - lo;
    for i in 1..n.len() - 1 {
        if !(n[i] < n[i - 1] && n[i] < n[i + 1]) {
            continue;
        }
        let prominence = climb(&n, i, false).min(climb(&n, i, true)) - n[i];
        if prominence < depth * report.range || prominence <= 0.0 {
            continue;
        }
        let left = flank(&n, i, false);
        let right = flank(&n, i, true);
        let peak = n[left].max(n[right]);
        report.minima.push(FringeMinimum {
            omega: parabolic_vertex(&w[i - 1..=i + 1], &n[i - 1..=i + 1]),
            grid_omega: w[i],
            n_min: n[i],
            left_peak: Extremum { omega: w[left], n: n[left] },
            right_peak: Extremum { omega: w[right], n: n[right] },
            prominence,
            visibility: visibility(peak, n[i].max(0.0)).unwrap_or(0.0),
        });
    }
    report
}

/// Highest value passed walking from `i` until a value below `n[i]`.
fn climb(n: &[f64], i: usize, rightward: bool) -> f64 {
    let mut top = n[i];
    let mut k = i;
    loop {
        k = match (rightward, k) {
            (true, k) if k + 1 < n.len() => k + 1,
            (false, k) if k > 0 => k - 1,
            _ => return top,
        };
        if n[k] < n[i] {
            return top;
        }
        top = top.max(n[k]);
    }
}

/// Index of the nearest local maximum reached by walking uphill from `i`.
fn flank(n: &[f64], i: usize, rightward: bool) -> usize {
    let mut k = i;
    loop {
        let next = if rightward { k + 1 } else { k.wrapping_sub(1) };
        if next >= n.len() || n[next] < n[k] {
            return k;
        }
        k = next;
    }
}

/// Vertex of the parabola through three points, clamped to their span.
fn parabolic_vertex(x: &[f64], y: &[f64]) -> f64 {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    let num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return x1;
    }
    (x1 - 0.5 * num / den).clamp(x0, x2)
}

/// Fringe visibility `(n_max − n_min)/(n_max + n_min)`.
pub fn visibility(n_max: f64, n_min: f64) -> Result<f64> {
    if !(n_min >= 0.0 && n_max >= n_min) {
        return Err(Error::invalid("visibility", "need n_max ≥ n_min ≥ 0"));
    }
    if n_max == 0.0 {
        return Err(Error::invalid("visibility", "undefined for n_max = n_min = 0"));
    }
    Ok((n_max - n_min) / (n_max + n_min))
}

/// Readout errors: `eps_g` is the chance a ground-state atom reads as
/// Rydberg, `eps_r` the chance a Rydberg atom reads as ground.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpamModel {
    pub eps_g: f64,
    pub eps_r: f64,
}

impl Default for SpamModel {
    fn default() -> Self {
        SpamModel { eps_g: 0.01, eps_r: 0.08 }
    }
}

/// Output of [`SpamModel::correct`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corrected {
    pub value: f64,
    /// Set when the corrected density is clearly negative.
    pub negative: bool,
}

impl SpamModel {
    pub fn new(eps_g: f64, eps_r: f64) -> Result<Self> {
        if !(eps_g >= 0.0 && eps_r >= 0.0 && eps_g + eps_r < 1.0) {
            return Err(Error::invalid("spam", "need eps_g, eps_r ≥ 0 and eps_g + eps_r < 1"));
        }
        Ok(SpamModel { eps_g, eps_r })
    }

    pub fn apply(&self, n_true: f64) -> f64 {
        n_true * (1.0 - self.eps_g - self.eps_r) + self.eps_g
    }

    pub fn correct(&self, n_meas: f64) -> Corrected {
        let value = (n_meas - self.eps_g) / (1.0 - self.eps_g - self.eps_r);
        if value < 0.0 && value > -1e-12 {
            return Corrected { value: 0.0, negative: false };
        }
        Corrected { value, negative: value < 0.0 }
    }
}

/// A minimum of one sweep with no counterpart in another.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnmatchedMinimum {
    pub present_in: usize,
    pub absent_in: usize,
    pub omega: f64,
    pub n_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub omega_grid: Vec<f64>,
    /// `n_k(ω) − n_0(ω)` for every sweep `k`.
    pub differences: Vec<Vec<f64>>,
    pub reports: Vec<FringeReport>,
    pub unmatched: Vec<UnmatchedMinimum>,
}

/// Compares sweeps on a common grid. Minima further than `tolerance` from
/// every minimum of another sweep are listed as unmatched for that pair.
pub fn compare_models(sweeps: &[SweepResult], depth: f64, tolerance: f64) -> Result<Comparison> {
    let first = sweeps.first().ok_or(Error::invalid("sweeps", "nothing to compare"))?;
    for s in &sweeps[1..] {
        let same = s.len() == first.len()
            && s.omega_grid.iter().zip(&first.omega_grid).all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs());
        if !same {
            return Err(Error::GridMismatch);
        }
    }
    let differences = sweeps
        .iter()
        .map(|s| s.n_final.iter().zip(&first.n_final).map(|(a, b)| a - b).collect())
        .collect();
    let reports: Vec<FringeReport> = sweeps.iter().map(|s| find_minima(s, depth)).collect();
    let mut unmatched = Vec::new();
    for (a, ra) in reports.iter().enumerate() {
        for (b, rb) in reports.iter().enumerate() {
            if a == b {
                continue;
            }
            for m in &ra.minima {
                if rb.near(m.omega, tolerance).is_none() {
                    unmatched.push(UnmatchedMinimum { present_in: a, absent_in: b, omega: m.omega, n_min: m.n_min });
                }
            }
        }
    }
    Ok(Comparison { omega_grid: first.omega_grid.clone(), differences, reports, unmatched })
}
