//! Periodic control fields Δ(t), Ω(t) and their discretisations.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::{Error, Result};

/// Per-edge Rabi ramp applied when exporting hardware waveforms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ramp {
    /// Rise time in μs.
    pub rise: f64,
    /// Fall time in μs.
    pub fall: f64,
}

impl Default for Ramp {
    fn default() -> Self {
        Ramp { rise: 0.05, fall: 0.05 }
    }
}

/// Ramp fraction above which a cycle is considered inefficient.
pub const RAMP_FRACTION_LIMIT: f64 = 0.1;

/// Detuning `Δ(t) = Δ₀ cos ωt` and Rabi drive `Ω(t)`, constant at `Ω₀` for
/// `harmonic == 0`, otherwise `(Ω₀/2)[1 + cos(r ω t)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveProtocol {
    /// Detuning amplitude Δ₀ in rad/μs (signed).
    pub delta0: f64,
    /// Rabi amplitude Ω₀ in rad/μs.
    pub omega0: f64,
    /// Drive angular frequency ω in rad/μs.
    pub omega: f64,
    /// Harmonic ratio r of the Rabi modulation; 0 selects the single-frequency drive.
    pub harmonic: u32,
    /// Hold Δ at Δ(T/2) for t > T/2.
    pub half_cycle: bool,
    /// Ramps used by the hardware export only.
    pub ramp: Option<Ramp>,
}

impl DriveProtocol {
    pub fn single(delta0: f64, omega0: f64, omega: f64) -> Self {
        DriveProtocol { delta0, omega0, omega, harmonic: 0, half_cycle: false, ramp: None }
    }

    pub fn bifrequency(delta0: f64, omega0: f64, omega: f64, harmonic: u32) -> Self {
        DriveProtocol { harmonic, ..Self::single(delta0, omega0, omega) }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        DriveProtocol { omega, ..self }
    }

    pub fn with_half_cycle(self, half_cycle: bool) -> Self {
        DriveProtocol { half_cycle, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid("omega", "drive frequency must be positive"));
        }
        if !(self.omega0 >= 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid("omega0", "Rabi amplitude must be non-negative"));
        }
        if !self.delta0.is_finite() {
            return Err(Error::invalid("delta0", "must be finite"));
        }
        if let Some(r) = self.ramp {
            if !(r.rise >= 0.0 && r.fall >= 0.0) {
                return Err(Error::invalid("ramp", "durations must be non-negative"));
            }
        }
        Ok(())
    }

    /// Drive period `T = 2π/ω`.
    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn delta_at(&self, t: f64) -> f64 {
        if self.half_cycle && t > 0.5 * self.period() {
            // cos(ω·T/2) = cos π
            return -self.delta0;
        }
        self.delta0 * libm::cos(self.omega * t)
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        match self.harmonic {
            0 => self.omega0,
            r => (0.5 * self.omega0 * (1.0 + libm::cos(r as f64 * self.omega * t))).max(0.0),
        }
    }

    /// Accumulated detuning phase `∫₀ᵗ Δ dt' = (Δ₀/ω) sin ωt` of the full protocol.
    pub fn detuning_phase(&self, t: f64) -> f64 {
        self.delta0 / self.omega * libm::sin(self.omega * t)
    }

    /// Piecewise-constant schedule over `[0, t_end]` with `steps` uniform
    /// intervals sampled at their midpoints.
    pub fn discretize(&self, t_end: f64, steps: usize) -> Result<Schedule> {
        self.validate()?;
        if steps == 0 {
            return Err(Error::invalid("steps", "at least one step is required"));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid("t_end", "must be positive"));
        }
        let h = t_end / steps as f64;
        let breakpoints: Vec<f64> =
            (0..=steps).map(|k| if k == steps { t_end } else { k as f64 * h }).collect();
        let mids = (0..steps).map(|k| (k as f64 + 0.5) * h);
        let delta = mids.clone().map(|t| self.delta_at(t)).collect();
        let omega = mids.map(|t| self.omega_at(t)).collect();
        Ok(Schedule { breakpoints, delta, omega })
    }

    /// Fraction of one period spent ramping, `(rise + fall)/T`.
    pub fn ramp_fraction(&self) -> f64 {
        match self.ramp {
            Some(r) => (r.rise + r.fall) / self.period(),
            None => 0.0,
        }
    }

    /// Samples one drive period on a `resolution` grid for piecewise-linear
    /// playback. With a ramp configured, Ω rises from 0 before the cycle and
    /// falls back to 0 after it while Δ holds its boundary values.
    pub fn export_waveform(&self, resolution: f64) -> Result<Waveform> {
        self.validate()?;
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::invalid("resolution", "must be positive"));
        }
        let period = self.period();
        let (rise, fall) = self.ramp.map_or((0.0, 0.0), |r| (r.rise, r.fall));
        let total = rise + period + fall;
        let n = libm::ceil(total / resolution - 1e-9) as usize;
        let delta_end = self.delta_at(period);
        let omega_end = self.omega_at(period);
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = if k == n { total } else { k as f64 * resolution };
            let (delta, omega) = if self.ramp.is_some() && t < rise {
                (self.delta0, self.omega_at(0.0) * t / rise)
            } else if self.ramp.is_some() && t > rise + period {
                let left = if fall > 0.0 { (total - t) / fall } else { 0.0 };
                (delta_end, omega_end * left)
            } else {
                let local = (t - rise).clamp(0.0, period);
                (self.delta_at(local), self.omega_at(local))
            };
            samples.push(WaveformSample { t, delta, omega: omega.max(0.0) });
        }
        if self.ramp.is_some() {
            samples[0].omega = 0.0;
            samples[n].omega = 0.0;
        }
        let ramp_fraction = self.ramp_fraction();
        Ok(Waveform { samples, ramp_fraction, ramp_warning: ramp_fraction > RAMP_FRACTION_LIMIT })
    }
}

/// Piecewise-constant drive values on consecutive intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub breakpoints: Vec<f64>,
    pub delta: Vec<f64>,
    pub omega: Vec<f64>,
}

impl Schedule {
    pub fn steps(&self) -> usize {
        self.delta.len()
    }

    pub fn end_time(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }

    pub fn interval(&self, k: usize) -> f64 {
        self.breakpoints[k + 1] - self.breakpoints[k]
    }

    /// Riemann sum `Σ Δ_k dt_k` over the first `k` intervals.
    pub fn detuning_phase(&self, k: usize) -> f64 {
        (0..k).map(|i| self.delta[i] * self.interval(i)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveformSample {
    pub t: f64,
    pub delta: f64,
    pub omega: f64,
}

/// Sampled hardware waveform pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<WaveformSample>,
    pub ramp_fraction: f64,
    /// Set when the ramp fraction exceeds [`RAMP_FRACTION_LIMIT`].
    pub ramp_warning: bool,
}
