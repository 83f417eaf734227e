//! Run configuration shared by every subcommand.
//!
//! Values come from three layers: built-in defaults, an optional JSON file
//! with flat namespaced keys (`geometry.kind`, `drive.delta0`, …) and
//! command-line flags. Later layers win.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rydberg_core::analysis::{uniform_grid, SpamModel};
use rydberg_core::basis::{parse_config, Basis, Constraint};
use rydberg_core::drive::{DriveProtocol, Ramp};
use rydberg_core::evolve::{Integration, Model, QuantumState};
use rydberg_core::geometry::{AtomArray, Cutoff, GeometryKind, InteractionMatrix, Layout};
use rydberg_core::C6_70S;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Lattice: chain, snake, square, honeycomb or custom
    #[arg(long)]
    #[serde(rename = "geometry.kind", skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Number of sites
    #[arg(long = "L")]
    #[serde(rename = "geometry.L", skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    /// Nearest-neighbour spacing in μm
    #[arg(long = "d", allow_hyphen_values = true)]
    #[serde(rename = "geometry.d", skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[arg(long)]
    #[serde(rename = "geometry.row_length", skip_serializing_if = "Option::is_none")]
    pub row_length: Option<usize>,
    /// Coordinates file ("x y" per line, μm) for custom geometries
    #[arg(long)]
    #[serde(rename = "geometry.file", skip_serializing_if = "Option::is_none")]
    pub sites_file: Option<PathBuf>,
    /// all_pairs, nn_only or up_to_nnn
    #[arg(long)]
    #[serde(rename = "geometry.cutoff", skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(rename = "geometry.device_bounds", skip_serializing_if = "Option::is_none")]
    pub device_bounds: Option<bool>,

    /// full, pxp or ppxpp
    #[arg(long)]
    #[serde(rename = "model.kind", skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Keep van der Waals tails beyond the blockade in constrained models
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(rename = "model.retain_tails", skip_serializing_if = "Option::is_none")]
    pub retain_tails: Option<bool>,

    /// Detuning amplitude Δ₀ in rad/μs
    #[arg(long, allow_hyphen_values = true)]
    #[serde(rename = "drive.delta0", skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    /// Rabi amplitude Ω₀ in rad/μs
    #[arg(long, allow_hyphen_values = true)]
    #[serde(rename = "drive.omega0", skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    /// Drive frequency ω in rad/μs
    #[arg(long)]
    #[serde(rename = "drive.omega", skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Harmonic of the Rabi modulation; 0 keeps Ω constant
    #[arg(long = "r")]
    #[serde(rename = "drive.r", skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<u32>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(rename = "drive.half_cycle", skip_serializing_if = "Option::is_none")]
    pub half_cycle: Option<bool>,
    /// Rabi ramp per edge in μs (waveform export only)
    #[arg(long)]
    #[serde(rename = "drive.ramp", skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    /// Waveform sample spacing in μs
    #[arg(long)]
    #[serde(rename = "drive.resolution", skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,

    /// Trotter steps per drive cycle
    #[arg(long)]
    #[serde(rename = "evolve.steps_per_cycle", skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[arg(long)]
    #[serde(rename = "evolve.cycles", skip_serializing_if = "Option::is_none")]
    pub cycles: Option<usize>,
    /// Trace sample intervals
    #[arg(long)]
    #[serde(rename = "evolve.samples", skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Initial configuration label, site 0 leftmost
    #[arg(long)]
    #[serde(rename = "evolve.init", skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,

    #[arg(long)]
    #[serde(rename = "sweep.omega_min", skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[arg(long)]
    #[serde(rename = "sweep.omega_max", skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[arg(long)]
    #[serde(rename = "sweep.points", skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Worker threads
    #[arg(long)]
    #[serde(rename = "sweep.jobs", skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,

    /// Minimum prominence as a fraction of the curve's range
    #[arg(long)]
    #[serde(rename = "analysis.depth", skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    /// Distance in rad/μs within which minima of two sweeps match
    #[arg(long)]
    #[serde(rename = "analysis.tolerance", skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[arg(long)]
    #[serde(rename = "spam.eps_g", skip_serializing_if = "Option::is_none")]
    pub eps_g: Option<f64>,
    #[arg(long)]
    #[serde(rename = "spam.eps_r", skip_serializing_if = "Option::is_none")]
    pub eps_r: Option<f64>,

    /// Output file; a `.meta.json` sidecar is written next to it
    #[arg(long)]
    #[serde(rename = "output.path", skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn to_map(cfg: &RunConfig) -> Map<String, Value> {
    match serde_json::to_value(cfg) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("RunConfig serialises to an object"),
    }
}

impl RunConfig {
    pub fn defaults() -> Self {
        RunConfig {
            kind: Some("chain".into()),
            sites: Some(14),
            spacing: Some(4.7),
            cutoff: Some("all_pairs".into()),
            device_bounds: Some(false),
            model: Some("full".into()),
            retain_tails: Some(false),
            delta0: Some(20.0),
            omega0: Some(2.0),
            harmonic: Some(0),
            half_cycle: Some(false),
            ramp: Some(Ramp::default().rise),
            resolution: Some(0.05),
            steps: Some(400),
            cycles: Some(1),
            samples: Some(64),
            omega_min: Some(1.5),
            omega_max: Some(4.5),
            points: Some(61),
            jobs: Some(1),
            depth: Some(0.2),
            tolerance: Some(0.15),
            eps_g: Some(SpamModel::default().eps_g),
            eps_r: Some(SpamModel::default().eps_r),
            ..RunConfig::default()
        }
    }

    /// Parses a JSON object of namespaced keys. Errors name the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).context("malformed config")?;
        let Value::Object(map) = value else { bail!("config must be a JSON object") };
        for (key, v) in &map {
            let single = Value::Object(Map::from_iter([(key.clone(), v.clone())]));
            serde_json::from_value::<RunConfig>(single).map_err(|e| anyhow!("config key `{key}`: {e}"))?;
        }
        Ok(serde_json::from_value(Value::Object(map))?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Fields set in `self` override those of `base`.
    pub fn over(&self, base: &RunConfig) -> RunConfig {
        let mut m = to_map(base);
        m.extend(to_map(self));
        serde_json::from_value(Value::Object(m)).expect("merged config round-trips")
    }

    /// Defaults, then the optional config file, then these flags.
    pub fn resolve(&self, file: Option<&Path>) -> Result<RunConfig> {
        let mut cfg = RunConfig::defaults();
        if let Some(path) = file {
            cfg = RunConfig::load(path)?.over(&cfg);
        }
        let cfg = self.over(&cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(to_map(self))
    }

    /// Range checks done before any computation.
    pub fn validate(&self) -> Result<()> {
        fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
            v.ok_or_else(|| anyhow!("`{key}` is not set"))
        }
        fn check(ok: bool, key: &str, why: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(anyhow!("invalid `{key}`: {why}"))
            }
        }
        let positive = |v: Option<f64>, key: &str| -> Result<()> {
            let v = need(v, key)?;
            check(v > 0.0 && v.is_finite(), key, "must be positive and finite")
        };
        let kind = self.geometry_kind()?;
        check(kind == GeometryKind::Custom || need(self.sites, "geometry.L")? >= 1, "geometry.L", "need at least one site")?;
        check(need(self.sites, "geometry.L")? <= 63, "geometry.L", "at most 63 sites")?;
        if kind == GeometryKind::Custom {
            check(self.sites_file.is_some(), "geometry.file", "custom geometries need a coordinates file")?;
        } else {
            positive(self.spacing, "geometry.d")?;
        }
        self.cutoff()?;
        self.model_kind()?;
        let d0 = need(self.delta0, "drive.delta0")?;
        check(d0.is_finite(), "drive.delta0", "must be finite")?;
        let o0 = need(self.omega0, "drive.omega0")?;
        check(o0 >= 0.0 && o0.is_finite(), "drive.omega0", "must be non-negative")?;
        if self.omega.is_some() {
            positive(self.omega, "drive.omega")?;
        }
        let ramp = need(self.ramp, "drive.ramp")?;
        check(ramp >= 0.0 && ramp.is_finite(), "drive.ramp", "must be non-negative")?;
        positive(self.resolution, "drive.resolution")?;
        check(need(self.steps, "evolve.steps_per_cycle")? >= 2, "evolve.steps_per_cycle", "need at least 2 steps")?;
        check(need(self.cycles, "evolve.cycles")? >= 1, "evolve.cycles", "need at least one cycle")?;
        check(need(self.samples, "evolve.samples")? >= 1, "evolve.samples", "need at least one sample interval")?;
        if let Some(label) = &self.init {
            parse_config(label).map_err(|e| anyhow!("invalid `evolve.init`: {e}"))?;
        }
        positive(self.omega_min, "sweep.omega_min")?;
        positive(self.omega_max, "sweep.omega_max")?;
        check(self.omega_max >= self.omega_min, "sweep.omega_max", "must not be below sweep.omega_min")?;
        check(need(self.points, "sweep.points")? >= 1, "sweep.points", "need at least one point")?;
        check(need(self.jobs, "sweep.jobs")? >= 1, "sweep.jobs", "need at least one job")?;
        let depth = need(self.depth, "analysis.depth")?;
        check((0.0..=1.0).contains(&depth), "analysis.depth", "must lie in [0, 1]")?;
        check(need(self.tolerance, "analysis.tolerance")? >= 0.0, "analysis.tolerance", "must be non-negative")?;
        SpamModel::new(need(self.eps_g, "spam.eps_g")?, need(self.eps_r, "spam.eps_r")?)
            .map_err(|e| anyhow!("invalid `spam.eps_g`/`spam.eps_r`: {e}"))?;
        Ok(())
    }

    pub fn geometry_kind(&self) -> Result<GeometryKind> {
        let s = self.kind.as_deref().unwrap_or("chain");
        s.parse().map_err(|e| anyhow!("invalid `geometry.kind`: {e}"))
    }

    pub fn cutoff(&self) -> Result<Cutoff> {
        let s = self.cutoff.as_deref().unwrap_or("all_pairs");
        s.parse().map_err(|e| anyhow!("invalid `geometry.cutoff`: {e}"))
    }

    pub fn model_kind(&self) -> Result<Constraint> {
        let s = self.model.as_deref().unwrap_or("full");
        s.parse().map_err(|_| anyhow!("invalid `model.kind`: expected full, pxp or ppxpp, got `{s}`"))
    }

    pub fn geometry(&self) -> Result<AtomArray> {
        let kind = self.geometry_kind()?;
        let bounds = self.device_bounds.unwrap_or(false);
        if kind == GeometryKind::Custom {
            let path = self.sites_file.as_deref().ok_or_else(|| anyhow!("`geometry.file` is not set"))?;
            let positions = crate::io::read_sites(path)?;
            return AtomArray::custom(positions, bounds).map_err(|e| anyhow!("invalid `geometry.file`: {e}"));
        }
        let mut layout = Layout::new(kind, self.sites.unwrap_or(0), self.spacing.unwrap_or(0.0)).device_bounds(bounds);
        if let Some(r) = self.row_length {
            layout = layout.row_length(r);
        }
        layout.build().map_err(|e| anyhow!("invalid geometry: {e}"))
    }

    /// Short description used in sweep metadata.
    pub fn geometry_label(&self) -> String {
        match self.geometry_kind() {
            Ok(GeometryKind::Custom) => {
                format!("custom:{}", self.sites_file.as_deref().map(|p| p.display().to_string()).unwrap_or_default())
            }
            _ => format!(
                "{} L={} d={}",
                self.kind.as_deref().unwrap_or("chain"),
                self.sites.unwrap_or(0),
                self.spacing.unwrap_or(0.0)
            ),
        }
    }

    pub fn interactions(&self, array: &AtomArray) -> Result<InteractionMatrix> {
        InteractionMatrix::new(array, C6_70S, self.cutoff()?).map_err(|e| anyhow!("invalid interactions: {e}"))
    }

    /// Model and the basis it acts on.
    pub fn system(&self) -> Result<(Model, Basis)> {
        let array = self.geometry()?;
        let constraint = self.model_kind()?;
        let model = match constraint {
            Constraint::Unconstrained => Model::Full(self.interactions(&array)?),
            c => {
                let tails = if self.retain_tails.unwrap_or(false) { Some(self.interactions(&array)?) } else { None };
                Model::Constrained { constraint: c, tails }
            }
        };
        let basis = Basis::for_array(&array, constraint).map_err(|e| anyhow!("basis: {e}"))?;
        Ok((model, basis))
    }

    /// Drive protocol at `drive.omega`, or at `omega` when given.
    pub fn protocol(&self, omega: Option<f64>) -> Result<DriveProtocol> {
        let w = omega.or(self.omega).ok_or_else(|| anyhow!("`drive.omega` is not set"))?;
        let mut p = DriveProtocol::bifrequency(
            self.delta0.unwrap_or(0.0),
            self.omega0.unwrap_or(0.0),
            w,
            self.harmonic.unwrap_or(0),
        )
        .with_half_cycle(self.half_cycle.unwrap_or(false));
        if let Some(r) = self.ramp.filter(|&r| r > 0.0) {
            p.ramp = Some(Ramp { rise: r, fall: r });
        }
        p.validate().map_err(|e| anyhow!("invalid drive: {e}"))?;
        Ok(p)
    }

    pub fn integration(&self) -> Integration {
        Integration {
            cycles: self.cycles.unwrap_or(1),
            steps_per_cycle: self.steps.unwrap_or(400),
            ..Integration::default()
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        uniform_grid(self.omega_min.unwrap_or(1.5), self.omega_max.unwrap_or(4.5), self.points.unwrap_or(61))
            .map_err(|e| anyhow!("invalid sweep grid: {e}"))
    }

    pub fn spam(&self) -> Result<SpamModel> {
        SpamModel::new(self.eps_g.unwrap_or(0.0), self.eps_r.unwrap_or(0.0)).map_err(|e| anyhow!("{e}"))
    }

    pub fn initial_state(&self, basis: &Basis) -> Result<QuantumState> {
        match &self.init {
            None => Ok(QuantumState::vacuum(basis.dim())),
            Some(label) => {
                let config = parse_config(label).map_err(|e| anyhow!("invalid `evolve.init`: {e}"))?;
                QuantumState::from_config(basis, config).map_err(|e| anyhow!("invalid `evolve.init`: {e}"))
            }
        }
    }
}
