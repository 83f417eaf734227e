use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rydberg_core::analysis::{compare_models, find_minima, SweepResult};
use rydberg_core::basis::{Basis, Constraint};
use rydberg_core::evolve::Hamiltonian;
use rydberg_core::floquet::{
    chain_couplings, fock_resonance_amplitude, fpt_first_order, fpt_second_order, predict_freezing_frequencies,
    three_site_fock_check, MixedTerm, OffsetCoupling,
};
use rydberg_core::geometry::GeometryKind;
use rydberg_tools::acceptance::{Runner, CRITERIA};
use rydberg_tools::io::{self, sink, write_sidecar};
use rydberg_tools::{sweep_parallel, RunConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "rydberg", version, about = "Driven Rydberg arrays: sweeps, traces and Floquet analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file of namespaced keys; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        self.run.resolve(self.config.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Site coordinates of a lattice, one "x y" pair per line
    Geometry(Common),
    /// One drive period sampled for hardware playback
    Waveform(Common),
    /// Final density from the vacuum over a frequency grid
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also write the fringe report of the sweep here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time-resolved densities at one drive frequency
    Trace(Common),
    /// Frequencies where J₀(Δ₀/ω) vanishes
    Predict(Common),
    /// Floquet effective-Hamiltonian coefficients
    Fpt {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
        /// Highest Bessel order kept in truncated sums
        #[arg(long, default_value_t = 40)]
        n_max: usize,
        /// Also report the resonance amplitude and three-site check at this interaction
        #[arg(long)]
        v: Option<f64>,
    },
    /// Fringe report of a sweep CSV
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        /// Forward-model or invert state-preparation and measurement errors first
        #[arg(long)]
        spam: Option<SpamMode>,
    },
    /// Differences and unmatched minima between sweeps on one grid
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
    },
    /// Run acceptance scenarios and print one PASS/FAIL line each
    Acceptance {
        /// Criteria to run (default: all)
        #[arg(long)]
        criterion: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpamMode {
    Apply,
    Correct,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Geometry(c) => geometry(&c.resolve()?)?,
        Command::Waveform(c) => waveform(&c.resolve()?)?,
        Command::Sweep { common, report } => sweep(&common.resolve()?, report.as_deref())?,
        Command::Trace(c) => trace(&c.resolve()?)?,
        Command::Predict(c) => predict(&c.resolve()?)?,
        Command::Fpt { common, order, n_max, v } => fpt(&common.resolve()?, order, n_max, v)?,
        Command::Analyze { common, input, spam } => analyze(&common.resolve()?, &input, spam)?,
        Command::Compare { common, inputs } => compare(&common.resolve()?, &inputs)?,
        Command::Acceptance { criterion, jobs } => return acceptance(&criterion, jobs),
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_json(cfg: &RunConfig, command: &str, value: &Value, details: Value) -> Result<()> {
    let mut w = sink(cfg.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
    if let Some(out) = &cfg.out {
        write_sidecar(out, command, cfg, details)?;
    }
    Ok(())
}

fn geometry(cfg: &RunConfig) -> Result<()> {
    let array = cfg.geometry()?;
    let mut w = sink(cfg.out.as_deref())?;
    io::write_sites(&mut *w, array.positions())?;
    w.flush()?;
    if let Some(out) = &cfg.out {
        let classes = array.distance_classes();
        let coordination: Vec<usize> = (0..array.len()).map(|i| array.coordination(i, 1)).collect();
        let basis_dim = match cfg.model_kind()? {
            Constraint::Unconstrained => json!(1u64 << array.len()),
            c => Basis::for_array(&array, c).map_or(Value::Null, |b| json!(b.dim())),
        };
        write_sidecar(
            out,
            "geometry",
            cfg,
            json!({
                "sites": array.len(),
                "distance_classes_um": classes.iter().take(6).collect::<Vec<_>>(),
                "nn_coordination": coordination,
                "basis_dim": basis_dim,
            }),
        )?;
    }
    Ok(())
}

fn waveform(cfg: &RunConfig) -> Result<()> {
    let protocol = cfg.protocol(None)?;
    let wf = protocol.export_waveform(cfg.resolution.unwrap_or(0.05))?;
    if wf.ramp_warning {
        eprintln!("warning: ramps take {:.1}% of the cycle", 100.0 * wf.ramp_fraction);
    }
    let mut w = sink(cfg.out.as_deref())?;
    io::write_waveform(&mut *w, &wf)?;
    if let Some(out) = &cfg.out {
        let details = json!({
            "period_us": protocol.period(),
            "samples": wf.samples.len(),
            "ramp_fraction": wf.ramp_fraction,
            "ramp_warning": wf.ramp_warning,
        });
        write_sidecar(out, "waveform", cfg, details)?;
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, report: Option<&Path>) -> Result<()> {
    let (model, basis) = cfg.system()?;
    let grid = cfg.grid()?;
    let protocol = cfg.protocol(Some(grid[0]))?;
    let jobs = cfg.jobs.unwrap_or(1);
    let result = sweep_parallel(&model, &basis, &protocol, &grid, &cfg.integration(), jobs, &cfg.geometry_label())?;
    for (w, s) in result.omega_grid.iter().zip(&result.status) {
        if !s.is_ok() {
            eprintln!("warning: point ω = {w} failed: {s:?}");
        }
    }
    let mut w = sink(cfg.out.as_deref())?;
    io::write_sweep(&mut *w, &result)?;
    if let Some(out) = &cfg.out {
        let details = json!({ "basis_dim": basis.dim(), "sweep": io::sweep_metadata_json(&result) });
        write_sidecar(out, "sweep", cfg, details)?;
    }
    if let Some(path) = report {
        let fringes = find_minima(&result, cfg.depth.unwrap_or(0.2));
        std::fs::write(path, serde_json::to_string_pretty(&io::report_json(&fringes))? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        write_sidecar(path, "sweep", cfg, json!({ "source": cfg.out }))?;
    }
    Ok(())
}

fn trace(cfg: &RunConfig) -> Result<()> {
    let (model, basis) = cfg.system()?;
    let protocol = cfg.protocol(None)?;
    let plan = cfg.integration().sampled(cfg.samples.unwrap_or(64));
    let h = Hamiltonian::new(&model, &basis)?;
    let run = h.evolve_trotter(&protocol, &plan, &cfg.initial_state(&basis)?)?;
    let mut w = sink(cfg.out.as_deref())?;
    io::write_trace(&mut *w, &run)?;
    if let Some(out) = &cfg.out {
        let details = json!({
            "basis_dim": basis.dim(),
            "period_us": protocol.period(),
            "n_final": run.final_density(),
        });
        write_sidecar(out, "trace", cfg, details)?;
    }
    Ok(())
}

fn predict(cfg: &RunConfig) -> Result<()> {
    let delta0 = cfg.delta0.unwrap_or(0.0);
    let (lo, hi) = (cfg.omega_min.unwrap_or(1.5), cfg.omega_max.unwrap_or(4.5));
    let omegas = predict_freezing_frequencies(delta0, lo, hi)?;
    emit_json(cfg, "predict", &json!(omegas), json!({ "delta0": delta0, "range": [lo, hi] }))
}

/// Diagonal couplings that survive in the chosen model, by offset.
fn offset_couplings(cfg: &RunConfig) -> Result<Vec<OffsetCoupling>> {
    let constraint = cfg.model_kind()?;
    let min_offset = match constraint {
        Constraint::Unconstrained => 1,
        _ if !cfg.retain_tails.unwrap_or(false) => return Ok(Vec::new()),
        c => c.shells() + 1,
    };
    if cfg.geometry_kind()? != GeometryKind::Chain {
        bail!("Floquet couplings by offset need `geometry.kind` = chain");
    }
    Ok(chain_couplings(&cfg.interactions(&cfg.geometry()?)?, min_offset))
}

fn fpt(cfg: &RunConfig, order: u8, n_max: usize, v: Option<f64>) -> Result<()> {
    let (delta0, omega0, r) = (cfg.delta0.unwrap_or(0.0), cfg.omega0.unwrap_or(0.0), cfg.harmonic.unwrap_or(0));
    let omega = cfg.omega.ok_or_else(|| anyhow!("`drive.omega` is not set"))?;
    let couplings = offset_couplings(cfg)?;
    let coupling_json = |c: &[OffsetCoupling]| -> Vec<Value> {
        c.iter().map(|c| json!({ "offset": c.offset, "strength": c.strength })).collect()
    };
    let first = fpt_first_order(delta0, omega0, omega, r, &couplings)?;
    let mut out = json!({
        "order": order,
        "delta0": delta0,
        "omega0": omega0,
        "omega": omega,
        "r": r,
        "kinetic_coefficient": first.kinetic_coefficient,
        "interaction_terms": coupling_json(&first.interaction_terms),
    });
    if order == 2 {
        if r != 0 {
            bail!("second-order terms are implemented for the single-frequency drive (`drive.r` = 0)");
        }
        let second = fpt_second_order(delta0, omega0, omega, &couplings, n_max)?;
        out["bessel_sum"] = json!(second.bessel_sum);
        out["n_max"] = json!(second.n_max);
        out["tail_bound"] = json!(second.tail_bound);
        out["second_order_terms"] = second
            .terms
            .iter()
            .map(|t| {
                let kind = match t.kind {
                    MixedTerm::FlipLeft => "flip_left",
                    MixedTerm::FlipRight => "flip_right",
                };
                json!({ "kind": kind, "offset": t.offset, "coefficient": t.coefficient })
            })
            .collect();
    }
    if let Some(v) = v {
        let amp = fock_resonance_amplitude(v, delta0, omega0, omega, n_max)?;
        let check = three_site_fock_check(v, delta0, omega0, omega)?;
        out["resonance"] = json!({ "v": v, "re": amp.value.re, "im": amp.value.im, "n_max": amp.n_max });
        out["three_site"] = json!({
            "simulated": check.simulated,
            "predicted": check.predicted,
            "discrepancy": check.discrepancy,
            "j0_channel": check.j0_channel,
        });
    }
    emit_json(cfg, "fpt", &out, json!({ "n_max": n_max }))
}

fn analyze(cfg: &RunConfig, input: &Path, spam: Option<SpamMode>) -> Result<()> {
    let mut sweep = io::read_sweep(input)?;
    let mut negative = 0;
    if let Some(mode) = spam {
        let model = cfg.spam()?;
        for n in sweep.n_final.iter_mut() {
            *n = match mode {
                SpamMode::Apply => model.apply(*n),
                SpamMode::Correct => {
                    let c = model.correct(*n);
                    negative += usize::from(c.negative);
                    c.value
                }
            };
        }
        if negative > 0 {
            eprintln!("warning: {negative} corrected densities are negative; check the calibration");
        }
    }
    let report = find_minima(&sweep, cfg.depth.unwrap_or(0.2));
    let mut out = io::report_json(&report);
    if spam.is_some() {
        out["curve"] = json!({ "omega": sweep.omega_grid, "n": sweep.n_final, "negative_points": negative });
    }
    emit_json(cfg, "analyze", &out, json!({ "input": input.display().to_string() }))
}

fn compare(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<()> {
    let sweeps: Vec<SweepResult> = inputs.iter().map(|p| io::read_sweep(p)).collect::<Result<_>>()?;
    let cmp = compare_models(&sweeps, cfg.depth.unwrap_or(0.2), cfg.tolerance.unwrap_or(0.15))?;
    let labels: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
    emit_json(cfg, "compare", &io::comparison_json(&cmp, &labels), json!({ "inputs": labels }))
}

fn acceptance(criteria: &[String], jobs: usize) -> Result<ExitCode> {
    let chosen: Vec<String> =
        if criteria.is_empty() { CRITERIA.iter().map(|c| c.to_string()).collect() } else { criteria.to_vec() };
    let mut runner = Runner::new(jobs);
    let mut all = true;
    for c in &chosen {
        let verdict = runner.run(c)?;
        all &= verdict.pass;
        println!("{verdict}");
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
