//! Plain-text file formats: site lists, waveforms, traces, sweeps and
//! JSON metadata sidecars.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rydberg_core::analysis::{Comparison, FringeMinimum, FringeReport, PointStatus, SweepResult};
use rydberg_core::drive::Waveform;
use rydberg_core::evolve::EvolutionResult;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `sweep.csv` → `sweep.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// Writes the metadata sidecar for `out`.
pub fn write_sidecar(out: &Path, command: &str, cfg: &RunConfig, extra: Value) -> Result<PathBuf> {
    let path = sidecar_path(out);
    let meta = json!({
        "version": VERSION,
        "command": command,
        "output": out.display().to_string(),
        "config": cfg.to_json(),
        "details": extra,
    });
    fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Opens `path`, or stdout when `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

/// One `x y` pair per line in μm. Blank lines and `#` comments are skipped.
pub fn read_sites(path: &Path) -> Result<Vec<[f64; 2]>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut sites = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [x, y] = fields[..] else { bail!("{}:{}: expected two numbers", path.display(), no + 1) };
        let parse = |s: &str| s.parse::<f64>().map_err(|e| anyhow!("{}:{}: {e}", path.display(), no + 1));
        sites.push([parse(x)?, parse(y)?]);
    }
    Ok(sites)
}

pub fn write_sites(w: &mut dyn Write, positions: &[[f64; 2]]) -> Result<()> {
    for p in positions {
        writeln!(w, "{} {}", p[0], p[1])?;
    }
    Ok(())
}

pub fn write_waveform(w: &mut dyn Write, wf: &Waveform) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["t_us", "delta_rad_per_us", "omega_rad_per_us"])?;
    for s in &wf.samples {
        csv.write_record([s.t.to_string(), s.delta.to_string(), s.omega.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_trace(w: &mut dyn Write, run: &EvolutionResult) -> Result<()> {
    let sites = run.site_density.first().map_or(0, Vec::len);
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["t_us".to_string(), "n_mean".to_string()];
    header.extend((0..sites).map(|i| format!("n_site_{i}")));
    csv.write_record(&header)?;
    for ((t, n), site) in run.sample_times.iter().zip(&run.mean_density).zip(&run.site_density) {
        let mut row = vec![t.to_string(), n.to_string()];
        row.extend(site.iter().map(f64::to_string));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn status_text(s: &PointStatus) -> String {
    match s {
        PointStatus::Ok => "ok".into(),
        PointStatus::Failed(why) => format!("failed: {why}"),
    }
}

/// Columns `omega_rad_per_us,n_final,status`. Floats use the shortest
/// representation that round-trips.
pub fn write_sweep(w: &mut dyn Write, sweep: &SweepResult) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["omega_rad_per_us", "n_final", "status"])?;
    for ((omega, n), s) in sweep.omega_grid.iter().zip(&sweep.n_final).zip(&sweep.status) {
        csv.write_record([omega.to_string(), n.to_string(), status_text(s)])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn sweep_to_string(sweep: &SweepResult) -> Result<String> {
    let mut buf = Vec::new();
    write_sweep(&mut buf, sweep)?;
    Ok(String::from_utf8(buf)?)
}

pub fn read_sweep(path: &Path) -> Result<SweepResult> {
    let mut csv = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = csv.headers()?.clone();
    if headers.iter().take(2).collect::<Vec<_>>() != ["omega_rad_per_us", "n_final"] {
        bail!("{}: expected columns omega_rad_per_us,n_final[,status]", path.display());
    }
    let (mut omega, mut n, mut status) = (Vec::new(), Vec::new(), Vec::new());
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            let s = record.get(i).ok_or_else(|| anyhow!("{}: row {} is short", path.display(), row + 1))?;
            s.trim().parse().map_err(|e| anyhow!("{}: row {}: {e}", path.display(), row + 1))
        };
        omega.push(field(0)?);
        n.push(field(1)?);
        status.push(match record.get(2).map(str::trim) {
            None | Some("ok") | Some("") => PointStatus::Ok,
            Some(other) => PointStatus::Failed(other.trim_start_matches("failed: ").to_string()),
        });
    }
    SweepResult::new(omega, n, status, None).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn sweep_metadata_json(sweep: &SweepResult) -> Value {
    match &sweep.metadata {
        None => Value::Null,
        Some(m) => json!({
            "model": m.model,
            "geometry": m.geometry,
            "delta0": m.delta0,
            "omega0": m.omega0,
            "harmonic": m.harmonic,
            "half_cycle": m.half_cycle,
            "steps_per_cycle": m.steps_per_cycle,
            "cycles": m.cycles,
            "failed_points": sweep.failures(),
        }),
    }
}

fn minimum_json(m: &FringeMinimum) -> Value {
    json!({
        "omega": m.omega,
        "grid_omega": m.grid_omega,
        "n_min": m.n_min,
        "left_peak": {"omega": m.left_peak.omega, "n": m.left_peak.n},
        "right_peak": {"omega": m.right_peak.omega, "n": m.right_peak.n},
        "prominence": m.prominence,
        "visibility": m.visibility,
    })
}

pub fn report_json(report: &FringeReport) -> Value {
    json!({
        "depth_threshold": report.depth_threshold,
        "range": report.range,
        "minima": report.minima.iter().map(minimum_json).collect::<Vec<_>>(),
    })
}

pub fn comparison_json(cmp: &Comparison, labels: &[String]) -> Value {
    json!({
        "inputs": labels,
        "omega_grid": cmp.omega_grid,
        "differences": cmp.differences,
        "reports": cmp.reports.iter().map(report_json).collect::<Vec<_>>(),
        "unmatched": cmp.unmatched.iter().map(|u| json!({
            "present_in": labels[u.present_in],
            "absent_in": labels[u.absent_in],
            "omega": u.omega,
            "n_min": u.n_min,
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_round_trip() {
        let mut sweep = SweepResult::from_values(vec![1.5, 2.0, 2.5], vec![0.1, 1.0 / 3.0, 0.2]).unwrap();
        sweep.n_final[2] = f64::NAN;
        sweep.status[2] = PointStatus::Failed("norm drift".into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, sweep_to_string(&sweep).unwrap()).unwrap();
        let back = read_sweep(&path).unwrap();
        assert_eq!(back.omega_grid, sweep.omega_grid);
        assert_eq!(back.n_final[1], 1.0 / 3.0);
        assert!(back.n_final[2].is_nan());
        assert_eq!(back.status[2], PointStatus::Failed("norm drift".into()));
    }

    #[test]
    fn sites_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sites.txt");
        let pos = vec![[0.0, 0.0], [4.7, 0.1], [9.4, -0.25]];
        let mut f = File::create(&path).unwrap();
        writeln!(f, "# x y").unwrap();
        write_sites(&mut f, &pos).unwrap();
        drop(f);
        assert_eq!(read_sites(&path).unwrap(), pos);
        fs::write(&path, "1 2 3\n").unwrap();
        assert!(read_sites(&path).unwrap_err().to_string().contains(":1:"));
    }

    #[test]
    fn sidecar_next_to_output() {
        assert_eq!(sidecar_path(Path::new("out/sweep.csv")), Path::new("out/sweep.meta.json"));
    }
}
