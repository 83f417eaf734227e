//! Frequency sweeps spread over worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use anyhow::Result;
use rydberg_core::analysis::{sweep_point, PointStatus, SweepMetadata, SweepResult};
use rydberg_core::basis::Basis;
use rydberg_core::drive::DriveProtocol;
use rydberg_core::evolve::{Hamiltonian, Integration, Model};

/// Sweeps `grid` with `jobs` threads. Points are claimed from a shared
/// counter and written back by index, so the result does not depend on
/// scheduling.
pub fn sweep_parallel(
    model: &Model,
    basis: &Basis,
    protocol: &DriveProtocol,
    grid: &[f64],
    plan: &Integration,
    jobs: usize,
    geometry: &str,
) -> Result<SweepResult> {
    let hamiltonian = Hamiltonian::new(model, basis)?;
    let point = |w: f64| match sweep_point(&hamiltonian, protocol, w, plan) {
        Ok(n) => (n, PointStatus::Ok),
        Err(e) => (f64::NAN, PointStatus::Failed(e.to_string())),
    };
    let workers = jobs.clamp(1, grid.len().max(1));
    let mut results: Vec<(usize, (f64, PointStatus))> = if workers == 1 {
        grid.iter().map(|&w| point(w)).enumerate().collect()
    } else {
        let next = AtomicUsize::new(0);
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut done = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= grid.len() {
                                break done;
                            }
                            done.push((i, point(grid[i])));
                        }
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
        })
    };
    results.sort_by_key(|r| r.0);
    let (n_final, status) = results.into_iter().map(|(_, r)| r).unzip();
    let metadata = SweepMetadata::new(model, geometry, protocol, plan);
    Ok(SweepResult::new(grid.to_vec(), n_final, status, Some(metadata))?)
}
