//! Small dense kernels: real matrices acting on complex vectors and a
//! scaled Taylor series for `exp(−i·h·A)·ψ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::C64;

/// Row-major real square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(n: usize) -> Self {
        RealMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm of a
    /// symmetric matrix.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Row-compressed copy of the nonzero entries.
    pub fn compress(&self) -> SparseRows {
        let mut offsets = Vec::with_capacity(self.n + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for i in 0..self.n {
            for (j, &v) in self.row(i).iter().enumerate() {
                if v != 0.0 {
                    entries.push((j as u32, v));
                }
            }
            offsets.push(entries.len());
        }
        SparseRows { offsets, entries }
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (a, v) in self.row(i).iter().zip(x) {
                if *a != 0.0 {
                    acc += v * *a;
                }
            }
            *o = acc;
        }
    }
}

/// Compressed rows of a [`RealMatrix`].
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl SparseRows {
    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.entries[self.offsets[i]..self.offsets[i + 1]];
            *o = row.iter().map(|&(j, v)| x[j as usize] * v).sum();
        }
    }
}

/// Largest `‖h·A‖` handled by a single Taylor sub-step.
const SUBSTEP_NORM: f64 = 1.0;

/// Number of Taylor terms `K` such that the remainder of `exp(z)` truncated
/// after `z^K/K!` is at most `tol` for every `|z| ≤ x` (with `x ≤ 1`).
pub fn taylor_order(x: f64, tol: f64) -> usize {
    let mut term = 1.0;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= x / k as f64;
        // tail bound: term·x/(k+1) / (1 − x/(k+2))
        let next = term * x / (k + 1) as f64;
        let tail = next / (1.0 - x / (k + 2) as f64);
        if tail <= tol || k >= 60 {
            return k;
        }
    }
}

/// Applies `exp(−i·h·A)` to `psi` where `apply` computes `A·x` and
/// `norm_bound ≥ ‖A‖₂`. The step is split so each sub-step has
/// `h·‖A‖ ≤ 1`; the summed truncation remainder is at most `tol·‖ψ‖`.
pub fn expm_action<F>(mut apply: F, norm_bound: f64, h: f64, tol: f64, psi: &mut [C64], scratch: &mut TaylorScratch)
where
    F: FnMut(&[C64], &mut [C64]),
{
    let x = (h * norm_bound).abs();
    if x == 0.0 {
        return;
    }
    let substeps = libm::ceil(x / SUBSTEP_NORM).max(1.0) as usize;
    let dt = h / substeps as f64;
    let order = taylor_order(x / substeps as f64, tol / substeps as f64);
    scratch.resize(psi.len());
    let TaylorScratch { term, next } = scratch;
    for _ in 0..substeps {
        term.copy_from_slice(psi);
        for k in 1..=order {
            apply(term, next);
            // next ← (−i·dt/k)·A·term
            let factor = C64::new(0.0, -dt / k as f64);
            for (t, n) in term.iter_mut().zip(next.iter()) {
                *t = n * factor;
            }
            for (p, t) in psi.iter_mut().zip(term.iter()) {
                *p += t;
            }
        }
    }
}

/// Work buffers reused across calls to [`expm_action`].
#[derive(Clone, Debug, Default)]
pub struct TaylorScratch {
    term: Vec<C64>,
    next: Vec<C64>,
}

impl TaylorScratch {
    fn resize(&mut self, n: usize) {
        self.term.resize(n, C64::new(0.0, 0.0));
        self.next.resize(n, C64::new(0.0, 0.0));
    }
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// `⟨a|b⟩`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
