//! Atom arrangements and the pairwise van der Waals coupling matrix.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result, DEVICE_EXTENT_UM};

/// Tolerance used to group pair distances into shells, in μm.
pub const DISTANCE_CLASS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Chain,
    Snake,
    Square,
    Honeycomb,
    Custom,
}

impl GeometryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GeometryKind::Chain => "chain",
            GeometryKind::Snake => "snake",
            GeometryKind::Square => "square",
            GeometryKind::Honeycomb => "honeycomb",
            GeometryKind::Custom => "custom",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chain" => Ok(GeometryKind::Chain),
            "snake" => Ok(GeometryKind::Snake),
            "square" => Ok(GeometryKind::Square),
            "honeycomb" => Ok(GeometryKind::Honeycomb),
            "custom" => Ok(GeometryKind::Custom),
            _ => Err(Error::UnknownKind(s.to_string())),
        }
    }
}

/// Site positions in μm, ordered by site index.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomArray {
    positions: Vec<[f64; 2]>,
    kind: GeometryKind,
    spacing: f64,
}

/// Parameters of a generated lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Layout {
    pub kind: GeometryKind,
    pub sites: usize,
    /// Nearest-neighbour distance in μm.
    pub spacing: f64,
    /// Sites per row for snake, square and honeycomb layouts.
    pub row_length: Option<usize>,
    /// Reject coordinates outside the 75×75 μm active region.
    pub device_bounds: bool,
}

impl Layout {
    pub fn new(kind: GeometryKind, sites: usize, spacing: f64) -> Self {
        Layout { kind, sites, spacing, row_length: None, device_bounds: false }
    }

    pub fn row_length(mut self, row_length: usize) -> Self {
        self.row_length = Some(row_length);
        self
    }

    pub fn device_bounds(mut self, enforce: bool) -> Self {
        self.device_bounds = enforce;
        self
    }

    pub fn build(&self) -> Result<AtomArray> {
        build_geometry(self)
    }
}

/// Lays out `layout.sites` atoms on the requested lattice.
///
/// Chains are collinear along x. Snakes are serpentine rasters: rows of
/// `row_length` sites at pitch `d`, rows separated by `d`, direction
/// alternating so consecutive indices stay nearest neighbours. Square grids
/// fill rows of `row_length` (default ⌈√L⌉). Honeycomb patches are stacked
/// zigzag rows with bond length `d`.
pub fn build_geometry(layout: &Layout) -> Result<AtomArray> {
    let Layout { kind, sites, spacing: d, row_length, device_bounds } = *layout;
    if sites == 0 {
        return Err(Error::invalid("L", "at least one site is required"));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid("d", "spacing must be positive"));
    }
    let positions: Vec<[f64; 2]> = match kind {
        GeometryKind::Chain => (0..sites).map(|i| [i as f64 * d, 0.0]).collect(),
        GeometryKind::Snake => {
            let row = match row_length {
                Some(r) if r < 2 => {
                    return Err(Error::invalid("row_length", "snake rows need at least 2 sites"))
                }
                Some(r) => r,
                None => default_snake_row(d),
            };
            (0..sites)
                .map(|i| {
                    let (r, c) = (i / row, i % row);
                    let col = if r % 2 == 0 { c } else { row - 1 - c };
                    [col as f64 * d, r as f64 * d]
                })
                .collect()
        }
        GeometryKind::Square => {
            let row = row_length.unwrap_or_else(|| ceil_sqrt(sites)).max(1);
            (0..sites).map(|i| [(i % row) as f64 * d, (i / row) as f64 * d]).collect()
        }
        GeometryKind::Honeycomb => {
            let row = row_length.unwrap_or_else(|| ceil_sqrt(sites)).max(1);
            let dx = 0.5 * libm::sqrt(3.0) * d;
            (0..sites)
                .map(|i| {
                    let (r, k) = (i / row, i % row);
                    let lift = if (r + k) % 2 == 1 { 0.5 * d } else { 0.0 };
                    [k as f64 * dx, r as f64 * 1.5 * d + lift]
                })
                .collect()
        }
        GeometryKind::Custom => {
            return Err(Error::invalid("kind", "custom arrays are built from explicit coordinates"))
        }
    };
    let array = AtomArray { positions, kind, spacing: d };
    array.validate(device_bounds)?;
    Ok(array)
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r < n {
        r += 1;
    }
    r.max(1)
}

/// Largest row that fits the active region at pitch `d`.
fn default_snake_row(d: f64) -> usize {
    ((DEVICE_EXTENT_UM / d + 1e-9) as usize + 1).max(2)
}

impl AtomArray {
    /// Wraps user-supplied coordinates. The nominal spacing is the minimum
    /// pair distance (0 for a single site).
    pub fn custom(positions: Vec<[f64; 2]>, device_bounds: bool) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("positions", "at least one site is required"));
        }
        let mut array = AtomArray { positions, kind: GeometryKind::Custom, spacing: 0.0 };
        array.validate(device_bounds)?;
        array.spacing = array.min_distance().unwrap_or(0.0);
        Ok(array)
    }

    fn validate(&self, device_bounds: bool) -> Result<()> {
        for (i, p) in self.positions.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::invalid("positions", "coordinates must be finite"));
            }
            if device_bounds {
                let eps = 1e-9;
                let inside = |v: f64| (-eps..=DEVICE_EXTENT_UM + eps).contains(&v);
                if !(inside(p[0]) && inside(p[1])) {
                    return Err(Error::OutOfBounds { site: i, x: p[0], y: p[1] });
                }
            }
        }
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.distance(i, j) <= 0.0 {
                    return Err(Error::CoincidentSites(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        libm::hypot(a[0] - b[0], a[1] - b[1])
    }

    pub fn min_distance(&self) -> Option<f64> {
        self.distance_classes().first().copied()
    }

    /// Returns a copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::invalid("factor", "scale factor must be positive"));
        }
        Ok(AtomArray {
            positions: self.positions.iter().map(|p| [p[0] * factor, p[1] * factor]).collect(),
            kind: self.kind,
            spacing: self.spacing * factor,
        })
    }

    /// Distinct pair distances in ascending order, merged within
    /// [`DISTANCE_CLASS_TOL`].
    pub fn distance_classes(&self) -> Vec<f64> {
        let mut all: Vec<f64> = Vec::with_capacity(self.len() * self.len() / 2);
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                all.push(self.distance(i, j));
            }
        }
        all.sort_by(f64::total_cmp);
        let mut classes: Vec<f64> = Vec::new();
        for r in all {
            match classes.last() {
                Some(&last) if r - last <= DISTANCE_CLASS_TOL => {}
                _ => classes.push(r),
            }
        }
        classes
    }

    /// Pairs `(i, j)`, `i < j`, whose distance falls in one of the first
    /// `shells` distance classes.
    pub fn pairs_within_shells(&self, shells: usize) -> Vec<(usize, usize)> {
        let classes = self.distance_classes();
        let Some(&limit) = classes.get(shells.min(classes.len()).wrapping_sub(1)) else {
            return Vec::new();
        };
        let mut pairs = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.distance(i, j) <= limit + DISTANCE_CLASS_TOL {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Number of sites at the `shell`-th distance class (0-based) from `site`.
    pub fn coordination(&self, site: usize, shell: usize) -> usize {
        let classes = self.distance_classes();
        let Some(&r) = classes.get(shell) else { return 0 };
        (0..self.len())
            .filter(|&j| j != site && libm::fabs(self.distance(site, j) - r) <= DISTANCE_CLASS_TOL)
            .count()
    }
}

/// Which pairs keep their van der Waals coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    AllPairs,
    NearestOnly,
    UpToNextNearest,
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all_pairs" => Ok(Cutoff::AllPairs),
            "nn" | "nn_only" => Ok(Cutoff::NearestOnly),
            "nnn" | "up_to_nnn" => Ok(Cutoff::UpToNextNearest),
            _ => Err(Error::invalid("cutoff", "expected all_pairs, nn_only or up_to_nnn")),
        }
    }
}

/// Symmetric matrix of couplings `V_ij` in rad/μs with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrix {
    c6: f64,
    cutoff: Cutoff,
    sites: usize,
    values: Vec<f64>,
}

impl InteractionMatrix {
    /// Couplings `c6 / r_ij⁶` for the pairs retained by `cutoff`.
    pub fn new(array: &AtomArray, c6: f64, cutoff: Cutoff) -> Result<Self> {
        if !(c6 > 0.0 && c6.is_finite()) {
            return Err(Error::invalid("c6", "must be positive"));
        }
        let n = array.len();
        let classes = array.distance_classes();
        let limit = match cutoff {
            Cutoff::AllPairs => f64::INFINITY,
            Cutoff::NearestOnly => classes.first().copied().unwrap_or(0.0) + DISTANCE_CLASS_TOL,
            Cutoff::UpToNextNearest => {
                classes.get(1).or(classes.first()).copied().unwrap_or(0.0) + DISTANCE_CLASS_TOL
            }
        };
        let mut values = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let r = array.distance(i, j);
                if r <= limit {
                    let v = c6 / libm::pow(r, 6.0);
                    values[i * n + j] = v;
                    values[j * n + i] = v;
                }
            }
        }
        Ok(InteractionMatrix { c6, cutoff, sites: n, values })
    }

    /// Builds a matrix directly from a list of pair couplings.
    pub fn from_pairs(sites: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut values = alloc::vec![0.0; sites * sites];
        for &(i, j, v) in pairs {
            if i >= sites || j >= sites || i == j {
                return Err(Error::invalid("pairs", "pair indices must be distinct valid sites"));
            }
            values[i * sites + j] = v;
            values[j * sites + i] = v;
        }
        Ok(InteractionMatrix { c6: 0.0, cutoff: Cutoff::AllPairs, sites, values })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn c6(&self) -> f64 {
        self.c6
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.sites + j]
    }

    /// Nonzero couplings as `(i, j, V_ij)` with `i < j`.
    pub fn nonzero_pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.sites;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Interaction energy `Σ_{i<j} V_ij n_i n_j` of an occupation bitmask.
    pub fn energy(&self, config: u64) -> f64 {
        let n = self.sites;
        let mut e = 0.0;
        let mut rest = config;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let row = &self.values[i * n..(i + 1) * n];
            let mut higher = rest;
            while higher != 0 {
                let j = higher.trailing_zeros() as usize;
                higher &= higher - 1;
                e += row[j];
            }
        }
        e
    }
}

/// Instantaneous blockade radius `(c6 / √(Ω² + Δ²))^{1/6}` in μm.
pub fn blockade_radius(c6: f64, omega: f64, delta: f64) -> Result<f64> {
    let scale = libm::hypot(omega, delta);
    if scale == 0.0 {
        return Err(Error::invalid("omega, delta", "both vanish; the radius diverges"));
    }
    if !(c6 > 0.0) {
        return Err(Error::invalid("c6", "must be positive"));
    }
    Ok(libm::pow(c6 / scale, 1.0 / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C6_70S;

    fn chain(n: usize, d: f64) -> AtomArray {
        Layout::new(GeometryKind::Chain, n, d).build().unwrap()
    }

    #[test]
    fn chain_positions() {
        let a = chain(3, 4.7);
        assert_eq!(a.positions(), &[[0.0, 0.0], [4.7, 0.0], [9.4, 0.0]]);
    }

    #[test]
    fn snake_hundred_fits_device() {
        let a = Layout::new(GeometryKind::Snake, 100, 4.7)
            .row_length(16)
            .device_bounds(true)
            .build()
            .unwrap();
        assert_eq!(a.len(), 100);
        for p in a.positions() {
            assert!((0.0..=75.0).contains(&p[0]) && (0.0..=75.0).contains(&p[1]));
        }
        for i in 0..99 {
            assert!((a.distance(i, i + 1) - 4.7).abs() < 1e-9, "bond {i}");
        }
        // default row length also fits
        assert!(Layout::new(GeometryKind::Snake, 100, 4.7).device_bounds(true).build().is_ok());
    }

    #[test]
    fn bounds_violation_rejected() {
        let err = Layout::new(GeometryKind::Chain, 20, 4.7).device_bounds(true).build();
        assert!(matches!(err, Err(Error::OutOfBounds { .. })));
        assert!(Layout::new(GeometryKind::Snake, 4, 4.7).row_length(1).build().is_err());
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(matches!("triangle".parse::<GeometryKind>(), Err(Error::UnknownKind(_))));
        assert_eq!("Honeycomb".parse::<GeometryKind>().unwrap(), GeometryKind::Honeycomb);
    }

    #[test]
    fn honeycomb_coordination() {
        let a = Layout::new(GeometryKind::Honeycomb, 16, 4.7).build().unwrap();
        let classes = a.distance_classes();
        assert!((classes[0] - 4.7).abs() < 1e-9);
        assert!((classes[1] - 4.7 * 3f64.sqrt()).abs() < 1e-9);
        for site in 0..16 {
            assert!(a.coordination(site, 0) <= 3 && a.coordination(site, 1) <= 6);
        }
        // a 4x4 patch has no site with a complete second shell, so check the
        // interior of a 6x6 patch: rows 1..=4, columns 2..=3
        let big = Layout::new(GeometryKind::Honeycomb, 36, 4.7).build().unwrap();
        for r in 1..=4 {
            for k in 2..=3 {
                let site = 6 * r + k;
                assert_eq!(big.coordination(site, 0), 3, "site {site}");
                assert_eq!(big.coordination(site, 1), 6, "site {site}");
            }
        }
    }

    #[test]
    fn square_coordination() {
        let a = Layout::new(GeometryKind::Square, 16, 4.7).build().unwrap();
        for site in [5, 6, 9, 10] {
            assert_eq!(a.coordination(site, 0), 4);
            assert_eq!(a.coordination(site, 1), 4);
        }
    }

    #[test]
    fn min_distance_equals_spacing() {
        for kind in [GeometryKind::Chain, GeometryKind::Snake, GeometryKind::Square, GeometryKind::Honeycomb] {
            for n in [2, 5, 16, 30] {
                let a = Layout::new(kind, n, 5.3).row_length(4).build().unwrap();
                assert!((a.min_distance().unwrap() - 5.3).abs() < 1e-9, "{kind} {n}");
            }
        }
    }

    #[test]
    fn chain_couplings() {
        let m = InteractionMatrix::new(&chain(4, 4.7), C6_70S, Cutoff::AllPairs).unwrap();
        let nn = C6_70S / 4.7f64.powi(6);
        let nnn = C6_70S / 9.4f64.powi(6);
        assert!((m.get(0, 1) - 502.87).abs() < 0.01);
        assert!((m.get(0, 2) - 7.858).abs() < 1e-3);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-13 * b.abs();
        assert!(close(m.get(1, 2), nn));
        assert!(close(m.get(1, 3), nnn));
        assert_eq!(m.get(2, 2), 0.0);

        let nn_only = InteractionMatrix::new(&chain(4, 4.7), C6_70S, Cutoff::NearestOnly).unwrap();
        assert_eq!(nn_only.get(0, 2), 0.0);
        assert_eq!(nn_only.get(0, 3), 0.0);
        assert!(close(nn_only.get(2, 3), nn));

        let nnn_cut = InteractionMatrix::new(&chain(4, 4.7), C6_70S, Cutoff::UpToNextNearest).unwrap();
        assert!(close(nnn_cut.get(0, 2), nnn));
        assert_eq!(nnn_cut.get(0, 3), 0.0);
    }

    #[test]
    fn pair_energy() {
        let m = InteractionMatrix::new(&chain(3, 4.7), C6_70S, Cutoff::AllPairs).unwrap();
        assert_eq!(m.energy(0b101), m.get(0, 2));
        assert_eq!(m.energy(0b111), m.get(0, 1) + m.get(0, 2) + m.get(1, 2));
        assert_eq!(m.energy(0), 0.0);
    }

    #[test]
    fn blockade_radius_values() {
        let rb = blockade_radius(C6_70S, 15.6, 0.0).unwrap();
        assert!((rb - 8.4).abs() < 0.05, "{rb}");
        assert_eq!(blockade_radius(C6_70S, 3.0, 0.0), blockade_radius(C6_70S, 0.0, 3.0));
        let r = blockade_radius(C6_70S, 2.0, 20.0).unwrap();
        let expect = (C6_70S / (404.0f64).sqrt()).powf(1.0 / 6.0);
        assert!((r - expect).abs() < 1e-12);
        assert!((r - 8.0379).abs() < 1e-4, "{r}");
        assert!(blockade_radius(C6_70S, 0.0, 0.0).is_err());
    }

    #[test]
    fn custom_rejects_coincident() {
        assert!(matches!(
            AtomArray::custom(alloc::vec![[0.0, 0.0], [0.0, 0.0]], false),
            Err(Error::CoincidentSites(0, 1))
        ));
        let a = AtomArray::custom(alloc::vec![[0.0, 0.0], [5.0, 0.0], [5.0, 5.3]], true).unwrap();
        assert_eq!(a.spacing(), 5.0);
    }
}
