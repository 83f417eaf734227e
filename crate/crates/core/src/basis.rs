//! Many-body occupation bases, optionally projected onto blockade subspaces.
//!
//! A configuration is a `u64` bitmask with bit `i` set when site `i` is in
//! the Rydberg state. Bases are kept sorted ascending so that the index of a
//! configuration is found by binary search.

use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::geometry::AtomArray;
use crate::{Error, Result};

/// Default enumeration cap, 2²⁶ configurations.
pub const DEFAULT_BASIS_CAP: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    Unconstrained,
    /// PXP: no two nearest neighbours excited.
    NearestNeighbor,
    /// PPXPP: no two nearest or next-nearest neighbours excited.
    NextNearestNeighbor,
}

impl Constraint {
    /// Number of geometric distance shells that are blockaded.
    pub fn shells(self) -> usize {
        match self {
            Constraint::Unconstrained => 0,
            Constraint::NearestNeighbor => 1,
            Constraint::NextNearestNeighbor => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Constraint::Unconstrained => "unconstrained",
            Constraint::NearestNeighbor => "pxp",
            Constraint::NextNearestNeighbor => "ppxpp",
        }
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unconstrained" | "none" | "full" => Ok(Constraint::Unconstrained),
            "pxp" | "nn" | "nn_blockade" => Ok(Constraint::NearestNeighbor),
            "ppxpp" | "nnn" | "nnn_blockade" => Ok(Constraint::NextNearestNeighbor),
            _ => Err(Error::invalid("constraint", "expected unconstrained, pxp or ppxpp")),
        }
    }
}

/// Blockaded pairs of an array: the first one or two distance classes.
pub fn constraint_adjacency(array: &AtomArray, constraint: Constraint) -> Vec<(usize, usize)> {
    match constraint.shells() {
        0 => Vec::new(),
        shells => array.pairs_within_shells(shells),
    }
}

/// Open-chain adjacency blocking all pairs with `|i − j| ≤ range`.
pub fn chain_adjacency(sites: usize, range: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..sites {
        for j in i + 1..sites.min(i + range + 1) {
            pairs.push((i, j));
        }
    }
    pairs
}

/// True iff no adjacency pair is doubly excited in `config`.
#[inline]
pub fn check_constraint(config: u64, adjacency: &[(usize, usize)]) -> bool {
    adjacency.iter().all(|&(i, j)| config & (1 << i) == 0 || config & (1 << j) == 0)
}

/// Formats a configuration with site 0 as the leftmost character.
pub fn config_label(config: u64, sites: usize) -> String {
    (0..sites).map(|i| if config >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Parses a label written with site 0 leftmost.
pub fn parse_config(label: &str) -> Result<u64> {
    if label.is_empty() || label.len() > 64 {
        return Err(Error::invalid("config", "label must have 1 to 64 characters"));
    }
    label.chars().enumerate().try_fold(0u64, |acc, (i, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << i),
        _ => Err(Error::invalid("config", "label may only contain 0 and 1")),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    sites: usize,
    constraint: Constraint,
    adjacency: Vec<(usize, usize)>,
    configs: Vec<u64>,
}

impl Basis {
    /// All configurations of `sites` atoms compatible with `adjacency`.
    pub fn enumerate(sites: usize, constraint: Constraint, adjacency: &[(usize, usize)]) -> Result<Self> {
        Self::enumerate_with_cap(sites, constraint, adjacency, DEFAULT_BASIS_CAP)
    }

    pub fn enumerate_with_cap(
        sites: usize,
        constraint: Constraint,
        adjacency: &[(usize, usize)],
        cap: usize,
    ) -> Result<Self> {
        if sites == 0 || sites > 63 {
            return Err(Error::invalid("L", "site count must be between 1 and 63"));
        }
        let mut adjacency: Vec<(usize, usize)> = match constraint {
            Constraint::Unconstrained => Vec::new(),
            _ => adjacency.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect(),
        };
        for &(i, j) in &adjacency {
            if j >= sites || i == j {
                return Err(Error::invalid("adjacency", "pairs must join two distinct valid sites"));
            }
        }
        adjacency.sort_unstable();
        adjacency.dedup();

        let configs = if adjacency.is_empty() {
            if sites >= usize::BITS as usize || (1usize << sites) > cap {
                return Err(Error::BasisTooLarge { sites, cap });
            }
            (0..1u64 << sites).collect()
        } else {
            enumerate_blockaded(sites, &adjacency, cap)?
        };
        Ok(Basis { sites, constraint, adjacency, configs })
    }

    /// Basis of `array` under `constraint`, with adjacency from the
    /// geometric distance classes.
    pub fn for_array(array: &AtomArray, constraint: Constraint) -> Result<Self> {
        Self::enumerate(array.len(), constraint, &constraint_adjacency(array, constraint))
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    /// True when every one of the 2^L configurations is present.
    pub fn is_complete(&self) -> bool {
        self.configs.len() as u64 == 1u64 << self.sites
    }

    #[inline]
    pub fn index_of(&self, config: u64) -> Option<usize> {
        if self.is_complete() {
            return (config < 1 << self.sites).then_some(config as usize);
        }
        self.configs.binary_search(&config).ok()
    }

    /// Site-reversal permutation `i → L−1−i` expressed on basis indices.
    pub fn reflection_pairing(&self) -> Result<Vec<usize>> {
        let last = self.sites - 1;
        let mirrored: Vec<(usize, usize)> = {
            let mut m: Vec<_> =
                self.adjacency.iter().map(|&(i, j)| ((last - j), (last - i))).collect();
            m.sort_unstable();
            m
        };
        if mirrored != self.adjacency {
            return Err(Error::NotReflectionSymmetric);
        }
        self.configs
            .iter()
            .map(|&c| {
                let flipped = c.reverse_bits() >> (64 - self.sites);
                self.index_of(flipped).ok_or(Error::NotReflectionSymmetric)
            })
            .collect()
    }
}

/// Depth-first enumeration from the most significant site down, taking 0
/// before 1, which yields configurations in ascending integer order.
fn enumerate_blockaded(sites: usize, adjacency: &[(usize, usize)], cap: usize) -> Result<Vec<u64>> {
    // neighbours with a higher index than each site
    let mut higher = alloc::vec![0u64; sites];
    for &(i, j) in adjacency {
        higher[i] |= 1 << j;
    }
    let mut out = Vec::new();
    let mut stack: Vec<(usize, u64)> = alloc::vec![(sites, 0)];
    while let Some((next, config)) = stack.pop() {
        if next == 0 {
            if out.len() == cap {
                return Err(Error::BasisTooLarge { sites, cap });
            }
            out.push(config);
            continue;
        }
        let s = next - 1;
        // pushed in reverse so the 0-branch is explored first
        if config & higher[s] == 0 {
            stack.push((s, config | 1 << s));
        }
        stack.push((s, config));
    }
    Ok(out)
}
