//! Tensor-ring / tensor-train cores, permutations and entry evaluation.
//!
//! A [`CoreStack`] attaches one 3-way core to every physical axis `i`. The
//! permutation `tau` says which axis sits at each chain position: position
//! `j` holds the core of axis `tau(j)`, with shape `(r_j, n_tau(j), r_{j+1})`
//! (bond indices taken mod `d`). Train mode is ring mode with `r_0 = 1`.

mod assumptions;
mod perm;
mod stack;
mod witness;

use serde::{Deserialize, Serialize};

pub use assumptions::{check_assumptions, AssumptionCheck, AssumptionReport};
pub use perm::{same_class, Permutation};
pub use stack::{sample_cores, CoreStack, DenseTensor, Profile, DEFAULT_CONTRACT_CAP};
pub use witness::witness_cores;
pub(crate) use stack::increment as stack_increment;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ring,
    Train,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" | "tr" => Ok(Mode::Ring),
            "train" | "tt" => Ok(Mode::Train),
            other => Err(Error::domain(format!("unknown mode {other:?} (expected ring or train)"))),
        }
    }
}

/// Physical dimensions `(n_1, .., n_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhysicalDims(Vec<usize>);

impl PhysicalDims {
    pub fn new(n: Vec<usize>) -> Result<Self> {
        if n.len() < 3 {
            return Err(Error::domain(format!("need d >= 3 axes, got {}", n.len())));
        }
        if let Some(i) = n.iter().position(|&v| v == 0) {
            return Err(Error::domain(format!("physical dimension of axis {i} is zero")));
        }
        Ok(Self(n))
    }

    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; d])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }

    /// Total entry count, saturating instead of overflowing.
    pub fn volume(&self) -> u128 {
        self.0.iter().fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }

    pub fn check_index(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::domain(format!("multi-index has {} entries, tensor has {} axes", x.len(), self.len())));
        }
        for (axis, (&v, &size)) in x.iter().zip(&self.0).enumerate() {
            if v >= size {
                return Err(Error::IndexOutOfRange { axis, value: v, size });
            }
        }
        Ok(())
    }
}

/// Bond dimensions `(r_1, .., r_d)`, cyclic. `r_1 = 1` encodes a train.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BondDims(Vec<usize>);

impl BondDims {
    pub fn new(r: Vec<usize>) -> Result<Self> {
        if let Some(j) = r.iter().position(|&v| v == 0) {
            return Err(Error::domain(format!("bond dimension r_{} is zero", j + 1)));
        }
        Ok(Self(r))
    }

    /// `(r, r, .., r)` for a ring, `(1, r, .., r)` for a train.
    pub fn uniform(d: usize, r: usize, mode: Mode) -> Result<Self> {
        let mut v = vec![r; d];
        if mode == Mode::Train && d > 0 {
            v[0] = 1;
        }
        Self::new(v)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bond `j`, taken mod `d`.
    #[inline]
    pub fn get(&self, j: usize) -> usize {
        self.0[j % self.0.len()]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }

    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        if mode == Mode::Train && self.0.first() != Some(&1) {
            return Err(Error::domain(format!("train mode requires r_1 = 1, got {:?}", self.0)));
        }
        Ok(())
    }
}
