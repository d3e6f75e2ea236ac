use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Mode;
use crate::error::{Error, Result};

/// A bijection on `{0, .., d-1}`; `images[j]` is the physical axis placed at
/// chain position `j`.
///
/// Internally everything is 0-based. The serialized form (and `Display`) is
/// 1-based to match the usual mathematical notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &i in &images {
            if i >= d || seen[i] {
                return Err(Error::domain(format!("{images:?} is not a permutation of 0..{d}")));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::domain("1-based permutation contains 0"));
        }
        Self::new(images.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(d: usize) -> Self {
        Self { images: (0..d).collect() }
    }

    /// `alpha^k`, i.e. `j -> j + k (mod d)`.
    pub fn rotation(d: usize, k: usize) -> Self {
        Self { images: (0..d).map(|j| (j + k) % d).collect() }
    }

    /// `beta`, i.e. `j -> d - 1 - j`.
    pub fn reflection(d: usize) -> Self {
        Self { images: (0..d).rev().collect() }
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (0..d).collect();
        images.shuffle(rng);
        Self { images }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn apply(&self, j: usize) -> usize {
        self.images[j]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|i| i + 1).collect()
    }

    /// `self ∘ other`: first apply `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::domain(format!("cannot compose permutations of sizes {} and {}", self.len(), other.len())));
        }
        Ok(Permutation { images: other.images.iter().map(|&j| self.images[j]).collect() })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (j, &i) in self.images.iter().enumerate() {
            inv[i] = j;
        }
        Permutation { images: inv }
    }

    /// `self ∘ alpha^k ∘ beta^l`.
    pub fn transformed(&self, k: usize, reflect: bool) -> Permutation {
        let d = self.len();
        let images = (0..d)
            .map(|j| {
                let j = if reflect { d - 1 - j } else { j };
                self.images[(j + k) % d]
            })
            .collect();
        Permutation { images }
    }

    /// Every permutation describing the same loop (ring) or path (train).
    pub fn class_members(&self, mode: Mode) -> Vec<Permutation> {
        let d = self.len();
        let rotations = match mode {
            Mode::Ring => d.max(1),
            Mode::Train => 1,
        };
        let mut members: Vec<Permutation> = (0..rotations)
            .flat_map(|k| [false, true].map(|l| self.transformed(k, l)))
            .collect();
        members.sort();
        members.dedup();
        members
    }

    /// Lexicographically smallest member of the class; a cheap class key.
    pub fn class_representative(&self, mode: Mode) -> Permutation {
        self.class_members(mode).into_iter().next().expect("class is never empty")
    }
}

/// True iff `other` lies in the equivalence class of `tau` for `mode`.
pub fn same_class(tau: &Permutation, other: &Permutation, mode: Mode) -> Result<bool> {
    if tau.len() != other.len() {
        return Err(Error::domain(format!("permutation sizes differ: {} vs {}", tau.len(), other.len())));
    }
    let d = tau.len();
    let rotations = if mode == Mode::Ring { d } else { 1 };
    Ok((0..rotations).any(|k| [false, true].into_iter().any(|l| tau.transformed(k, l) == *other)))
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, i) in self.images.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&images).map_err(serde::de::Error::custom)
    }
}
