//! Species index sets.
//!
//! A [`Community`] is a subset of `{0, .., n-1}` stored as a bitmask. The
//! library API is 0-based; `Display` and the JSON encoding use the 1-based
//! species labels customary in ecology (`{1,3}`), so a community printed by
//! the CLI reads the same way it would in a table of results.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest number of species a community can index.
pub const MAX_SPECIES: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Community {
    mask: u32,
}

impl Community {
    pub const EMPTY: Community = Community { mask: 0 };

    pub fn empty() -> Self {
        Self::EMPTY
    }

    /// All species `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_SPECIES, "at most {MAX_SPECIES} species");
        if n == MAX_SPECIES {
            Community { mask: u32::MAX }
        } else {
            Community { mask: (1u32 << n) - 1 }
        }
    }

    pub fn from_mask(mask: u32) -> Self {
        Community { mask }
    }

    /// Builds a community from 0-based indices. Duplicates are rejected.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= MAX_SPECIES {
                return Err(Error::InvalidCommunity(format!("species index {i} out of range")));
            }
            if mask & (1 << i) != 0 {
                return Err(Error::InvalidCommunity(format!("duplicate species index {i}")));
            }
            mask |= 1 << i;
        }
        Ok(Community { mask })
    }

    /// Builds a community from 1-based species labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let indices = labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::InvalidCommunity("species labels start at 1".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(&indices)
    }

    pub fn single(i: usize) -> Self {
        assert!(i < MAX_SPECIES);
        Community { mask: 1 << i }
    }

    pub fn mask(self) -> u32 {
        self.mask
    }

    pub fn len(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_SPECIES && self.mask & (1 << i) != 0
    }

    /// Largest index + 1, or 0 for the empty set.
    pub fn span(self) -> usize {
        (u32::BITS - self.mask.leading_zeros()) as usize
    }

    /// Whether every member is below `n`.
    pub fn fits(self, n: usize) -> bool {
        self.span() <= n
    }

    pub fn is_subset(self, other: Community) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn union(self, other: Community) -> Community {
        Community {
            mask: self.mask | other.mask,
        }
    }

    pub fn intersection(self, other: Community) -> Community {
        Community {
            mask: self.mask & other.mask,
        }
    }

    pub fn difference(self, other: Community) -> Community {
        Community {
            mask: self.mask & !other.mask,
        }
    }

    pub fn with(self, i: usize) -> Community {
        Community {
            mask: self.mask | (1 << i),
        }
    }

    pub fn without(self, i: usize) -> Community {
        Community {
            mask: self.mask & !(1 << i),
        }
    }

    /// Members in ascending order.
    pub fn members(self) -> Members {
        Members { rest: self.mask }
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.members().collect()
    }

    /// Species of `{0, .., n-1}` outside this community, ascending.
    pub fn complement(self, n: usize) -> Community {
        Community::full(n).difference(self)
    }

    /// Nonempty subsets of this community, in increasing mask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = Community> {
        let full = self.mask;
        let mut sub = 0u32;
        let mut done = full == 0;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            // standard "next submask" walk upwards
            sub = (sub.wrapping_sub(full)) & full;
            if sub == 0 {
                done = true;
                return None;
            }
            Some(Community { mask: sub })
        })
    }

    /// All `2^n` subsets of `{0, .., n-1}` in canonical order
    /// (cardinality ascending, lexicographic within a cardinality).
    pub fn all_subsets(n: usize) -> Vec<Community> {
        assert!(n < MAX_SPECIES);
        let mut all: Vec<Community> = (0..(1u32 << n)).map(Community::from_mask).collect();
        all.sort();
        all
    }
}

pub struct Members {
    rest: u32,
}

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.rest == 0 {
            return None;
        }
        let i = self.rest.trailing_zeros() as usize;
        self.rest &= self.rest - 1;
        Some(i)
    }
}

impl Ord for Community {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.members().cmp(other.members()))
    }
}

impl PartialOrd for Community {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Community {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let labels: Vec<usize> = self.members().map(|i| i + 1).collect();
        labels.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Community {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(deserializer)?;
        Community::from_labels(&labels).map_err(serde::de::Error::custom)
    }
}
