//! Sets of variable indices and the intersection step of multiple grouping.
//!
//! Indices are stored 0-based. Everything that faces a user (CSV output,
//! `Display`, the CLI) converts to 1-based numbering.

use std::fmt;

use crate::error::{MugError, Result};

/// A sorted, duplicate-free set of variable indices (0-based).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn empty() -> Self {
        SupportSet::default()
    }

    /// Every variable `0..p`.
    pub fn full(p: usize) -> Self {
        SupportSet {
            indices: (0..p).collect(),
        }
    }

    /// Builds a set from arbitrary 0-based indices; sorts and deduplicates.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        SupportSet { indices }
    }

    /// Builds a set from 1-based variable numbers, as written in the model
    /// `V = {1, ..., p}`. Zero is rejected.
    pub fn from_one_based(numbers: &[usize]) -> Result<Self> {
        if let Some(&bad) = numbers.iter().find(|&&v| v == 0) {
            return Err(MugError::IndexOutOfRange { index: bad, p: 0 });
        }
        Ok(SupportSet::from_indices(numbers.iter().map(|v| v - 1)))
    }

    /// The support `{ j : beta[j] != 0 }`.
    pub fn of_nonzeros(beta: &[f64]) -> Self {
        SupportSet {
            indices: beta
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(|(j, _)| j)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|j| j + 1).collect()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Checks that every index is below `p`.
    pub fn check_range(&self, p: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last >= p => Err(MugError::IndexOutOfRange { index: last + 1, p }),
            _ => Ok(()),
        }
    }

    /// Linear merge of two sorted lists.
    pub fn intersect(&self, other: &SupportSet) -> SupportSet {
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len().min(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        SupportSet { indices: out }
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        SupportSet::from_indices(self.iter().chain(other.iter()))
    }

    /// Number of elements of `self` that are not in `other`.
    pub fn count_not_in(&self, other: &SupportSet) -> usize {
        self.len() - self.intersect(other).len()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.count_not_in(other) == 0
    }

    /// Indices in `0..p` that are not in the set.
    pub fn complement(&self, p: usize) -> SupportSet {
        SupportSet {
            indices: (0..p).filter(|j| !self.contains(*j)).collect(),
        }
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, j) in self.indices.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for SupportSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        SupportSet::from_indices(iter)
    }
}

/// Intersection of a nonempty list of supports.
pub fn intersect_supports(sets: &[SupportSet]) -> Result<SupportSet> {
    let (first, rest) = sets.split_first().ok_or(MugError::EmptyList)?;
    Ok(rest.iter().fold(first.clone(), |acc, s| acc.intersect(s)))
}
