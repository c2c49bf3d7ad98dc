//! Partitions of the variable set into disjoint groups.

use crate::error::{MugError, Result};
use crate::support::SupportSet;

/// A partition of `{0, ..., p-1}` into disjoint, nonempty groups of size at
/// most `m_max`.
///
/// Construction always goes through [`Grouping::new`], which validates the
/// partition, so every value of this type in the program is a valid one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    p: usize,
    m_max: usize,
}

impl Grouping {
    /// Validates and builds a grouping. Members of each group are sorted;
    /// group order is kept as given.
    pub fn new(mut groups: Vec<Vec<usize>>, p: usize, m_max: usize) -> Result<Self> {
        if m_max == 0 {
            return Err(MugError::InvalidGrouping("m_max must be at least 1".into()));
        }
        let mut seen = vec![false; p];
        let mut covered = 0;
        for (g, members) in groups.iter_mut().enumerate() {
            if members.is_empty() {
                return Err(MugError::InvalidGrouping(format!("group {} is empty", g + 1)));
            }
            if members.len() > m_max {
                return Err(MugError::InvalidGrouping(format!(
                    "group {} has {} members, more than m_max = {m_max}",
                    g + 1,
                    members.len()
                )));
            }
            members.sort_unstable();
            for &j in members.iter() {
                if j >= p {
                    return Err(MugError::IndexOutOfRange { index: j + 1, p });
                }
                if seen[j] {
                    return Err(MugError::InvalidGrouping(format!(
                        "variable {} appears in more than one group",
                        j + 1
                    )));
                }
                seen[j] = true;
                covered += 1;
            }
        }
        if covered != p {
            let missing = seen.iter().position(|s| !s).unwrap_or(0);
            return Err(MugError::InvalidGrouping(format!(
                "variable {} is not in any group",
                missing + 1
            )));
        }
        Ok(Grouping { groups, p, m_max })
    }

    /// Every variable in its own group; the group Lasso then reduces to the
    /// Lasso.
    pub fn singletons(p: usize) -> Self {
        Grouping {
            groups: (0..p).map(|j| vec![j]).collect(),
            p,
            m_max: 1,
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    /// Number of groups.
    pub fn d(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// Largest group actually present.
    pub fn largest_group(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Expands selected groups to the union of their member variables.
pub fn group_support_to_variables(grouping: &Grouping, selected_groups: &[usize]) -> Result<SupportSet> {
    let mut vars = Vec::new();
    for &g in selected_groups {
        let members = grouping.groups.get(g).ok_or(MugError::BadGroupIndex {
            index: g,
            groups: grouping.d(),
        })?;
        vars.extend_from_slice(members);
    }
    Ok(SupportSet::from_indices(vars))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_one_group() {
        let g = Grouping::new(vec![vec![0, 1], vec![2, 3]], 4, 2).unwrap();
        let s = group_support_to_variables(&g, &[0]).unwrap();
        assert_eq!(s.to_one_based(), vec![1, 2]);
        assert!(group_support_to_variables(&g, &[]).unwrap().is_empty());
    }

    #[test]
    fn figure_one_top_row() {
        // {1,2},{3,4},{5,6},{7,8}; groups 1, 3 and 4 selected.
        let g = Grouping::new(vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]], 8, 2).unwrap();
        let s = group_support_to_variables(&g, &[0, 2, 3]).unwrap();
        assert_eq!(s.to_one_based(), vec![1, 2, 5, 6, 7, 8]);
    }

    #[test]
    fn bad_group_index() {
        let g = Grouping::singletons(3);
        assert!(matches!(
            group_support_to_variables(&g, &[3]),
            Err(MugError::BadGroupIndex { index: 3, groups: 3 })
        ));
    }

    #[test]
    fn rejects_invalid_partitions() {
        assert!(Grouping::new(vec![vec![0, 1], vec![1, 2]], 3, 2).is_err());
        assert!(Grouping::new(vec![vec![0, 1]], 3, 2).is_err());
        assert!(Grouping::new(vec![vec![0, 1, 2]], 3, 2).is_err());
        assert!(Grouping::new(vec![vec![0], vec![]], 1, 2).is_err());
        assert!(Grouping::new(vec![vec![0, 5]], 2, 2).is_err());
        assert!(Grouping::new(vec![vec![0]], 1, 0).is_err());
    }

    #[test]
    fn members_are_sorted() {
        let g = Grouping::new(vec![vec![2, 0], vec![1]], 3, 2).unwrap();
        assert_eq!(g.group(0), &[0, 2]);
        assert_eq!(g.d(), 2);
        assert_eq!(g.largest_group(), 2);
    }
}
