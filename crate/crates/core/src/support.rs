use std::fmt;

use serde::{Deserialize, Serialize};

/// An ordered set of zero-based feature indices identifying a submodel.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn empty() -> Self {
        SupportSet(Vec::new())
    }

    /// Builds a support from arbitrary indices, sorting and removing duplicates.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SupportSet(v)
    }

    /// Accepts indices only if they are already strictly increasing.
    pub fn try_from_sorted(indices: Vec<usize>) -> Option<Self> {
        if indices.windows(2).all(|w| w[0] < w[1]) {
            Some(SupportSet(indices))
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    /// Largest index plus one, or zero for the empty set.
    pub fn bound(&self) -> usize {
        self.0.last().map_or(0, |&j| j + 1)
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.iter().all(|j| other.contains(j))
    }

    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        let (mut a, mut b, mut count) = (0, 0, 0);
        while a < self.0.len() && b < other.0.len() {
            match self.0[a].cmp(&other.0[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
        count
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        SupportSet::from_indices(self.iter().chain(other.iter()))
    }

    /// Maps positions within a reduced feature list back to the reduced list's
    /// own indices, e.g. from screened-column positions to original columns.
    pub fn lift(&self, reduced: &SupportSet) -> SupportSet {
        SupportSet::from_indices(self.iter().map(|k| reduced.0[k]))
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{j}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<usize> for SupportSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        SupportSet::from_indices(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_indices_sorts_and_dedups() {
        let s = SupportSet::from_indices([5, 1, 3, 1]);
        assert_eq!(s.indices(), &[1, 3, 5]);
        assert_eq!(s.len(), 3);
        assert!(s.contains(3));
        assert!(!s.contains(2));
    }

    #[test]
    fn try_from_sorted_rejects_duplicates() {
        assert!(SupportSet::try_from_sorted(vec![0, 2, 2]).is_none());
        assert!(SupportSet::try_from_sorted(vec![2, 0]).is_none());
        assert!(SupportSet::try_from_sorted(vec![]).is_some());
    }

    #[test]
    fn set_arithmetic() {
        let a = SupportSet::from_indices([0, 1, 4]);
        let b = SupportSet::from_indices([0, 1, 2, 3]);
        assert_eq!(a.intersection_len(&b), 2);
        assert!(!a.is_subset_of(&b));
        assert!(SupportSet::from_indices([1, 3]).is_subset_of(&b));
        assert_eq!(a.union(&b).len(), 5);
    }

    #[test]
    fn lift_maps_positions() {
        let screened = SupportSet::from_indices([3, 10, 42]);
        let local = SupportSet::from_indices([0, 2]);
        assert_eq!(local.lift(&screened).indices(), &[3, 42]);
    }
}
