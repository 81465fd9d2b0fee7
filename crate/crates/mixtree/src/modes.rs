//! Sorted sets of mode indices (1-based), used both as tree-node labels and
//! as matricization index sets.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// A strictly increasing list of 1-based mode indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ModeSet(Vec<usize>);

impl ModeSet {
    /// Requires a strictly increasing list; duplicates and out-of-order
    /// input are rejected rather than repaired.
    pub fn new(v: Vec<usize>) -> Result<Self> {
        for w in v.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidIndexSet(format!(
                    "indices must be strictly increasing, got {v:?}"
                )));
            }
        }
        if v.first() == Some(&0) {
            return Err(Error::InvalidIndexSet("indices are 1-based".into()));
        }
        Ok(ModeSet(v))
    }

    /// Sorts the input first; duplicates are still an error.
    pub fn from_elements(v: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = v.into_iter().collect();
        v.sort_unstable();
        Self::new(v)
    }

    pub fn empty() -> Self {
        ModeSet(Vec::new())
    }

    pub fn singleton(j: usize) -> Self {
        ModeSet(vec![j])
    }

    /// The full set `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        ModeSet((1..=n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset_of(&self, other: &ModeSet) -> bool {
        self.0.iter().all(|j| other.contains(*j))
    }

    pub fn is_disjoint_from(&self, other: &ModeSet) -> bool {
        self.0.iter().all(|j| !other.contains(*j))
    }

    /// Disjoint union; errors if the sets overlap.
    pub fn disjoint_union(&self, other: &ModeSet) -> Result<ModeSet> {
        if !self.is_disjoint_from(other) {
            return Err(Error::InvalidIndexSet(format!(
                "sets {self} and {other} overlap"
            )));
        }
        let mut v: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        Ok(ModeSet(v))
    }

    pub fn intersection(&self, other: &ModeSet) -> ModeSet {
        ModeSet(self.0.iter().copied().filter(|j| other.contains(*j)).collect())
    }

    /// Complement within `{1, ..., n}`.
    pub fn complement_in(&self, n: usize) -> ModeSet {
        ModeSet((1..=n).filter(|j| !self.contains(*j)).collect())
    }

    /// Sort key realizing inclusion order with lexicographic tie-breaking:
    /// a proper subset always sorts before its superset.
    pub fn inclusion_key(&self) -> (usize, Vec<usize>) {
        (self.0.len(), self.0.clone())
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|j| j.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl<'de> Deserialize<'de> for ModeSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        ModeSet::new(v).map_err(serde::de::Error::custom)
    }
}

/// Parse `"1-4,9,10"` style 1-based index lists with inclusive ranges.
pub fn parse_index_spec(spec: &str) -> Result<ModeSet> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad range start {a:?}")))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad range end {b:?}")))?;
            if a > b {
                return Err(Error::Parse(format!("empty range {part:?}")));
            }
            out.extend(a..=b);
        } else {
            let j: usize = part
                .parse()
                .map_err(|_| Error::Parse(format!("bad index {part:?}")))?;
            out.push(j);
        }
    }
    ModeSet::from_elements(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_duplicates() {
        assert!(ModeSet::new(vec![3, 1]).is_err());
        assert!(ModeSet::new(vec![1, 1]).is_err());
        assert!(ModeSet::from_elements(vec![3, 1]).is_ok());
        assert!(ModeSet::from_elements(vec![1, 1]).is_err());
    }

    #[test]
    fn complement_and_union() {
        let s = ModeSet::new(vec![1, 3]).unwrap();
        let c = s.complement_in(4);
        assert_eq!(c.as_slice(), &[2, 4]);
        let u = s.disjoint_union(&c).unwrap();
        assert_eq!(u, ModeSet::full(4));
        assert!(s.disjoint_union(&s).is_err());
    }

    #[test]
    fn parses_ranges() {
        let s = parse_index_spec("1-4,9,10").unwrap();
        assert_eq!(s.as_slice(), &[1, 2, 3, 4, 9, 10]);
        assert!(parse_index_spec("4-1").is_err());
        assert!(parse_index_spec("1,1").is_err());
    }
}
