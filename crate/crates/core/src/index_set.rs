//! Small sets of coefficient indices `k < 64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexSetError {
    #[error("cannot parse index {0:?}")]
    BadIndex(String),
    #[error("index {0} exceeds the supported maximum of 63")]
    TooLarge(usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct IndexSet(u64);

impl IndexSet {
    pub const fn empty() -> Self {
        Self(0)
    }

    /// `{lo, ..., hi - 1}`.
    pub fn range(lo: usize, hi: usize) -> Self {
        (lo..hi).collect()
    }

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, k: usize) -> bool {
        k < 64 && self.0 >> k & 1 == 1
    }

    pub fn with(self, k: usize) -> Self {
        assert!(k < 64, "index {k} out of range");
        Self(self.0 | 1 << k)
    }

    pub fn without(self, k: usize) -> Self {
        if k < 64 {
            Self(self.0 & !(1 << k))
        } else {
            self
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn max(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&k| self.contains(k))
    }

    /// `{n - k : k in self}`.
    pub fn reflect(self, n: usize) -> Self {
        self.iter().map(|k| n - k).collect()
    }

    /// All nonempty subsets in increasing bitmask order.
    pub fn nonempty_subsets(self) -> Vec<IndexSet> {
        let mut out = Vec::new();
        let mut sub = self.0;
        while sub != 0 {
            out.push(IndexSet(sub));
            sub = (sub - 1) & self.0;
        }
        out.reverse();
        out
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(IndexSet::empty(), IndexSet::with)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Self {
        s.iter().collect()
    }
}

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = IndexSetError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        if let Some(&k) = v.iter().find(|&&k| k >= 64) {
            return Err(IndexSetError::TooLarge(k));
        }
        Ok(v.into_iter().collect())
    }
}

/// Parses `"1,2,3"`, optionally wrapped in braces; `""` is the empty set.
impl FromStr for IndexSet {
    type Err = IndexSetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut out = IndexSet::empty();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let k: usize = part.parse().map_err(|_| IndexSetError::BadIndex(part.to_string()))?;
            if k >= 64 {
                return Err(IndexSetError::TooLarge(k));
            }
            out = out.with(k);
        }
        Ok(out)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|k| k.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
