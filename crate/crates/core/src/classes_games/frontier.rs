use std::collections::BTreeSet;

use serde::Serialize;

use crate::bitcore::BitString;
use crate::trees::{PrunedTree, TreeError, TreePrefix};

/// A tree prefix stored by its final level. A pruned prefix of depth `n` is the
/// set of all prefixes of its leaves, so the leaves determine it; this keeps
/// wide game prefixes at one string per leaf.
#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct Frontier {
    depth: usize,
    leaves: Vec<BitString>,
    #[serde(skip)]
    widths: Vec<usize>,
}

impl Frontier {
    pub fn root() -> Self {
        Frontier {
            depth: 0,
            leaves: vec![BitString::empty()],
            widths: vec![1],
        }
    }

    pub fn from_leaves<I: IntoIterator<Item = BitString>>(depth: usize, leaves: I) -> Result<Self, TreeError> {
        let mut leaves: Vec<BitString> = leaves.into_iter().collect();
        if leaves.is_empty() {
            return Err(TreeError::BadCode("a frontier needs at least one leaf".into()));
        }
        if let Some(s) = leaves.iter().find(|s| s.len() != depth) {
            return Err(TreeError::BadCode(format!("leaf {s} is not of length {depth}")));
        }
        leaves.sort_unstable();
        leaves.dedup();
        Ok(Self::from_sorted(depth, leaves))
    }

    /// `leaves` must be sorted, distinct and of length `depth`.
    pub(crate) fn from_sorted(depth: usize, leaves: Vec<BitString>) -> Self {
        let mut hist = vec![0usize; depth + 1];
        for w in leaves.windows(2) {
            hist[w[0].common_prefix_len(&w[1])] += 1;
        }
        // width(n) = 1 + #{adjacent pairs splitting before n}
        let mut widths = Vec::with_capacity(depth + 1);
        let mut split = 0usize;
        for n in 0..=depth {
            widths.push(1 + split);
            split += hist[n];
        }
        Frontier { depth, leaves, widths }
    }

    pub fn from_prefix(p: &TreePrefix) -> Self {
        Self::from_sorted(p.depth(), p.leaves().iter().cloned().collect())
    }

    pub fn to_prefix(&self) -> TreePrefix {
        let mut levels: Vec<BTreeSet<BitString>> = vec![BTreeSet::new(); self.depth + 1];
        for leaf in &self.leaves {
            for (n, level) in levels.iter_mut().enumerate() {
                level.insert(leaf.prefix(n));
            }
        }
        PrunedTree::from_levels(levels).expect("closure of equal-length leaves is pruned")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaves(&self) -> &[BitString] {
        &self.leaves
    }

    pub fn width(&self, n: usize) -> usize {
        self.widths[n]
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Strings of the prefix at level `n` (`n ≤ depth`), sorted.
    pub fn level(&self, n: usize) -> Vec<BitString> {
        let mut out: Vec<BitString> = Vec::with_capacity(self.widths[n]);
        for leaf in &self.leaves {
            if out.last().is_none_or(|l| l.common_prefix_len(leaf) < n) {
                out.push(leaf.prefix(n));
            }
        }
        out
    }

    pub fn truncate(&self, n: usize) -> Frontier {
        let n = n.min(self.depth);
        Self::from_sorted(n, self.level(n))
    }

    /// `other ≼ self`.
    pub fn extends(&self, other: &Frontier) -> bool {
        other.depth <= self.depth
            && self.widths[other.depth] == other.leaves.len()
            && self.level(other.depth) == other.leaves
    }

    /// `F ≼ self` for a tree prefix `F`.
    pub fn extends_prefix(&self, f: &TreePrefix) -> bool {
        f.depth() <= self.depth
            && (0..=f.depth()).all(|n| self.widths[n] == f.width(n))
            && self.level(f.depth()).iter().eq(f.leaves().iter())
    }

    /// Whether `σ` is a string of the prefix.
    pub fn contains(&self, sigma: &BitString) -> bool {
        if sigma.len() > self.depth {
            return false;
        }
        let i = self.leaves.partition_point(|l| l < sigma);
        self.leaves.get(i).is_some_and(|l| sigma.is_prefix_of(l))
    }

    /// The leaf range extending `σ`.
    pub fn leaves_above(&self, sigma: &BitString) -> &[BitString] {
        let lo = self.leaves.partition_point(|l| l < sigma);
        let hi = lo + self.leaves[lo..].partition_point(|l| sigma.is_prefix_of(l));
        &self.leaves[lo..hi]
    }

    /// Extend every leaf by the strings `children(leaf)`, all of length
    /// `depth + k` for one `k ≥ 1`.
    pub fn extend_with<F>(&self, mut children: F) -> Result<Frontier, TreeError>
    where
        F: FnMut(&BitString) -> Vec<BitString>,
    {
        let mut out = Vec::with_capacity(self.leaves.len());
        let mut depth = None;
        for leaf in &self.leaves {
            let mut kids = children(leaf);
            if kids.is_empty() {
                return Err(TreeError::Deadend(leaf.clone()));
            }
            kids.sort_unstable();
            kids.dedup();
            for k in kids {
                if !leaf.is_prefix_of(&k) || k.len() == leaf.len() || depth.is_some_and(|d| d != k.len()) {
                    return Err(TreeError::BadCode(format!("{k} is not an extension of {leaf} at the common depth")));
                }
                depth = Some(k.len());
                out.push(k);
            }
        }
        Ok(Self::from_sorted(depth.expect("nonempty"), out))
    }

    /// Whether every leaf of `earlier` has at least two extensions among the leaves.
    pub fn branches_over(&self, earlier: &Frontier) -> bool {
        earlier.depth < self.depth
            && self.extends(earlier)
            && earlier.leaves.iter().all(|e| self.leaves_above(e).len() >= 2)
    }
}

impl std::fmt::Debug for Frontier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Frontier(depth {}, {:?})", self.depth, self.leaves)
    }
}
