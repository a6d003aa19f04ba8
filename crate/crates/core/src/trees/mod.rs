//! Level-indexed trees, tree prefixes and their codes.

mod class;
mod code;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use serde::{Serialize, Serializer};

use crate::bitcore::BitString;
use crate::order::OrderTable;

pub use class::{
    properness_witness, BasicOpenClass, ExplicitExclusion, TreeClass, WidthFloorClass, WitnessBudget,
    WitnessOutcome,
};
pub use code::{tree_prefix_code, tree_prefix_decode, tree_prefix_code_len};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("{0:?} has no parent in the level above")]
    NotDownwardClosed(BitString),
    #[error("{sigma:?} sits at level {level} but has length {}", sigma.len())]
    WrongLevel { sigma: BitString, level: usize },
    #[error("{0:?} is a deadend below the final level")]
    Deadend(BitString),
    #[error("tree code: {0}")]
    BadCode(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("order table decreases at {0}")]
    NotMonotone(usize),
}

/// A downward-closed finite tree truncated at depth `levels.len() − 1`.
/// Deadends are allowed anywhere.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LevelTree {
    levels: Vec<BTreeSet<BitString>>,
}

impl LevelTree {
    pub fn new(levels: Vec<BTreeSet<BitString>>) -> Result<Self, TreeError> {
        for (n, level) in levels.iter().enumerate() {
            for s in level {
                if s.len() != n {
                    return Err(TreeError::WrongLevel {
                        sigma: s.clone(),
                        level: n,
                    });
                }
                if n > 0 && !levels[n - 1].contains(&s.prefix(n - 1)) {
                    return Err(TreeError::NotDownwardClosed(s.clone()));
                }
            }
        }
        Ok(LevelTree { levels })
    }

    /// Tree of depth `depth` with no strings at all.
    pub fn empty(depth: usize) -> Self {
        LevelTree {
            levels: vec![BTreeSet::new(); depth + 1],
        }
    }

    pub fn full(depth: usize) -> Self {
        LevelTree {
            levels: (0..=depth).map(|n| BitString::all_of_length(n).collect()).collect(),
        }
    }

    /// All prefixes of `x` up to length `|x|`.
    pub fn path(x: &BitString) -> Self {
        LevelTree {
            levels: (0..=x.len()).map(|n| BTreeSet::from([x.prefix(n)])).collect(),
        }
    }

    /// Downward closure of a set of strings, to depth `depth`.
    pub fn closure<'a, I: IntoIterator<Item = &'a BitString>>(strings: I, depth: usize) -> Self {
        let mut levels = vec![BTreeSet::new(); depth + 1];
        for s in strings {
            for n in 0..=s.len().min(depth) {
                levels[n].insert(s.prefix(n));
            }
        }
        LevelTree { levels }
    }

    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn level(&self, n: usize) -> &BTreeSet<BitString> {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[BTreeSet<BitString>] {
        &self.levels
    }

    pub fn width(&self, n: usize) -> usize {
        self.levels.get(n).map_or(0, |l| l.len())
    }

    pub fn width_profile(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.first().is_none_or(|l| l.is_empty())
    }

    pub fn contains(&self, s: &BitString) -> bool {
        self.levels.get(s.len()).is_some_and(|l| l.contains(s))
    }

    /// Children of `s` present in the tree.
    pub fn children(&self, s: &BitString) -> impl Iterator<Item = BitString> + '_ {
        let kids = [s.child(false), s.child(true)];
        kids.into_iter().filter(move |c| self.contains(c))
    }

    /// Strings below the final level with no child.
    pub fn deadends(&self) -> Vec<BitString> {
        let mut out = Vec::new();
        for n in 0..self.depth() {
            for s in &self.levels[n] {
                if self.children(s).next().is_none() {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    pub fn is_pruned(&self) -> bool {
        self.deadends().is_empty()
    }

    /// `T ∩ 2^{≤n}`.
    pub fn truncate(&self, n: usize) -> LevelTree {
        assert!(n <= self.depth(), "truncate {n} beyond depth {}", self.depth());
        LevelTree {
            levels: self.levels[..=n].to_vec(),
        }
    }

    /// Remove every string that has no extension at the final level.
    pub fn prune_deadends(&self) -> PrunedTree {
        let mut levels = self.levels.clone();
        for n in (0..self.depth()).rev() {
            let (lo, hi) = levels.split_at_mut(n + 1);
            let next = &hi[0];
            lo[n].retain(|s| next.contains(&s.child(false)) || next.contains(&s.child(true)));
        }
        PrunedTree(LevelTree { levels })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, level) in self.levels.iter().enumerate() {
            out.push_str(&format!("level {n}:\n"));
            for s in level {
                out.push_str(&s.to_bit_text());
                out.push('\n');
            }
        }
        out
    }

    /// Blocks `level n:` followed by one string per line. The empty string is
    /// written as an empty line (or `λ`) under `level 0:`.
    pub fn parse_text(text: &str) -> Result<LevelTree, TreeError> {
        let mut levels: Vec<BTreeSet<BitString>> = Vec::new();
        let mut current: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r').trim();
            let err = |msg: String| TreeError::Parse { line: i + 1, msg };
            if let Some(rest) = line.strip_prefix("level ") {
                let n: usize = rest
                    .strip_suffix(':')
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| err(format!("bad level header {line:?}")))?;
                if n != levels.len() {
                    return Err(err(format!("expected level {}, found {n}", levels.len())));
                }
                levels.push(BTreeSet::new());
                current = Some(n);
                continue;
            }
            let Some(n) = current else {
                if line.is_empty() {
                    continue;
                }
                return Err(err("string before the first level header".into()));
            };
            if line.is_empty() && n != 0 {
                continue;
            }
            let s: BitString = line.parse().map_err(|e: crate::bitcore::BitcoreError| err(e.to_string()))?;
            if s.len() != n {
                return Err(err(format!("{s:?} has length {} under level {n}", s.len())));
            }
            levels[n].insert(s);
        }
        if levels.is_empty() {
            return Err(TreeError::Parse {
                line: 0,
                msg: "no levels".into(),
            });
        }
        LevelTree::new(levels)
    }
}

/// Serialized as the list of levels, each a list of bit strings.
impl Serialize for LevelTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.levels.serialize(s)
    }
}

impl Serialize for PrunedTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl fmt::Debug for LevelTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.levels.iter()).finish()
    }
}

/// A [`LevelTree`] with no deadends below its final level. A depth-`n` pruned
/// tree is exactly a tree prefix `T ∩ 2^{≤n}` of some infinite pruned tree.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PrunedTree(LevelTree);

/// Tree prefixes `F = T ∩ 2^{≤n}` share the representation of pruned trees.
pub type TreePrefix = PrunedTree;

impl PrunedTree {
    pub fn new(tree: LevelTree) -> Result<Self, TreeError> {
        if let Some(d) = tree.deadends().into_iter().next() {
            return Err(TreeError::Deadend(d));
        }
        Ok(PrunedTree(tree))
    }

    pub fn from_levels(levels: Vec<BTreeSet<BitString>>) -> Result<Self, TreeError> {
        Self::new(LevelTree::new(levels)?)
    }

    pub fn full(depth: usize) -> Self {
        PrunedTree(LevelTree::full(depth))
    }

    pub fn path(x: &BitString) -> Self {
        PrunedTree(LevelTree::path(x))
    }

    /// The prefix `{λ}` of depth 0.
    pub fn root() -> Self {
        PrunedTree(LevelTree::path(&BitString::empty()))
    }

    pub fn as_level_tree(&self) -> &LevelTree {
        &self.0
    }

    pub fn into_level_tree(self) -> LevelTree {
        self.0
    }

    pub fn truncate(&self, n: usize) -> PrunedTree {
        PrunedTree(self.0.truncate(n))
    }

    /// `F ≺ self`: `F` is `self` cut at depth `depth(F)`.
    pub fn has_prefix(&self, f: &PrunedTree) -> bool {
        f.depth() <= self.depth() && f.0.levels[..] == self.0.levels[..=f.depth()]
    }

    /// Add one level given the chosen children of every current leaf.
    /// Every leaf must receive at least one child.
    pub fn extend_level(&self, next: BTreeSet<BitString>) -> Result<PrunedTree, TreeError> {
        let mut levels = self.0.levels.clone();
        levels.push(next);
        PrunedTree::from_levels(levels)
    }

    /// The leaves (final level).
    pub fn leaves(&self) -> &BTreeSet<BitString> {
        self.0.level(self.depth())
    }
}

impl Deref for PrunedTree {
    type Target = LevelTree;

    fn deref(&self) -> &LevelTree {
        &self.0
    }
}

impl fmt::Debug for PrunedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `T ∈ ⟦F⟧`: the levels of `T` up to `depth(F)` are exactly those of `F`.
pub fn basic_open_member(f: &TreePrefix, t: &PrunedTree) -> bool {
    t.has_prefix(f)
}

pub fn prune_deadends(levels: &LevelTree) -> PrunedTree {
    levels.prune_deadends()
}

/// For each `n < g.len()`, whether `max_{i≤n} |D ∩ 2^i| ≥ g(n)`. `counts` maps a
/// length to the number of members of that length.
pub fn fatness_check(counts: &BTreeMap<usize, usize>, g: &OrderTable) -> Result<Vec<bool>, TreeError> {
    if let Some(n) = g.first_decrease() {
        return Err(TreeError::NotMonotone(n));
    }
    let mut best = 0usize;
    let mut out = Vec::with_capacity(g.len());
    for (n, &gn) in g.values().iter().enumerate() {
        best = best.max(counts.get(&n).copied().unwrap_or(0));
        out.push(best as u64 >= gn);
    }
    Ok(out)
}

/// Length histogram of a string set.
pub fn length_counts<'a, I: IntoIterator<Item = &'a BitString>>(strings: I) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for s in strings {
        *out.entry(s.len()).or_insert(0) += 1;
    }
    out
}
