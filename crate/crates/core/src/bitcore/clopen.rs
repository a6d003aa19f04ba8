use std::collections::BTreeSet;
use std::fmt;
use std::ops::Bound;

use super::{BitString, BitcoreError, Dyadic};

/// A clopen subset of Cantor space, stored as its canonical generator antichain.
///
/// Canonical means no generator is a prefix of another and no two
/// generators are siblings. Two clopen sets are equal as sets iff their
/// canonical generator lists are equal.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ClopenSet {
    gens: BTreeSet<BitString>,
}

impl ClopenSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self::cylinder(BitString::empty())
    }

    pub fn cylinder(sigma: BitString) -> Self {
        ClopenSet {
            gens: BTreeSet::from([sigma]),
        }
    }

    /// Canonicalize an arbitrary generator set.
    pub fn from_generators<I: IntoIterator<Item = BitString>>(generators: I) -> Self {
        let sorted: BTreeSet<BitString> = generators.into_iter().collect();
        Self::from_sorted(sorted)
    }

    fn from_sorted(sorted: BTreeSet<BitString>) -> Self {
        // In sorted order every extension of σ directly follows σ, so comparing
        // with the last kept generator is enough to absorb them.
        let mut antichain: BTreeSet<BitString> = BTreeSet::new();
        let mut last: Option<BitString> = None;
        for s in sorted {
            if let Some(l) = &last {
                if l.is_prefix_of(&s) {
                    continue;
                }
            }
            last = Some(s.clone());
            antichain.insert(s);
        }
        let mut work: Vec<BitString> = antichain.iter().cloned().collect();
        while let Some(s) = work.pop() {
            if !antichain.contains(&s) {
                continue;
            }
            let Some(sib) = s.sibling() else { continue };
            if antichain.contains(&sib) {
                antichain.remove(&s);
                antichain.remove(&sib);
                let parent = s.parent().expect("nonempty");
                antichain.insert(parent.clone());
                work.push(parent);
            }
        }
        ClopenSet { gens: antichain }
    }

    pub fn generators(&self) -> impl Iterator<Item = &BitString> + '_ {
        self.gens.iter()
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.gens.len() == 1 && self.gens.iter().next().unwrap().is_empty()
    }

    /// Length of the longest generator; 0 for the empty set.
    pub fn depth(&self) -> usize {
        self.gens.iter().map(|g| g.len()).max().unwrap_or(0)
    }

    pub fn measure(&self) -> Dyadic {
        self.gens.iter().map(|g| Dyadic::pow2(-(g.len() as i64))).sum()
    }

    /// `[x] ⊆ C`: some generator is a prefix of `x`.
    pub fn covers(&self, x: &BitString) -> bool {
        (0..=x.len()).any(|n| self.gens.contains(&x.prefix(n)))
    }

    /// `[x] ∩ C ≠ ∅`.
    pub fn meets(&self, x: &BitString) -> bool {
        self.covers(x) || self.extensions_of(x).next().is_some()
    }

    /// Generators that extend `sigma` (including `sigma` itself).
    fn extensions_of<'a>(&'a self, sigma: &'a BitString) -> impl Iterator<Item = &'a BitString> + 'a {
        self.gens
            .range((Bound::Included(sigma), Bound::Unbounded))
            .take_while(move |g| sigma.is_prefix_of(g))
    }

    pub fn union(&self, other: &ClopenSet) -> ClopenSet {
        Self::from_sorted(self.gens.union(&other.gens).cloned().collect())
    }

    pub fn intersection(&self, other: &ClopenSet) -> ClopenSet {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = BTreeSet::new();
        for a in &small.gens {
            if large.covers(a) {
                out.insert(a.clone());
            } else {
                out.extend(large.extensions_of(a).cloned());
            }
        }
        Self::from_sorted(out)
    }

    pub fn intersect_cylinder(&self, sigma: &BitString) -> ClopenSet {
        self.intersection(&ClopenSet::cylinder(sigma.clone()))
    }

    /// `μ(C ∩ [σ]) / μ([σ])`.
    pub fn relative_measure(&self, sigma: &BitString) -> Dyadic {
        self.intersect_cylinder(sigma).measure().shift(sigma.len() as i64)
    }

    /// Exact complement. Generators of the result are no longer than the
    /// deepest generator of `self`, so no depth has to be supplied.
    pub fn complement(&self) -> ClopenSet {
        let gens: Vec<BitString> = self.gens.iter().cloned().collect();
        let mut out = BTreeSet::new();
        complement_rec(BitString::empty(), &gens, &mut out);
        Self::from_sorted(out)
    }

    pub fn difference(&self, other: &ClopenSet) -> ClopenSet {
        self.intersection(&other.complement())
    }

    pub fn is_subset(&self, other: &ClopenSet) -> bool {
        self.gens.iter().all(|g| other.covers(g))
    }

    pub fn is_disjoint(&self, other: &ClopenSet) -> bool {
        self.intersection(other).is_empty()
    }

    /// All strings of length `d` whose cylinders lie in the set. Requires `d ≥ depth()`.
    pub fn strings_at_depth(&self, d: usize) -> Vec<BitString> {
        assert!(d >= self.depth());
        let mut out = Vec::new();
        for g in &self.gens {
            let extra = d - g.len();
            assert!(extra < 40, "expansion too large");
            for v in 0..(1u64 << extra) {
                out.push(g.concat(&BitString::from_value(v, extra)));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for g in &self.gens {
            s.push_str(&g.to_bit_text());
            s.push('\n');
        }
        s
    }

    /// One generator per line; an empty line is λ and an empty input is ∅.
    pub fn parse_text(text: &str) -> Result<ClopenSet, BitcoreError> {
        let mut gens = Vec::new();
        for (i, line) in text.split_terminator('\n').enumerate() {
            let line = line.trim_end_matches('\r');
            let g = line.parse::<BitString>().map_err(|e| BitcoreError::ClopenLine {
                line: i + 1,
                source: Box::new(e),
            })?;
            gens.push(g);
        }
        Ok(ClopenSet::from_generators(gens))
    }
}

fn complement_rec(node: BitString, gens: &[BitString], out: &mut BTreeSet<BitString>) {
    if gens.is_empty() {
        out.insert(node);
        return;
    }
    if gens[0] == node {
        return;
    }
    // gens is sorted and all extend `node`, so the 0-branch comes first.
    let split = gens.partition_point(|g| !g.get(node.len()));
    complement_rec(node.child(false), &gens[..split], out);
    complement_rec(node.child(true), &gens[split..], out);
}

impl fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.gens.iter()).finish()
    }
}

impl serde::Serialize for ClopenSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.gens.iter())
    }
}

impl<'de> serde::Deserialize<'de> for ClopenSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let gens = Vec::<BitString>::deserialize(deserializer)?;
        Ok(ClopenSet::from_generators(gens))
    }
}
