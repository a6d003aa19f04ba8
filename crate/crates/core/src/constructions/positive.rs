use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::bitcore::{rank_pair, unpair, BitString, ClopenSet, Dyadic};
use crate::machine::ReferenceMachine;
use crate::trees::LevelTree;

use super::ConstructionError;

/// Deepest positive tree built level by level.
pub const POSITIVE_MAX_DEPTH: usize = 16;

/// A finite set of pairs `(n, m)` weighted by `2^{-n}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightedPairSet {
    pairs: BTreeSet<(u64, BigUint)>,
}

/// Serialized as `[[n, "m"], …]`; `m` is a decimal string since it can be large.
impl Serialize for WeightedPairSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.pairs.len()))?;
        for (n, m) in &self.pairs {
            seq.serialize_element(&(n, m.to_string()))?;
        }
        seq.end()
    }
}

impl WeightedPairSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: u64, m: BigUint) -> bool {
        self.pairs.insert((n, m))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(u64, BigUint)> + '_ {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(|σ|, ⟨σ, k⟩)` for the pair `(σ, k)`.
    pub fn insert_string(&mut self, sigma: &BitString, k: u64) -> bool {
        self.insert(sigma.len() as u64, rank_pair(sigma, k))
    }

    /// One `n m` pair per line.
    pub fn to_text(&self) -> String {
        self.pairs.iter().map(|(n, m)| format!("{n} {m}\n")).collect()
    }

    pub fn parse_text(text: &str) -> Result<Self, String> {
        let mut out = WeightedPairSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(n), Some(m), None) = (it.next(), it.next(), it.next()) else {
                return Err(format!("line {}: expected two numbers", i + 1));
            };
            let n = n.parse().map_err(|e| format!("line {}: {e}", i + 1))?;
            let m = m.parse().map_err(|e| format!("line {}: {e}", i + 1))?;
            out.insert(n, m);
        }
        Ok(out)
    }
}

/// `Σ_{(n,m)∈X} 2^{-n}`, exactly.
pub fn wgt(x: &WeightedPairSet) -> Dyadic {
    x.pairs.iter().map(|(n, _)| Dyadic::pow2(-(*n as i64))).sum()
}

/// `{(|σ|, ⟨σ,k⟩) : K̂(σ) ≤ |σ| − k, |σ| ≤ len_max, 1 ≤ k ≤ k_max}`.
///
/// Literal programs are longer than their output, so only registered outputs
/// can qualify; the scan runs over those.
pub fn d_set_enumerate(machine: &ReferenceMachine, len_max: usize, k_max: u64) -> WeightedPairSet {
    let mut out = WeightedPairSet::new();
    let mut registered: Vec<&BitString> = machine.compressed().map(|(s, _)| s).collect();
    registered.sort();
    for sigma in registered {
        if sigma.len() > len_max {
            continue;
        }
        let d = machine.deficiency(sigma);
        for k in 1..=k_max.min(d.max(0) as u64) {
            out.insert_string(sigma, k);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PositiveTree {
    pub k: u64,
    /// `T_k ∩ 2^{≤N}`; may contain deadends.
    pub tree: LevelTree,
    /// The strings `σ`, `|σ| ≤ N`, with `(|σ|, ⟨σ,k⟩) ∈ X`.
    pub banned: BTreeSet<BitString>,
    /// `⋃ [σ]` over the banned strings.
    pub excluded: ClopenSet,
    /// `μ(2^ω − [T_k])` as far as the depth-`N` information determines it.
    pub complement: Dyadic,
}

/// `T_k = {ρ : (|σ|, ⟨σ,k⟩) ∉ X for all σ ≼ ρ}` to depth `big_n`.
pub fn positive_tree(x: &WeightedPairSet, k: u64, big_n: usize) -> Result<PositiveTree, ConstructionError> {
    if big_n > POSITIVE_MAX_DEPTH {
        return Err(ConstructionError::Guard(format!("depth {big_n} above {POSITIVE_MAX_DEPTH}")));
    }
    let mut banned = BTreeSet::new();
    for (n, m) in x.pairs() {
        if *n as usize > big_n {
            continue;
        }
        let (sigma, kk) = unpair(m);
        if kk == BigUint::from(k) && sigma.len() as u64 == *n {
            banned.insert(sigma);
        }
    }
    let mut levels = vec![BTreeSet::new(); big_n + 1];
    if !banned.contains(&BitString::empty()) {
        levels[0].insert(BitString::empty());
    }
    for n in 1..=big_n {
        let next: BTreeSet<BitString> = levels[n - 1]
            .iter()
            .flat_map(|s| [s.child(false), s.child(true)])
            .filter(|s| !banned.contains(s))
            .collect();
        levels[n] = next;
    }
    let excluded = ClopenSet::from_generators(banned.iter().cloned());
    let complement = excluded.measure();
    Ok(PositiveTree {
        k,
        tree: LevelTree::new(levels)?,
        banned,
        excluded,
        complement,
    })
}

/// Some `k ∈ 1..=k_max` with complement below 1/2, if any.
pub fn positive_witness(x: &WeightedPairSet, k_max: u64, big_n: usize) -> Result<Option<u64>, ConstructionError> {
    let half = Dyadic::pow2(-1);
    for k in 1..=k_max {
        if positive_tree(x, k, big_n)?.complement < half {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
