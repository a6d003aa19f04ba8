use std::collections::BTreeMap;

use serde::Serialize;

use crate::bitcore::{BitString, Dyadic};
use crate::machine::ReferenceMachine;
use crate::order::OrderTable;

use super::{ClassError, MAX_PRESENTATION_CODES};

/// A co-enumerated class given by its depth-`n` prefix codes. `levels[n]` maps
/// each code to the stage at which it was removed, `None` if it survives the
/// snapshot stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeepClassPresentation {
    pub levels: Vec<BTreeMap<BitString, Option<u64>>>,
    /// Last stage the presentation has seen. Later stages see the same sets.
    pub stage: u64,
}

impl DeepClassPresentation {
    pub fn new(levels: Vec<BTreeMap<BitString, Option<u64>>>, stage: u64) -> Result<Self, ClassError> {
        let p = DeepClassPresentation { levels, stage };
        p.check().map_err(ClassError::Params)?;
        Ok(p)
    }

    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    /// `P_n(s)`.
    pub fn survivors(&self, n: usize, stage: u64) -> Vec<&BitString> {
        self.levels.get(n).map_or_else(Vec::new, |level| {
            level
                .iter()
                .filter(|(_, r)| r.is_none_or(|r| r > stage))
                .map(|(code, _)| code)
                .collect()
        })
    }

    /// Every code at level `n+1` extends a code at level `n` removed no later.
    pub fn check(&self) -> Result<(), String> {
        for n in 1..self.levels.len() {
            let parents = &self.levels[n - 1];
            for (code, r) in &self.levels[n] {
                let parent = parents
                    .range(..=code.clone())
                    .next_back()
                    .filter(|(p, _)| p.is_prefix_of(code))
                    .ok_or_else(|| format!("level {n} code {code} extends no level {} code", n - 1))?;
                if let Some(pr) = parent.1 {
                    if r.is_none_or(|r| r > *pr) {
                        return Err(format!("level {n} code {code} outlives its parent (removed at {pr})"));
                    }
                }
                if r.is_some_and(|r| r > self.stage) {
                    return Err(format!("level {n} code {code} removed after the snapshot stage"));
                }
            }
        }
        Ok(())
    }
}

/// Parameters of the class of sequences `(F_1, F_2, …)` where `F_i` holds `f(i)`
/// strings of length `ℓ(i)`, each with `K̂ ≥ ℓ(i) − d(i)`. Index 0 is slot 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KfldTables {
    pub f: Vec<u64>,
    pub ell: Vec<u64>,
    pub d: Vec<u64>,
}

impl KfldTables {
    pub fn slots(&self) -> usize {
        self.f.len()
    }

    fn validate(&self) -> Result<(), ClassError> {
        if self.ell.len() != self.f.len() || self.d.len() != self.f.len() {
            return Err(ClassError::Params("f, ℓ and d must have the same length".into()));
        }
        if let Some(i) = (1..self.ell.len()).find(|&i| self.ell[i] <= self.ell[i - 1]) {
            return Err(ClassError::Params(format!("ℓ is not increasing at slot {}", i + 1)));
        }
        for (i, (&f, &l)) in self.f.iter().zip(&self.ell).enumerate() {
            if l > 20 || (l < 64 && f > 1u64 << l) {
                return Err(ClassError::Params(format!("slot {}: no {f} distinct strings of length {l}", i + 1)));
            }
        }
        Ok(())
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut out = 1u128;
    for i in 0..k {
        out = out.saturating_mul(n - i) / (i + 1);
    }
    out
}

/// All `k`-subsets of `2^len`, members sorted, in lexicographic order of the tuples.
fn subsets(len: usize, k: usize) -> Vec<Vec<BitString>> {
    let universe: Vec<BitString> = BitString::all_of_length(len).collect();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > universe.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| universe[i].clone()).collect());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < universe.len() - k + p) else {
            return out;
        };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Sequences are coded by concatenating the sorted members of `F_1, F_2, …`. A
/// set is removed at the first stage where one of its members has converged
/// below the threshold, that is at `K̂(σ)` when `K̂(σ) < ℓ(i) − d(i)`; removals
/// after `stage` are not yet visible.
pub fn kfld_presentation(
    tables: &KfldTables,
    machine: &ReferenceMachine,
    stage: u64,
) -> Result<DeepClassPresentation, ClassError> {
    tables.validate()?;
    let mut levels: Vec<BTreeMap<BitString, Option<u64>>> = vec![BTreeMap::from([(BitString::empty(), None)])];
    let mut total = 1u128;
    for i in 0..tables.slots() {
        let (f, l) = (tables.f[i] as usize, tables.ell[i] as usize);
        total = total.saturating_mul(binomial(1u128 << l, f as u128));
        if total > MAX_PRESENTATION_CODES as u128 {
            return Err(ClassError::Guard(format!("level {} would hold {total} codes", i + 1)));
        }
        let floor = tables.ell[i] as i64 - tables.d[i] as i64;
        let sets: Vec<(BitString, Option<u64>)> = subsets(l, f)
            .into_iter()
            .map(|members| {
                let removal = members
                    .iter()
                    .filter_map(|s| machine.k_hat_at(s, stage))
                    .filter(|&k| (k as i64) < floor)
                    .min();
                let mut code = BitString::with_capacity(f * l);
                for s in &members {
                    code.extend_from(s);
                }
                (code, removal)
            })
            .collect();
        let prev = levels.last().expect("level 0");
        let mut next = BTreeMap::new();
        for (parent, pr) in prev {
            for (code, r) in &sets {
                let removal = match (pr, r) {
                    (Some(a), Some(b)) => Some(*a.min(b)),
                    (a, b) => a.or(*b),
                };
                next.insert(parent.concat(code), removal);
            }
        }
        levels.push(next);
    }
    Ok(DeepClassPresentation { levels, stage })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateRow {
    pub n: usize,
    pub survivors: usize,
    pub mass: Dyadic,
    pub bound: Dyadic,
    pub ok: bool,
    /// Always true: a later stage can only remove codes, so a pass here is a
    /// stage certificate, not a proof of depth.
    pub provisional: bool,
}

/// `Σ_{τ ∈ P_n(s)} m̂(τ)` against `2^{-g(n)}` for every `n ≤ n_max` covered by
/// both the presentation and `g`.
pub fn depth_certificate_check(
    p: &DeepClassPresentation,
    g: &OrderTable,
    n_max: usize,
    stage: u64,
    machine: &ReferenceMachine,
) -> Vec<CertificateRow> {
    let top = n_max.min(p.depth()).min(g.len().saturating_sub(1));
    if g.is_empty() {
        return Vec::new();
    }
    (0..=top)
        .map(|n| {
            let survivors = p.survivors(n, stage);
            let mut mass = Dyadic::zero();
            for code in &survivors {
                mass += machine.m_hat(code);
            }
            let bound = Dyadic::pow2(-(g.get(n).expect("in range") as i64));
            CertificateRow {
                n,
                survivors: survivors.len(),
                ok: mass <= bound,
                mass,
                bound,
                provisional: true,
            }
        })
        .collect()
}
