use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bitcore::{BitString, ClopenSet, Dyadic, OracleStream};
use crate::functional::{FunctionalError, MAX_USE};
use crate::machine::ReferenceMachine;
use crate::order::{fat_order, OrderTable};
use crate::trees::fatness_check;

use super::ConstructionError;

/// Largest level for which strings are drawn.
pub const FAT_MAX_N: usize = 14;

/// `p_n = ⌈2^n / n²⌉`.
pub fn fat_p(n: usize) -> u64 {
    let n2 = (n * n) as u64;
    (1u64 << n).div_ceil(n2.max(1))
}

/// Oracle bits read at level `n` when no draw is rejected: `n` for the length
/// offset and `p_n` strings of the longest possible length `2^{n+1} − 1`.
/// Once `p_n ≥ 2` a rejected duplicate forces redraws, so the use is unbounded.
pub fn fat_use_bound(n: usize) -> Option<usize> {
    if fat_p(n) == 1 {
        Some(n + (1usize << (n + 1)) - 1)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FatLevel {
    pub n: usize,
    pub ell: u64,
    /// Members of `F_n` in draw order.
    pub strings: Vec<BitString>,
    /// Oracle bits consumed, including rejected draws.
    pub bits_used: u64,
    pub rejections: u64,
}

/// One level of the fat set: `ℓ_n = 2^n + draw(n)` and `p_n` distinct strings of
/// length `ℓ_n`, redrawing on duplicates.
pub fn fat_set_step(oracle: &mut OracleStream, n: usize) -> Result<FatLevel, ConstructionError> {
    if !(2..=FAT_MAX_N).contains(&n) {
        return Err(ConstructionError::Guard(format!("fat set level {n} outside 2..={FAT_MAX_N}")));
    }
    let start = oracle.position();
    let ell = (1u64 << n) + oracle.draw(n)?;
    let p = fat_p(n) as usize;
    let mut seen = BTreeSet::new();
    let mut strings = Vec::with_capacity(p);
    let mut rejections = 0;
    while strings.len() < p {
        let s = oracle.draw_bits(ell as usize)?;
        if seen.insert(s.clone()) {
            strings.push(s);
        } else {
            rejections += 1;
        }
    }
    Ok(FatLevel {
        n,
        ell,
        strings,
        bits_used: oracle.position() - start,
        rejections,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FatSetState {
    pub seed: u64,
    pub levels: Vec<FatLevel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FatnessRow {
    pub n: usize,
    /// The length `2^n` at which level `n` is credited.
    pub checkpoint: u64,
    pub best: u64,
    pub required: u64,
    pub ok: bool,
    /// The same comparison at the true length `ℓ_n`.
    pub literal_required: u64,
    pub literal_ok: bool,
}

/// Levels `2..=n_max`, level `n` drawn from substream `n` of `seed`.
pub fn fat_set(seed: u64, n_max: usize) -> Result<FatSetState, ConstructionError> {
    let levels = (2..=n_max)
        .map(|n| fat_set_step(&mut OracleStream::substream(seed, n as u64), n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FatSetState { seed, levels })
}

impl FatSetState {
    pub fn level(&self, n: usize) -> Option<&FatLevel> {
        self.levels.iter().find(|l| l.n == n)
    }

    pub fn members(&self) -> impl Iterator<Item = &BitString> + '_ {
        self.levels.iter().flat_map(|l| l.strings.iter())
    }

    /// Fatness against `g(i) = ⌈i/(log₂ i)²⌉`. Level `n` has length in
    /// `[2^n, 2^{n+1})`, i.e. `log₂ ℓ_n = n` up to rounding, and is credited at
    /// `2^n`. The literal columns compare at the true length `ℓ_n` instead.
    pub fn fatness_rows(&self) -> Vec<FatnessRow> {
        let Some(top) = self.levels.iter().map(|l| l.n).max() else {
            return Vec::new();
        };
        let credited: BTreeMap<usize, usize> = self.levels.iter().map(|l| (1usize << l.n, l.strings.len())).collect();
        let g = OrderTable::from_fn((1usize << top) + 1, fat_order);
        let ok = fatness_check(&credited, &g).expect("fat order is monotone");
        let mut true_counts: BTreeMap<u64, u64> = BTreeMap::new();
        for l in &self.levels {
            *true_counts.entry(l.ell).or_default() += l.strings.len() as u64;
        }
        self.levels
            .iter()
            .map(|l| {
                let checkpoint = 1u64 << l.n;
                let literal_best = true_counts.range(..=l.ell).map(|(_, &c)| c).max().unwrap_or(0);
                let literal_required = fat_order(l.ell);
                FatnessRow {
                    n: l.n,
                    checkpoint,
                    best: credited.range(..=checkpoint as usize).map(|(_, &c)| c as u64).max().unwrap_or(0),
                    required: fat_order(checkpoint),
                    ok: ok[checkpoint as usize],
                    literal_required,
                    literal_ok: literal_best >= literal_required,
                }
            })
            .collect()
    }

    /// One line per level: `set n ell:` followed by the members in draw order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.levels {
            out.push_str(&format!("set {} {}:\n", l.n, l.ell));
            for s in &l.strings {
                out.push_str(&s.to_bit_text());
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolovayComponent {
    pub n: usize,
    pub use_bits: usize,
    /// Oracle prefixes (on substream `n`) in `L_n ∪ B_n`.
    pub set: ClopenSet,
    pub measure: Dyadic,
    /// `μ(L_n)`: the drawn length itself is compressible below `n`.
    pub length_measure: Dyadic,
    /// `μ(B_n − L_n)`.
    pub string_measure: Dyadic,
}

/// `L_n ∪ B_n = {z : K̂(ℓ_n) < n or some σ ∈ F_n has K̂(σ) < ℓ_n}` by enumerating
/// every oracle prefix the level-`n` draw can read.
pub fn fat_solovay_component(n: usize, machine: &ReferenceMachine) -> Result<SolovayComponent, ConstructionError> {
    if !(2..=FAT_MAX_N).contains(&n) {
        return Err(ConstructionError::Guard(format!("fat set level {n} outside 2..={FAT_MAX_N}")));
    }
    let use_bits = match fat_use_bound(n) {
        Some(u) if u <= MAX_USE => u,
        other => {
            return Err(FunctionalError::UseBound {
                n,
                used: other.unwrap_or(usize::MAX),
                max: MAX_USE,
            }
            .into())
        }
    };
    let mut gens = Vec::new();
    let mut length_hits = 0u64;
    let mut string_measure = Dyadic::zero();
    for offset in 0..(1u64 << n) {
        let ell = (1u64 << n) + offset;
        let head = BitString::from_value(offset, n);
        if machine.k_hat_nat(ell) < n as u64 {
            length_hits += 1;
            gens.push(head);
            continue;
        }
        let mut hits = 0u64;
        for sigma in BitString::all_of_length(ell as usize) {
            if machine.k_hat(&sigma) < ell {
                hits += 1;
                gens.push(head.concat(&sigma));
            }
        }
        string_measure += Dyadic::scaled(hits, n as u64 + ell);
    }
    let set = ClopenSet::from_generators(gens);
    let length_measure = Dyadic::scaled(length_hits, n as u64);
    let measure = set.measure();
    debug_assert_eq!(measure, &length_measure + &string_measure);
    Ok(SolovayComponent {
        n,
        use_bits,
        set,
        measure,
        length_measure,
        string_measure,
    })
}
