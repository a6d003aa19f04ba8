use std::collections::BTreeSet;

use serde::Serialize;

use crate::bitcore::{BitString, OracleStream};
use crate::machine::ReferenceMachine;

use super::ConstructionError;

/// Largest `q(n)`: lengths are drawn from `[0, 2^{q(n)})`.
pub const MAX_SCHEDULE_BITS: u64 = 20;

/// The interval schedule `I_n = [0, 2^{q(n)})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Schedule {
    /// `q(n) = n²`.
    Square,
    /// `q(n) = table[n]`.
    Table(Vec<u64>),
}

impl Schedule {
    pub fn bits(&self, n: usize) -> Option<u64> {
        match self {
            Schedule::Square => Some((n * n) as u64),
            Schedule::Table(t) => t.get(n).copied(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SamplerLevel {
    pub ell: u64,
    /// The value drawn before the clamp (0 for the base level).
    pub drawn: u64,
    pub strings: BTreeSet<BitString>,
}

impl SamplerLevel {
    pub fn clamped(&self) -> bool {
        self.drawn < self.ell
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeSamplerState {
    pub levels: Vec<SamplerLevel>,
}

impl Default for TreeSamplerState {
    fn default() -> Self {
        Self::new()
    }
}

impl TreeSamplerState {
    /// `ℓ_0 = 0`, `F_0 = {λ}`.
    pub fn new() -> Self {
        TreeSamplerState {
            levels: vec![SamplerLevel {
                ell: 0,
                drawn: 0,
                strings: BTreeSet::from([BitString::empty()]),
            }],
        }
    }

    /// A state with explicitly given levels; lengths must be nondecreasing and
    /// each level's strings must have its length.
    pub fn from_levels(levels: Vec<(u64, BTreeSet<BitString>)>) -> Result<Self, ConstructionError> {
        let mut out = Vec::with_capacity(levels.len());
        for (i, (ell, strings)) in levels.into_iter().enumerate() {
            if strings.iter().any(|s| s.len() as u64 != ell) {
                return Err(ConstructionError::Guard(format!("level {i} has a string of the wrong length")));
            }
            if out.last().is_some_and(|l: &SamplerLevel| l.ell > ell) {
                return Err(ConstructionError::Guard(format!("level {i} is shorter than its predecessor")));
            }
            out.push(SamplerLevel {
                ell,
                drawn: ell,
                strings,
            });
        }
        if out.is_empty() {
            return Err(ConstructionError::Guard("no levels".into()));
        }
        Ok(TreeSamplerState { levels: out })
    }

    /// Index of the last level.
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> Option<&SamplerLevel> {
        self.levels.get(n)
    }

    /// Whenever the length grows, every string of the previous level has
    /// exactly two extensions; a clamped level repeats its predecessor.
    pub fn check_branching(&self) -> Result<(), String> {
        for n in 1..self.levels.len() {
            let (prev, cur) = (&self.levels[n - 1], &self.levels[n]);
            if cur.ell == prev.ell {
                if cur.strings != prev.strings {
                    return Err(format!("level {n} repeats the length but not the strings"));
                }
                continue;
            }
            for tau in &prev.strings {
                let ext = cur.strings.iter().filter(|s| tau.is_prefix_of(s)).count();
                if ext != 2 {
                    return Err(format!("level {n}: {tau:?} has {ext} extensions"));
                }
            }
            if cur.strings.len() != 2 * prev.strings.len() {
                return Err(format!("level {n} has strings outside the previous level"));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, l) in self.levels.iter().enumerate() {
            out.push_str(&format!("set {n} {}:\n", l.ell));
            for s in &l.strings {
                out.push_str(&s.to_bit_text());
                out.push('\n');
            }
        }
        out
    }
}

/// Draw `ℓ_n` from `[0, 2^{q(n)})`, clamp it to `ℓ_{n−1}` if it is not larger,
/// and otherwise give every `τ ∈ F_{n−1}` two distinct random extensions.
pub fn sample_perfect_tree_step(
    state: &mut TreeSamplerState,
    oracle: &mut OracleStream,
    schedule: &Schedule,
) -> Result<(), ConstructionError> {
    let n = state.levels.len();
    let q = schedule
        .bits(n)
        .ok_or_else(|| ConstructionError::Guard(format!("schedule has no entry for level {n}")))?;
    if q > MAX_SCHEDULE_BITS {
        return Err(ConstructionError::Guard(format!(
            "q({n}) = {q} exceeds the {MAX_SCHEDULE_BITS}-bit length budget"
        )));
    }
    let prev = state.levels.last().expect("base level");
    let drawn = oracle.draw(q as usize)?;
    if drawn <= prev.ell {
        let level = SamplerLevel {
            ell: prev.ell,
            drawn,
            strings: prev.strings.clone(),
        };
        state.levels.push(level);
        return Ok(());
    }
    let delta = (drawn - prev.ell) as usize;
    let mut strings = BTreeSet::new();
    for tau in &prev.strings {
        let a = oracle.draw_bits(delta)?;
        let b = loop {
            let b = oracle.draw_bits(delta)?;
            if b != a {
                break b;
            }
        };
        strings.insert(tau.concat(&a));
        strings.insert(tau.concat(&b));
    }
    state.levels.push(SamplerLevel {
        ell: drawn,
        drawn,
        strings,
    });
    Ok(())
}

/// Thresholds for the two bad events. With `q(n) = n²` these are
/// `K(Δ) ≤ n² − n/3` and `K(σ | τ) ≤ Δ + n² − 5n/3 + b`; a different schedule
/// substitutes `q(n)` for `n²`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionParams {
    pub b: i64,
    pub schedule: Schedule,
}

/// Evaluate conditions (a) and (b) at level `n ≥ 1`, comparing in thirds to
/// stay exact. `Δ = ℓ_n − ℓ_{n−1}`.
pub fn tree_condition_check(
    state: &TreeSamplerState,
    n: usize,
    params: &ConditionParams,
    machine: &ReferenceMachine,
) -> Result<(bool, bool), ConstructionError> {
    if n == 0 || n > state.top() {
        return Err(ConstructionError::Guard(format!("level {n} outside 1..={}", state.top())));
    }
    let q = params
        .schedule
        .bits(n)
        .ok_or_else(|| ConstructionError::Guard(format!("schedule has no entry for level {n}")))? as i64;
    let (prev, cur) = (&state.levels[n - 1], &state.levels[n]);
    let n3 = n as i64;
    let delta = cur.ell - prev.ell;
    let a = cur.ell <= prev.ell || 3 * machine.k_hat_nat(delta) as i64 <= 3 * q - n3;
    let bound = 3 * (delta as i64 + q + params.b) - 5 * n3;
    let b = cur.strings.iter().any(|sigma| {
        let tau = sigma.prefix(prev.ell as usize);
        machine
            .k_hat_cond(sigma, &tau)
            .is_some_and(|k| 3 * k as i64 <= bound)
    });
    Ok((a, b))
}
