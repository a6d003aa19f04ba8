use std::collections::BTreeSet;

use serde::Serialize;

use crate::bitcore::BitString;
use crate::functional::{DecisionTable, TotalFunctional, MAX_USE};
use crate::machine::ReferenceMachine;
use crate::order::OrderTable;
use crate::trees::PrunedTree;

use super::ConstructionError;

/// An order with `g(0) = 0` and steps of at most one, with its free positions
/// `A = {f(i) : i ≥ 1}`, `f(i) = min{j : g(j) ≥ i}`. Positions are 1-indexed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShatterSpec {
    g: OrderTable,
    free: Vec<usize>,
}

impl ShatterSpec {
    pub fn new(g: OrderTable) -> Result<Self, ConstructionError> {
        if g.is_empty() {
            return Err(ConstructionError::BadOrder("empty table".into()));
        }
        if g.get(0) != Some(0) {
            return Err(ConstructionError::BadOrder(format!("g(0) = {}, expected 0", g.values()[0])));
        }
        if let Some(n) = g.first_decrease() {
            return Err(ConstructionError::BadOrder(format!("g decreases after {n}")));
        }
        if let Some(n) = g.first_jump() {
            return Err(ConstructionError::BadOrder(format!("g({}) > g({n}) + 1", n + 1)));
        }
        let top = *g.values().last().expect("nonempty");
        let free = (1..=top)
            .map(|i| g.values().iter().position(|&v| v >= i).expect("reached"))
            .collect();
        Ok(ShatterSpec { g, free })
    }

    pub fn g(&self) -> &OrderTable {
        &self.g
    }

    /// `f(1) < f(2) < …` within the table.
    pub fn free_positions(&self) -> &[usize] {
        &self.free
    }

    pub fn is_free(&self, position: usize) -> bool {
        self.free.binary_search(&position).is_ok()
    }

    pub fn depth(&self) -> usize {
        self.g.len() - 1
    }
}

/// Strings of length `n` agreeing with `x` at every position outside `A ∩ [1, n]`.
pub fn shattered_level(x: &BitString, spec: &ShatterSpec, n: usize) -> BTreeSet<BitString> {
    assert!(x.len() >= n && n <= spec.depth());
    let mut level = BTreeSet::from([BitString::empty()]);
    for pos in 1..=n {
        let bit = x.get(pos - 1);
        level = level
            .into_iter()
            .flat_map(|s| {
                if spec.is_free(pos) {
                    vec![s.child(false), s.child(true)]
                } else {
                    vec![s.child(bit)]
                }
            })
            .collect();
    }
    level
}

/// The pruned tree of reals agreeing with `x` off the free positions, to depth `big_n`.
pub fn shattered_tree(x: &BitString, g: &OrderTable, big_n: usize) -> Result<PrunedTree, ConstructionError> {
    let spec = ShatterSpec::new(g.clone())?;
    if x.len() < big_n {
        return Err(ConstructionError::Guard(format!("base prefix has {} < {big_n} bits", x.len())));
    }
    if spec.depth() < big_n {
        return Err(ConstructionError::BadOrder(format!("table ends at {} < {big_n}", spec.depth())));
    }
    let mut levels = vec![BTreeSet::from([BitString::empty()])];
    for pos in 1..=big_n {
        let prev = levels.last().expect("nonempty");
        let bit = x.get(pos - 1);
        let next = prev
            .iter()
            .flat_map(|s| {
                if spec.is_free(pos) {
                    vec![s.child(false), s.child(true)]
                } else {
                    vec![s.child(bit)]
                }
            })
            .collect();
        levels.push(next);
    }
    Ok(PrunedTree::from_levels(levels)?)
}

/// `Φ(x; n) = T_x ∩ 2^n` where `T_x` is the tree shattered from the oracle itself.
pub fn shattered_functional(g: &OrderTable, horizon: usize) -> Result<TotalFunctional, ConstructionError> {
    let spec = ShatterSpec::new(g.clone())?;
    if horizon > spec.depth() || horizon > MAX_USE {
        return Err(ConstructionError::Guard(format!("horizon {horizon} too deep")));
    }
    let tables = (0..=horizon)
        .map(|n| DecisionTable::from_fn(n, |x| shattered_level(x, &spec, n)))
        .collect();
    Ok(TotalFunctional::new("shattered-tree", tables))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transfer {
    /// `d̂(T ∩ 2^k)`.
    pub lhs: i64,
    /// `d̂(x↾k) + log₂|T ∩ 2^k|`.
    pub rhs: i64,
    /// `lhs − rhs`; the transfer inequality holds with constant `C` iff `slack ≤ C`.
    pub slack: i64,
}

/// Compare the deficiency of a level of a shattered tree with that of the base path.
pub fn deficiency_transfer_check(
    x: &BitString,
    t: &PrunedTree,
    k: usize,
    machine: &ReferenceMachine,
) -> Result<Transfer, ConstructionError> {
    let width = t.width(k);
    if width == 0 || !width.is_power_of_two() {
        return Err(ConstructionError::Guard(format!("level {k} has width {width}, not a power of two")));
    }
    let lhs = machine.set_deficiency(t.level(k)).expect("nonempty level");
    let rhs = machine.deficiency(&x.prefix(k)) + width.trailing_zeros() as i64;
    Ok(Transfer {
        lhs,
        rhs,
        slack: lhs - rhs,
    })
}
