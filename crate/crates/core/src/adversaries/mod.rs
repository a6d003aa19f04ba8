//! Compression adversaries against bounded-use functionals, and the test
//! families built from their guarantees.
//!
//! A functional is evaluated on all `2^U` oracle prefixes at its common use
//! depth `U`, so every class below is an explicit clopen set with an exact
//! measure. The adversaries enlarge the reference machine through a freshly
//! registered codebook whose codewords come from a [`KclAllocator`].

mod deficiency;
mod families;
mod markers;
mod tail;
mod threshold;

use serde::Serialize;

use crate::bitcore::{BitString, Dyadic};
use crate::functional::{FunctionalError, TotalFunctional, MAX_USE};
use crate::kcl::{KclAllocator, KclError};
use crate::machine::{sub_constant, MachineError, PrefixFreeCodebook, ReferenceMachine};

pub use crate::functional::{preimage_measure, NumericFunctional};
pub use deficiency::{
    deficiency_bound_rows, run_deficiency_adversary, BoundRow, DeficiencyAction, DeficiencyReport, DeficiencyRun,
    KWeight,
};
pub use families::{
    build_ml_test, solovay_to_difference, width_class_bound, width_constant, width_deficiency_family, FamilyKind,
    FamilyMember, TestFamily, WidthBound, WidthFamily, WidthMode,
};
pub use markers::{halting_markers, marker_sequence, parse_markers, MarkerSource};
pub use tail::{tail_threshold, OrderTail};
pub use threshold::{threshold_bound_rows, run_threshold_adversary, ThresholdAction, ThresholdReport, ThresholdRun};

/// Deepest parameter the adversaries scan.
pub const ADVERSARY_MAX_HORIZON: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum AdversaryError {
    #[error("KCL allocator overflow at stage {stage}: {source}")]
    Kcl {
        stage: usize,
        #[source]
        source: KclError,
    },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("guard: {0}")]
    Guard(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("tail of the order is not certified by a table of length {len}: {msg}")]
    TailTooShort { len: usize, msg: String },
    #[error("marker {value} repeats (positions {first} and {second})")]
    RepeatedMarker { value: u64, first: usize, second: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The machine being built, its constant and the allocator behind it.
///
/// The codebook is registered only when the first codeword is issued, so a run
/// without actions leaves the machine untouched. Its index, and hence `c`, is
/// fixed up front.
#[derive(Clone, Debug)]
pub struct AdversaryState {
    pub machine: ReferenceMachine,
    pub machine_id: usize,
    pub c: u64,
    pub allocator: KclAllocator,
    registered: bool,
}

impl AdversaryState {
    pub fn new(machine: ReferenceMachine) -> Self {
        let machine_id = machine.machine_count();
        AdversaryState {
            c: sub_constant(machine_id),
            machine,
            machine_id,
            allocator: KclAllocator::new(),
            registered: false,
        }
    }

    pub fn registered(&self) -> bool {
        self.registered
    }

    /// Request a codeword of length `len` for `sigma` and register it at once.
    pub(crate) fn describe(&mut self, len: usize, sigma: BitString, stage: usize) -> Result<BitString, AdversaryError> {
        let cw = self
            .allocator
            .request(len, sigma.clone())
            .map_err(|source| AdversaryError::Kcl { stage, source })?;
        if !self.registered {
            let (id, _) = self.machine.register_machine(PrefixFreeCodebook::new())?;
            debug_assert_eq!(id, self.machine_id);
            self.registered = true;
        }
        self.machine.extend(self.machine_id, cw.clone(), sigma)?;
        Ok(cw)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StateSummary {
    pub machine_id: usize,
    pub c: u64,
    pub weight: Dyadic,
    pub issued: usize,
}

impl From<&AdversaryState> for StateSummary {
    fn from(s: &AdversaryState) -> Self {
        StateSummary {
            machine_id: s.machine_id,
            c: s.c,
            weight: s.allocator.weight().clone(),
            issued: s.allocator.issued().len(),
        }
    }
}

/// `count > 2^e` for a nonnegative integer count.
pub(crate) fn exceeds_pow2(count: u64, e: i64) -> bool {
    if e < 0 {
        count >= 1
    } else if e >= 63 {
        false
    } else {
        count > 1u64 << e
    }
}

/// `count ≥ 2^e`.
pub(crate) fn at_least_pow2(count: u64, e: i64) -> bool {
    if e <= 0 {
        count >= 1
    } else if e >= 63 {
        false
    } else {
        count >= 1u64 << e
    }
}

/// Index of `σ ∈ 2^n` with value `v` in length-lexicographic order.
pub(crate) fn string_id(n: usize, v: u64) -> usize {
    (1usize << n) - 1 + v as usize
}

pub(crate) fn id_string(id: usize) -> BitString {
    let n = (usize::BITS - (id + 1).leading_zeros() - 1) as usize;
    BitString::from_value((id + 1 - (1usize << n)) as u64, n)
}

/// Set deficiencies of every palette entry, `None` for empty outputs.
pub(crate) fn palette_deficiencies(phi: &TotalFunctional, machine: &ReferenceMachine) -> Vec<Vec<Option<i64>>> {
    phi.tables()
        .iter()
        .map(|t| t.palette().iter().map(|s| machine.set_deficiency(s)).collect())
        .collect()
}

/// String ids of every palette entry.
pub(crate) fn palette_ids(phi: &TotalFunctional) -> Vec<Vec<Vec<usize>>> {
    phi.tables()
        .iter()
        .enumerate()
        .map(|(n, t)| {
            t.palette()
                .iter()
                .map(|s| s.iter().map(|x| string_id(n, x.to_u64().expect("short output"))).collect())
                .collect()
        })
        .collect()
}

/// `max_{n ≤ t} d̂(Φ(x; n))` for every `x ∈ 2^depth`; `None` if all outputs are empty.
pub(crate) fn max_deficiency(phi: &TotalFunctional, defs: &[Vec<Option<i64>>], t: usize, depth: usize) -> Vec<Option<i64>> {
    (0..1u64 << depth)
        .map(|x| {
            (0..=t)
                .filter_map(|n| defs[n][phi.choice_at_depth(n, depth, x) as usize])
                .max()
        })
        .collect()
}

pub(crate) fn check_functional(phi: &TotalFunctional, depth: usize) -> Result<(), AdversaryError> {
    phi.validate()?;
    if phi.horizon() > ADVERSARY_MAX_HORIZON {
        return Err(AdversaryError::Guard(format!(
            "horizon {} above {ADVERSARY_MAX_HORIZON}",
            phi.horizon()
        )));
    }
    if depth > MAX_USE {
        return Err(FunctionalError::UseBound {
            n: phi.horizon(),
            used: depth,
            max: MAX_USE,
        }
        .into());
    }
    Ok(())
}
