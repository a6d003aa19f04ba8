use std::collections::BTreeMap;

use serde::Serialize;

use crate::bitcore::{BitString, Dyadic};
use crate::functional::{FunctionalError, NumericFunctional, TotalFunctional};
use crate::machine::ReferenceMachine;

use super::{
    check_functional, exceeds_pow2, palette_deficiencies, string_id, AdversaryError, AdversaryState, BoundRow,
};

/// Round `i`: `σ_i ∈ 2^{n_i}` is described at length `n_i − p_i − c − 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdAction {
    pub round: usize,
    pub n: usize,
    pub sigma: BitString,
    pub p: i64,
    pub codeword: BitString,
    /// `μ(Q^p_σ ∩ G)` when the round fired.
    pub measure_before: Dyadic,
    pub g_before: Dyadic,
    pub g_after: Dyadic,
}

#[derive(Clone, Debug)]
pub struct ThresholdRun {
    pub state: AdversaryState,
    pub log: Vec<ThresholdAction>,
    pub g_initial: Dyadic,
    pub g_final: Dyadic,
    pub rounds: usize,
    /// The last search found no violation.
    pub converged: bool,
}

/// Common evaluation depth of `Φ` and `Θ`.
fn joint_depth(phi: &TotalFunctional, theta: &NumericFunctional) -> Result<usize, AdversaryError> {
    if theta.horizon() < phi.horizon() {
        return Err(FunctionalError::Horizon {
            n: phi.horizon(),
            horizon: theta.horizon(),
        }
        .into());
    }
    Ok(phi.max_use().max(theta.max_use()))
}

/// Membership in `G = {x : d̂(Φ(x; n)) ≤ Θ(x; n) for all n}`, per `x ∈ 2^depth`.
fn g_members(phi: &TotalFunctional, theta: &NumericFunctional, machine: &ReferenceMachine, depth: usize) -> Vec<bool> {
    let defs = palette_deficiencies(phi, machine);
    (0..1u64 << depth)
        .map(|x| {
            (0..=phi.horizon()).all(|n| match defs[n][phi.choice_at_depth(n, depth, x) as usize] {
                None => true,
                Some(d) => d <= *theta.output_at_depth(n, depth, x),
            })
        })
        .collect()
}

/// `|Q^p_σ ∩ G|` in units of `2^{-depth}`, keyed by `(id(σ), p)`.
fn class_counts(phi: &TotalFunctional, theta: &NumericFunctional, g: &[bool], depth: usize) -> BTreeMap<(usize, i64), u64> {
    let mut counts = BTreeMap::new();
    for (x, _) in g.iter().enumerate().filter(|(_, &inside)| inside) {
        for n in 0..=phi.horizon() {
            let p = *theta.output_at_depth(n, depth, x as u64);
            for sigma in phi.output_at_depth(n, depth, x as u64) {
                let id = string_id(n, sigma.to_u64().expect("short output"));
                *counts.entry((id, p)).or_default() += 1;
            }
        }
    }
    counts
}

fn measure(g: &[bool], depth: usize) -> Dyadic {
    Dyadic::scaled(g.iter().filter(|&&b| b).count() as u64, depth as u64)
}

/// Rounds of the threshold adversary, at most `budget` of them.
///
/// Each round searches the least `(n, σ, p)` with `p ≤ n − c − 2` and
/// `μ(Q^p_σ ∩ G) > 2^{c+2+p−n}` and registers a description of `σ` of length
/// `n − p − c − 1`. Registration is immediate, so the wait for `K̂` to catch up
/// is empty.
pub fn run_threshold_adversary(
    phi: &TotalFunctional,
    theta: &NumericFunctional,
    machine: ReferenceMachine,
    budget: usize,
) -> Result<ThresholdRun, AdversaryError> {
    let depth = joint_depth(phi, theta)?;
    check_functional(phi, depth)?;
    let mut state = AdversaryState::new(machine);
    let c = state.c as i64;
    let mut g = g_members(phi, theta, &state.machine, depth);
    let g_initial = measure(&g, depth);
    let mut log = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    while rounds < budget {
        let counts = class_counts(phi, theta, &g, depth);
        let found = counts.iter().find(|(&(id, p), &count)| {
            let n = super::id_string(id).len() as i64;
            p <= n - c - 2 && exceeds_pow2(count, depth as i64 + c + 2 + p - n)
        });
        let Some((&(id, p), &count)) = found else {
            converged = true;
            break;
        };
        let sigma = super::id_string(id);
        let n = sigma.len();
        let len = n as i64 - p - c - 1;
        let codeword = state.describe(len as usize, sigma.clone(), rounds)?;
        let g_before = measure(&g, depth);
        g = g_members(phi, theta, &state.machine, depth);
        log.push(ThresholdAction {
            round: rounds,
            n,
            sigma,
            p,
            codeword,
            measure_before: Dyadic::scaled(count, depth as u64),
            g_before,
            g_after: measure(&g, depth),
        });
        rounds += 1;
    }
    if rounds == budget && !converged && budget > 0 {
        let counts = class_counts(phi, theta, &g, depth);
        converged = !counts.iter().any(|(&(id, p), &count)| {
            let n = super::id_string(id).len() as i64;
            p <= n - c - 2 && exceeds_pow2(count, depth as i64 + c + 2 + p - n)
        });
    }
    Ok(ThresholdRun {
        g_final: measure(&g, depth),
        state,
        log,
        g_initial,
        rounds,
        converged,
    })
}

/// `μ(Q^p_σ ∩ G)` at the given machine for all nonempty classes, against
/// `2^{lemma_c+p−n}`; computed directly from the outputs.
pub fn threshold_bound_rows(
    phi: &TotalFunctional,
    theta: &NumericFunctional,
    machine: &ReferenceMachine,
    lemma_c: i64,
) -> Result<Vec<BoundRow>, AdversaryError> {
    let depth = joint_depth(phi, theta)?;
    let mut counts: BTreeMap<(usize, BitString, i64), u64> = BTreeMap::new();
    for x in BitString::all_of_length(depth) {
        let inside = (0..=phi.horizon()).all(|n| {
            let out = phi.output(n, &x).expect("within use");
            machine
                .set_deficiency(out.iter())
                .is_none_or(|d| d <= *theta.output(n, &x).expect("within use"))
        });
        if !inside {
            continue;
        }
        for n in 0..=phi.horizon() {
            let p = *theta.output(n, &x).expect("within use");
            for sigma in phi.output(n, &x).expect("within use") {
                *counts.entry((n, sigma.clone(), p)).or_default() += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|((n, sigma, p), count)| {
            let measure = Dyadic::scaled(count, depth as u64);
            let bound = Dyadic::pow2(lemma_c + p - n as i64);
            BoundRow {
                sigma,
                k: p,
                ok: measure <= bound,
                measure,
                bound,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdReport {
    pub converged: bool,
    pub actions: usize,
    /// `c + 2` for the machine constant `c`: the constant of the final bound.
    pub lemma_c: i64,
    pub rows: Vec<BoundRow>,
    pub weight: Dyadic,
    pub g_initial: Dyadic,
    pub g_final: Dyadic,
    /// `weight ≤ 1/2 + μ(G)/2`.
    pub weight_ok: bool,
    /// `weight ≤ (μ(G_initial) − μ(G_final)) / 2`: every round removes at
    /// least twice its cost from `G`.
    pub accounting_ok: bool,
}

impl ThresholdReport {
    pub fn all_ok(&self) -> bool {
        self.converged && self.weight_ok && self.accounting_ok && self.rows.iter().all(|r| r.ok)
    }
}

impl ThresholdRun {
    pub fn lemma_c(&self) -> i64 {
        self.state.c as i64 + 2
    }

    pub fn report(&self, phi: &TotalFunctional, theta: &NumericFunctional) -> Result<ThresholdReport, AdversaryError> {
        let lemma_c = self.lemma_c();
        let rows = threshold_bound_rows(phi, theta, &self.state.machine, lemma_c)?;
        let weight = self.state.allocator.weight().clone();
        let half = Dyadic::pow2(-1);
        let removed = self.g_initial.saturating_sub(&self.g_final);
        Ok(ThresholdReport {
            converged: self.converged,
            actions: self.log.len(),
            lemma_c,
            rows,
            weight_ok: weight <= &half + &self.g_final.half(),
            accounting_ok: weight <= removed.half(),
            weight,
            g_initial: self.g_initial.clone(),
            g_final: self.g_final.clone(),
        })
    }
}
