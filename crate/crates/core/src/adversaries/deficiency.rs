use std::collections::BTreeMap;

use serde::Serialize;

use crate::bitcore::{BitString, ClopenSet, Dyadic};
use crate::functional::{prefix_set, TotalFunctional};
use crate::machine::ReferenceMachine;

use super::{
    check_functional, exceeds_pow2, id_string, max_deficiency, palette_deficiencies, palette_ids, AdversaryError,
    AdversaryState,
};

/// One action `(s, σ)_k`: `σ` gets a description making `d̂(σ) ≥ k + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeficiencyAction {
    pub stage: usize,
    pub sigma: BitString,
    pub k: u64,
    pub codeword: BitString,
    /// `μ(P^k_σ(s))` when the action was taken.
    pub measure_before: Dyadic,
    /// The same class recomputed right after registration.
    pub measure_after: Dyadic,
    /// `P^k_σ(s)`, removed from `P^k` for good.
    pub removed: ClopenSet,
}

#[derive(Clone, Debug)]
pub struct DeficiencyRun {
    pub state: AdversaryState,
    pub log: Vec<DeficiencyAction>,
    pub k_max: u64,
    /// Stages executed.
    pub stages: usize,
    /// A stage at or past the horizon found nothing to do.
    pub converged: bool,
}

/// Bucket of an oracle prefix: the least `k` with `x ∈ P^k`.
fn bucket(d: Option<i64>) -> u64 {
    d.map_or(0, |d| d.max(0) as u64)
}

/// Counts `|P^k_σ(s)|` (in units of `2^{-depth}`) for all `σ ∈ 2^{≤t}` and `k ≤ kk`,
/// laid out as `ids × (kk + 1)`, cumulative in `k`.
fn class_counts(phi: &TotalFunctional, ids: &[Vec<Vec<usize>>], prof: &[Option<i64>], t: usize, depth: usize, kk: u64) -> Vec<u64> {
    let w = kk as usize + 1;
    let mut counts = vec![0u64; ((2usize << t) - 1) * w];
    for (x, &d) in prof.iter().enumerate() {
        let b = bucket(d);
        if b > kk {
            continue;
        }
        for (n, ids_n) in ids.iter().enumerate().take(t + 1) {
            for &id in &ids_n[phi.choice_at_depth(n, depth, x as u64) as usize] {
                counts[id * w + b as usize] += 1;
            }
        }
    }
    for row in counts.chunks_mut(w) {
        for k in 1..w {
            row[k] += row[k - 1];
        }
    }
    counts
}

/// Run the stage loop for up to `budget` stages.
///
/// Stage `s` looks at `P^k(s) = {x : d̂(Φ(x; n)) ≤ k for n ≤ s}` and acts on the
/// least `σ ∈ 2^{≤s}` (length-lexicographic), then least `k ≤ min(s, k_max)`,
/// with `μ(P^k_σ(s)) > 2^{K̂(k)+k+1+c−|σ|}`, issuing a description of length
/// `|σ| − k − 1 − c`. The loop stops once a stage at or beyond the horizon is idle.
pub fn run_deficiency_adversary(
    phi: &TotalFunctional,
    machine: ReferenceMachine,
    k_max: u64,
    budget: usize,
) -> Result<DeficiencyRun, AdversaryError> {
    let depth = phi.max_use();
    check_functional(phi, depth)?;
    let top = phi.horizon();
    let ids = palette_ids(phi);
    let mut state = AdversaryState::new(machine);
    let c = state.c as i64;
    let mut log = Vec::new();
    let mut stages = 0;
    let mut converged = false;
    for s in 0..budget {
        stages = s + 1;
        let t = s.min(top);
        let kk = (s as u64).min(k_max);
        let defs = palette_deficiencies(phi, &state.machine);
        let prof = max_deficiency(phi, &defs, t, depth);
        let counts = class_counts(phi, &ids, &prof, t, depth, kk);
        let w = kk as usize + 1;
        let khat: Vec<i64> = (0..=kk).map(|k| state.machine.k_hat_nat(k) as i64).collect();
        let found = (0..(2usize << t) - 1).find_map(|id| {
            let n = id_string(id).len() as i64;
            (0..=kk).find(|&k| {
                let e = depth as i64 + khat[k as usize] + k as i64 + 1 + c - n;
                exceeds_pow2(counts[id * w + k as usize], e)
            })
            .map(|k| (id, k))
        });
        let Some((id, k)) = found else {
            if s >= top {
                converged = true;
                break;
            }
            continue;
        };
        let sigma = id_string(id);
        let n = sigma.len();
        let members: Vec<u64> = (0..1u64 << depth)
            .filter(|&x| {
                bucket(prof[x as usize]) <= k && phi.output_at_depth(n, depth, x).contains(&sigma)
            })
            .collect();
        let len = n as i64 - k as i64 - 1 - c;
        debug_assert!(len > 0);
        let codeword = state.describe(len as usize, sigma.clone(), s)?;
        let defs = palette_deficiencies(phi, &state.machine);
        let after_prof = max_deficiency(phi, &defs, t, depth);
        let after = members.iter().filter(|&&x| bucket(after_prof[x as usize]) <= k).count();
        log.push(DeficiencyAction {
            stage: s,
            sigma,
            k,
            codeword,
            measure_before: Dyadic::scaled(members.len() as u64, depth as u64),
            measure_after: Dyadic::scaled(after as u64, depth as u64),
            removed: prefix_set(depth, members),
        });
    }
    Ok(DeficiencyRun {
        state,
        log,
        k_max,
        stages,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundRow {
    pub sigma: BitString,
    /// `k` for the deficiency adversary, `p` for the threshold adversary.
    pub k: i64,
    pub measure: Dyadic,
    pub bound: Dyadic,
    pub ok: bool,
}

/// `μ(P^k_σ)` at the final machine for every `σ` with `|σ| ≤ len_max` and
/// `k ≤ k_max` where the class is nonempty, against `2^{K̂(k)+k+1+c−|σ|}`.
///
/// Evaluated directly from the outputs, independently of the stage loop.
pub fn deficiency_bound_rows(
    phi: &TotalFunctional,
    machine: &ReferenceMachine,
    c: u64,
    len_max: usize,
    k_max: u64,
) -> Vec<BoundRow> {
    let depth = phi.max_use();
    let mut counts: BTreeMap<(usize, BitString, u64), u64> = BTreeMap::new();
    for x in BitString::all_of_length(depth) {
        let outputs: Vec<_> = (0..=phi.horizon()).map(|n| phi.output(n, &x).expect("within use")).collect();
        let m = outputs.iter().filter_map(|o| machine.set_deficiency(o.iter())).max();
        let lo = m.map_or(0, |m| m.max(0) as u64);
        for (n, out) in outputs.iter().enumerate().take(len_max + 1) {
            for sigma in out.iter() {
                for k in lo..=k_max {
                    *counts.entry((n, sigma.clone(), k)).or_default() += 1;
                }
            }
        }
    }
    counts
        .into_iter()
        .map(|((n, sigma, k), count)| {
            let measure = Dyadic::scaled(count, depth as u64);
            let bound = Dyadic::pow2(machine.k_hat_nat(k) as i64 + k as i64 + 1 + c as i64 - n as i64);
            BoundRow {
                sigma,
                k: k as i64,
                ok: measure <= bound,
                measure,
                bound,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KWeight {
    pub k: u64,
    /// Weight of the descriptions issued for actions with this `k`.
    pub weight: Dyadic,
    /// `2^{-K̂(k)}` at the final machine.
    pub bound: Dyadic,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeficiencyReport {
    pub converged: bool,
    pub actions: usize,
    pub c: u64,
    pub rows: Vec<BoundRow>,
    pub weight: Dyadic,
    /// `Σ_{k ≤ k_max} 2^{-K̂(k)}`.
    pub weight_bound: Dyadic,
    pub weight_ok: bool,
    pub per_k: Vec<KWeight>,
    pub disjoint_ok: bool,
}

impl DeficiencyReport {
    pub fn all_ok(&self) -> bool {
        self.converged
            && self.weight_ok
            && self.disjoint_ok
            && self.rows.iter().all(|r| r.ok)
            && self.per_k.iter().all(|w| w.ok)
    }
}

impl DeficiencyRun {
    /// Final bounds for `|σ| ≤ len_max`, `k ≤ k_check`, weight accounting and
    /// pairwise disjointness of the removed classes with equal `k`.
    pub fn report(&self, phi: &TotalFunctional, len_max: usize, k_check: u64) -> DeficiencyReport {
        let m = &self.state.machine;
        let rows = deficiency_bound_rows(phi, m, self.state.c, len_max, k_check);
        let mut per_k = Vec::new();
        let mut weight_bound = Dyadic::zero();
        for k in 0..=self.k_max {
            let bound = Dyadic::pow2(-(m.k_hat_nat(k) as i64));
            weight_bound += &bound;
            let weight: Dyadic = self
                .log
                .iter()
                .filter(|a| a.k == k)
                .map(|a| Dyadic::pow2(-(a.codeword.len() as i64)))
                .sum();
            per_k.push(KWeight {
                k,
                ok: weight <= bound,
                weight,
                bound,
            });
        }
        let mut disjoint_ok = true;
        for (i, a) in self.log.iter().enumerate() {
            for b in &self.log[i + 1..] {
                if a.k == b.k && !a.removed.is_disjoint(&b.removed) {
                    disjoint_ok = false;
                }
            }
        }
        let weight = self.state.allocator.weight().clone();
        DeficiencyReport {
            converged: self.converged,
            actions: self.log.len(),
            c: self.state.c,
            rows,
            weight_ok: weight <= weight_bound,
            weight,
            weight_bound,
            per_k,
            disjoint_ok,
        }
    }
}
