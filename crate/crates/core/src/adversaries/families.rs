use serde::Serialize;

use crate::bitcore::{BitString, ClopenSet, Dyadic};
use crate::functional::{prefix_set, DecisionTable, NumericFunctional, TotalFunctional};
use crate::machine::ReferenceMachine;
use crate::order::OrderTable;

use super::{
    at_least_pow2, check_functional, max_deficiency, palette_deficiencies, run_threshold_adversary, tail_threshold,
    AdversaryError, OrderTail, ThresholdRun,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Solovay,
    Difference,
    MartinLof,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyMember {
    /// Which family the member belongs to, e.g. `V` or `Q`.
    pub name: String,
    pub index: Vec<i64>,
    pub set: ClopenSet,
    pub measure: Dyadic,
    pub bound: Dyadic,
    /// The bound is strict.
    pub strict: bool,
    pub ok: bool,
}

impl FamilyMember {
    pub fn new(name: &str, index: Vec<i64>, set: ClopenSet, bound: Dyadic, strict: bool) -> Self {
        let measure = set.measure();
        let ok = if strict { measure < bound } else { measure <= bound };
        FamilyMember {
            name: name.to_string(),
            index,
            set,
            measure,
            bound,
            strict,
            ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TestFamily {
    pub kind: FamilyKind,
    pub members: Vec<FamilyMember>,
    pub markers: Option<Vec<u64>>,
}

impl TestFamily {
    pub fn new(kind: FamilyKind) -> Self {
        TestFamily {
            kind,
            members: Vec::new(),
            markers: None,
        }
    }

    pub fn all_ok(&self) -> bool {
        self.members.iter().all(|m| m.ok)
    }

    pub fn member(&self, name: &str, index: &[i64]) -> Option<&FamilyMember> {
        self.members.iter().find(|m| m.name == name && m.index == index)
    }

    /// `Σ` of the member measures.
    pub fn total(&self) -> Dyadic {
        self.members.iter().map(|m| &m.measure).sum()
    }

    /// Recompute every measure from its generators and every verdict from the bound.
    pub fn verify(&self) -> Result<(), String> {
        for m in &self.members {
            let measure = m.set.measure();
            if measure != m.measure {
                return Err(format!("{}{:?}: stored {} but generators give {}", m.name, m.index, m.measure, measure));
            }
            let ok = if m.strict { measure < m.bound } else { measure <= m.bound };
            if ok != m.ok {
                return Err(format!("{}{:?}: verdict does not match the bound", m.name, m.index));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Leaves of the common refinement of `p` and `sets` inside `p`, each with the
/// number of sets covering it.
fn refine(
    node: BitString,
    p: &ClopenSet,
    p_full: bool,
    sets: &[ClopenSet],
    full: usize,
    partial: &[usize],
    out: &mut Vec<(BitString, usize)>,
) {
    let p_full = p_full || p.covers(&node);
    if !p_full && !p.meets(&node) {
        return;
    }
    let mut full = full;
    let mut keep = Vec::new();
    for &j in partial {
        if sets[j].covers(&node) {
            full += 1;
        } else if sets[j].meets(&node) {
            keep.push(j);
        }
    }
    if p_full && keep.is_empty() {
        out.push((node, full));
        return;
    }
    for bit in [false, true] {
        refine(node.child(bit), p, p_full, sets, full, &keep, out);
    }
}

/// `V_i = {x : |{j : x ∈ U_j}| > 2^{i+1}}` for `i ≤ i_max`, intersected with `P`,
/// each checked against `Σ_j μ(P ∩ U_j) · 2^{-(i+1)}`.
pub fn solovay_to_difference(p: &ClopenSet, u: &[ClopenSet], i_max: usize) -> TestFamily {
    let mut regions = Vec::new();
    let all: Vec<usize> = (0..u.len()).collect();
    refine(BitString::empty(), p, false, u, 0, &all, &mut regions);
    let total: Dyadic = u.iter().map(|s| s.intersection(p).measure()).sum();
    let mut family = TestFamily::new(FamilyKind::Difference);
    for i in 0..=i_max {
        let gens = regions
            .iter()
            .filter(|(_, count)| i + 1 < 63 && *count as u64 > 1u64 << (i + 1))
            .map(|(s, _)| s.clone());
        let set = ClopenSet::from_generators(gens);
        family
            .members
            .push(FamilyMember::new("V", vec![i as i64], set, total.shift(-(i as i64) - 1), false));
    }
    family
}

/// `Q = {x : d̂(Φ(x; n)) ≤ k₀ for all n}`, per `x ∈ 2^depth`.
fn q_members(phi: &TotalFunctional, machine: &ReferenceMachine, k0: i64, depth: usize) -> Vec<bool> {
    let defs = palette_deficiencies(phi, machine);
    max_deficiency(phi, &defs, phi.horizon(), depth)
        .into_iter()
        .map(|d| d.is_none_or(|d| d <= k0))
        .collect()
}

/// `K̂(k₀) + k₀ + 1 + c`: the constant with `Σ_{σ∈2^n} μ(Q_σ) ≤ 2^{const}` once
/// the deficiency adversary has converged with constant `c`.
pub fn width_constant(machine: &ReferenceMachine, c: u64, k0: u64) -> i64 {
    machine.k_hat_nat(k0) as i64 + k0 as i64 + 1 + c as i64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WidthBound {
    pub n: usize,
    pub m: i64,
    pub set: ClopenSet,
    pub measure: Dyadic,
    pub bound: Dyadic,
    pub ok: bool,
}

/// `μ(Q_n^m)` for `Q_n^m = {x ∈ Q : |Φ(x; n)| ≥ 2^m}` against `2^{c'−m}`,
/// `c' = K̂(k₀)+k₀+1+c`.
pub fn width_class_bound(
    phi: &TotalFunctional,
    machine: &ReferenceMachine,
    c: u64,
    k0: u64,
    n: usize,
    m: i64,
) -> Result<WidthBound, AdversaryError> {
    let depth = phi.max_use();
    check_functional(phi, depth)?;
    if n > phi.horizon() {
        return Err(AdversaryError::Params(format!("level {n} past the horizon {}", phi.horizon())));
    }
    let q = q_members(phi, machine, k0 as i64, depth);
    let hits = (0..1u64 << depth).filter(|&x| q[x as usize] && at_least_pow2(phi.output_at_depth(n, depth, x).len() as u64, m));
    let set = prefix_set(depth, hits);
    let measure = set.measure();
    let bound = Dyadic::pow2(width_constant(machine, c, k0) - m);
    Ok(WidthBound {
        n,
        m,
        ok: measure <= bound,
        set,
        measure,
        bound,
    })
}

/// `V_s = ⋃{G*_i : i ≤ s, n_i ≥ n_s}` for `s ≤ s_max`, where
/// `G*_i = {x ∈ Q : |Φ(x; i)| ≥ 2^{n_i + c'}}` and `c'` is the width constant.
/// Each `V_s` is checked against `2^{1−n_s}`. Past the horizon `Φ(x; i)` is
/// undefined and `G*_i` is empty.
pub fn build_ml_test(
    phi: &TotalFunctional,
    machine: &ReferenceMachine,
    c: u64,
    markers: &[u64],
    s_max: usize,
    k0: u64,
) -> Result<TestFamily, AdversaryError> {
    if markers.len() <= s_max {
        return Err(AdversaryError::Params(format!(
            "{} markers for stages 0..={s_max}",
            markers.len()
        )));
    }
    let markers = &markers[..=s_max];
    let mut sorted = markers.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        let first = markers.iter().position(|&v| v == w[0]).expect("present");
        let second = first + 1 + markers[first + 1..].iter().position(|&v| v == w[0]).expect("present");
        return Err(AdversaryError::RepeatedMarker {
            value: w[0],
            first,
            second,
        });
    }
    let depth = phi.max_use();
    check_functional(phi, depth)?;
    let q = q_members(phi, machine, k0 as i64, depth);
    let cw = width_constant(machine, c, k0);
    let g_star: Vec<ClopenSet> = markers
        .iter()
        .enumerate()
        .map(|(i, &ni)| {
            if i > phi.horizon() {
                return ClopenSet::empty();
            }
            let e = ni as i64 + cw;
            prefix_set(
                depth,
                (0..1u64 << depth).filter(|&x| q[x as usize] && at_least_pow2(phi.output_at_depth(i, depth, x).len() as u64, e)),
            )
        })
        .collect();
    let mut family = TestFamily::new(FamilyKind::MartinLof);
    family.markers = Some(markers.to_vec());
    for (s, &ns) in markers.iter().enumerate() {
        let mut v = ClopenSet::empty();
        for i in (0..=s).filter(|&i| markers[i] >= ns) {
            v = v.union(&g_star[i]);
        }
        family
            .members
            .push(FamilyMember::new("V", vec![s as i64], v, Dyadic::pow2(1 - ns as i64), false));
    }
    Ok(family)
}

/// How the threshold `Θ` and the classes `Q_n^p` are set up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WidthMode {
    /// `Θ(n) = h(n)`; `Q_n^p = {x ∈ G : Ψ(x;n) ≥ p, |Φ(x;n)| ≥ 2^{Ψ(x;n)+h(n)}}`.
    ComputableH {
        h: OrderTable,
        psi: NumericFunctional,
        p_max: i64,
    },
    /// `Θ(x;n) = ⌊log₂ W(n)⌋ − Ψ(x;n)`; `Q_n^p = {x ∈ G : Ψ(x;n) ≥ p, |Φ(x;n)| = W(n)}`.
    ComputableWidth {
        width: Vec<u64>,
        psi: NumericFunctional,
        p_max: i64,
    },
    /// `Θ(x;n) = L − g(L)` with `L = ⌊log₂|Φ(x;n)|⌋`; `Q_n^p = {x ∈ G : L = p}` and
    /// `E_n^k = ⋃_{p ≥ h(k)} Q_n^p`.
    TailSum { g: OrderTail, k_max: u64 },
}

#[derive(Clone, Debug)]
pub struct WidthFamily {
    pub run: ThresholdRun,
    pub theta: NumericFunctional,
    /// The constant in the per-mode bounds.
    pub c: i64,
    /// `h(k)` for `k ≤ k_max` in tail-sum mode.
    pub thresholds: Vec<usize>,
    pub family: TestFamily,
}

fn floor_log2(v: u64) -> i64 {
    63 - v.leading_zeros() as i64
}

/// Run the threshold adversary for the mode's `Θ`, then build and check the
/// mode's classes at the final machine.
///
/// The lemma constant is `c_M + 2`. Computable-width mode sums the lemma over
/// every value `Ψ ≥ p`, which costs one more bit.
pub fn width_deficiency_family(
    phi: &TotalFunctional,
    mode: &WidthMode,
    machine: ReferenceMachine,
    budget: usize,
) -> Result<WidthFamily, AdversaryError> {
    let top = phi.horizon();
    let theta = match mode {
        WidthMode::ComputableH { h, psi, .. } => {
            if h.len() <= top || psi.horizon() < top {
                return Err(AdversaryError::Params("h and Ψ must cover the horizon".into()));
            }
            NumericFunctional::new(
                "theta-h",
                (0..=top).map(|n| DecisionTable::constant(h.values()[n] as i64)).collect(),
            )
        }
        WidthMode::ComputableWidth { width, psi, .. } => {
            if width.len() <= top || psi.horizon() < top {
                return Err(AdversaryError::Params("the width table and Ψ must cover the horizon".into()));
            }
            if let Some(n) = (0..=top).find(|&n| width[n] == 0 || (n < 64 && width[n] > 1u64 << n)) {
                return Err(AdversaryError::Params(format!("width {} at level {n} is not in [1, 2^n]", width[n])));
            }
            psi.map("theta-width", |n, &v| floor_log2(width[n]) - v)
        }
        WidthMode::TailSum { g, .. } => {
            if g.len() <= top {
                return Err(AdversaryError::Params("g must cover every log-width up to the horizon".into()));
            }
            phi.map("theta-tail", |_, out| {
                if out.is_empty() {
                    0
                } else {
                    let l = floor_log2(out.len() as u64);
                    l - g.values()[l as usize] as i64
                }
            })
        }
    };
    let run = run_threshold_adversary(phi, &theta, machine, budget)?;
    let m = &run.state.machine;
    let depth = phi.max_use().max(theta.max_use());
    let lemma_c = run.lemma_c();
    let defs = palette_deficiencies(phi, m);
    let in_g: Vec<bool> = (0..1u64 << depth)
        .map(|x| {
            (0..=top).all(|n| {
                defs[n][phi.choice_at_depth(n, depth, x) as usize].is_none_or(|d| d <= *theta.output_at_depth(n, depth, x))
            })
        })
        .collect();
    let class = |pred: &dyn Fn(u64) -> bool| prefix_set(depth, (0..1u64 << depth).filter(|&x| in_g[x as usize] && pred(x)));
    let mut family = TestFamily::new(FamilyKind::Difference);
    let mut thresholds = Vec::new();
    let c = match mode {
        WidthMode::ComputableH { h, psi, p_max } => {
            for n in 0..=top {
                let hn = h.values()[n] as i64;
                for p in 0..=*p_max {
                    let set = class(&|x| {
                        let v = *psi.output_at_depth(n, depth, x);
                        v >= p && at_least_pow2(phi.output_at_depth(n, depth, x).len() as u64, v + hn)
                    });
                    family
                        .members
                        .push(FamilyMember::new("Q", vec![n as i64, p], set, Dyadic::pow2(lemma_c - p), false));
                }
            }
            lemma_c
        }
        WidthMode::ComputableWidth { width, psi, p_max } => {
            let c = lemma_c + 1;
            for n in 0..=top {
                for p in 0..=*p_max {
                    let set = class(&|x| {
                        *psi.output_at_depth(n, depth, x) >= p && phi.output_at_depth(n, depth, x).len() as u64 == width[n]
                    });
                    family
                        .members
                        .push(FamilyMember::new("Q", vec![n as i64, p], set, Dyadic::pow2(c - p), false));
                }
            }
            c
        }
        WidthMode::TailSum { g, k_max } => {
            for k in 0..=*k_max {
                thresholds.push(tail_threshold(g, k, lemma_c)?);
            }
            let width_log = |n: usize, x: u64| {
                let w = phi.output_at_depth(n, depth, x).len() as u64;
                (w > 0).then(|| floor_log2(w))
            };
            for n in 0..=top {
                for p in 0..=n as i64 {
                    let set = class(&|x| width_log(n, x) == Some(p));
                    let bound = Dyadic::pow2(lemma_c - g.values()[p as usize] as i64);
                    family.members.push(FamilyMember::new("Q", vec![n as i64, p], set, bound, false));
                }
                for (k, &hk) in thresholds.iter().enumerate() {
                    let set = class(&|x| width_log(n, x).is_some_and(|l| l >= hk as i64));
                    family
                        .members
                        .push(FamilyMember::new("E", vec![n as i64, k as i64], set, Dyadic::pow2(-(k as i64)), true));
                }
            }
            lemma_c
        }
    };
    Ok(WidthFamily {
        run,
        theta,
        c,
        thresholds,
        family,
    })
}
