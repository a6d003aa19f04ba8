use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bitcore::{BitString, ClopenSet, Dyadic};
use crate::machine::{literal_len, ReferenceMachine};

use super::ClassError;

/// The depth-`max_len` approximation of `P_c = {x : d̂(ρ) < c for all ρ ≺ x}`
/// at a fixed machine state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcApprox {
    c: i64,
    max_len: usize,
    /// Every level is dead: already `d̂(λ) ≥ c`.
    all_dead: bool,
    /// Strings of length `≤ max_len` with `d̂ ≥ c`, sorted.
    bad: Vec<BitString>,
    bad_lengths: BTreeSet<usize>,
}

impl PcApprox {
    pub fn new(machine: &ReferenceMachine, c: i64, max_len: usize) -> Self {
        // Literal deficiency −1 − |γ(n+1)| is largest at n = 0.
        let all_dead = -(literal_len(0) as i64) >= c;
        let mut bad: Vec<BitString> = machine
            .compressed()
            .filter(|(s, _)| s.len() <= max_len && machine.deficiency(s) >= c)
            .map(|(s, _)| s.clone())
            .collect();
        bad.sort_unstable();
        let bad_lengths = bad.iter().map(|s| s.len()).collect();
        PcApprox {
            c,
            max_len,
            all_dead,
            bad,
            bad_lengths,
        }
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn bad_strings(&self) -> &[BitString] {
        &self.bad
    }

    /// Every `ρ ≼ σ` has `d̂(ρ) < c`.
    pub fn legal(&self, sigma: &BitString) -> bool {
        if self.all_dead {
            return false;
        }
        let i = self.bad.partition_point(|b| b <= sigma);
        // a bad prefix of σ sorts at or before σ
        !self.has_bad_prefix(sigma, i)
    }

    fn has_bad_prefix(&self, sigma: &BitString, upto: usize) -> bool {
        self.bad_lengths
            .range(..=sigma.len())
            .any(|&n| self.bad[..upto].binary_search(&sigma.prefix(n)).is_ok())
    }

    /// Bad strings strictly above `τ`.
    fn bad_above(&self, tau: &BitString) -> &[BitString] {
        let lo = self.bad.partition_point(|b| b <= tau);
        let hi = lo + self.bad[lo..].partition_point(|b| tau.is_prefix_of(b));
        &self.bad[lo..hi]
    }

    /// Whether some bad string lies strictly above `τ`.
    pub fn has_bad_above(&self, tau: &BitString) -> bool {
        !self.bad_above(tau).is_empty()
    }

    /// `μ_τ` of the depth-`max_len` approximation: the relative measure of the
    /// reals above `τ` whose prefixes of length `≤ max_len` are all legal.
    pub fn relative_measure(&self, tau: &BitString) -> Dyadic {
        if !self.legal(tau) {
            return Dyadic::zero();
        }
        let above = self.bad_above(tau);
        if above.is_empty() {
            return Dyadic::one();
        }
        let dead = ClopenSet::from_generators(above.iter().cloned()).relative_measure(tau);
        Dyadic::one().checked_sub(&dead).expect("relative measure is at most 1")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityExtension {
    pub extensions: BTreeMap<BitString, BitString>,
    pub measures: BTreeMap<BitString, Dyadic>,
    /// Every measure is strictly above `1 − 1/threshold_denominator`, the
    /// denominator being `2|Q|`.
    pub threshold_denominator: u64,
    /// `1 − Σ_σ (1 − μ_{τ_σ})`, a lower bound on the joint survivor measure.
    pub joint_lower: Dyadic,
    pub length: usize,
}

/// `m > 1 − 1/denominator`, i.e. `denominator · (1 − m) < 1`.
pub(crate) fn above_threshold(m: &Dyadic, denominator: u64) -> bool {
    Dyadic::one().checked_sub(m).is_some_and(|gap| gap.mul_int(denominator) < Dyadic::one())
}

/// The lexicographically least `τ ≽ σ` of length `len` with `μ_τ > threshold`.
fn first_dense(pc: &PcApprox, sigma: &BitString, len: usize, denominator: u64) -> Option<(BitString, Dyadic)> {
    if !pc.legal(sigma) {
        return None;
    }
    if !pc.has_bad_above(sigma) {
        let mut tau = sigma.clone();
        tau.extend_from(&BitString::zeros(len - sigma.len()));
        return Some((tau, Dyadic::one()));
    }
    if sigma.len() == len {
        let m = pc.relative_measure(sigma);
        return above_threshold(&m, denominator).then_some((sigma.clone(), m));
    }
    first_dense(pc, &sigma.child(false), len, denominator)
        .or_else(|| first_dense(pc, &sigma.child(true), len, denominator))
}

/// Same-length extensions `τ_σ ≻ σ` with `μ_{τ_σ}(P_c) > 1 − 1/(2|Q|)`, where
/// `P_c` is approximated to depth `depth`. Lengths are tried from `ℓ` upwards
/// and each `τ_σ` is the least candidate of the first length that works for every `σ`.
pub fn density_extension_search(
    q: &BTreeSet<BitString>,
    machine: &ReferenceMachine,
    c: i64,
    depth: usize,
) -> Result<DensityExtension, ClassError> {
    let pc = PcApprox::new(machine, c, depth);
    let sigmas: Vec<BitString> = q.iter().cloned().collect();
    let (length, found) = dense_extensions(&sigmas, &pc, depth)?;
    let mut loss = Dyadic::zero();
    for (_, m) in &found {
        loss += Dyadic::one().checked_sub(m).expect("at most 1");
    }
    let mut extensions = BTreeMap::new();
    let mut measures = BTreeMap::new();
    for (sigma, (tau, m)) in sigmas.into_iter().zip(found) {
        extensions.insert(sigma.clone(), tau);
        measures.insert(sigma, m);
    }
    Ok(DensityExtension {
        extensions,
        measures,
        threshold_denominator: 2 * q.len() as u64,
        joint_lower: Dyadic::one().saturating_sub(&loss),
        length,
    })
}

/// The common length and, in the order of `q`, each `(τ_σ, μ_{τ_σ})`.
pub(crate) fn dense_extensions(
    q: &[BitString],
    pc: &PcApprox,
    depth: usize,
) -> Result<(usize, Vec<(BitString, Dyadic)>), ClassError> {
    let Some(first) = q.first() else {
        return Err(ClassError::Params("Q is empty".into()));
    };
    let ell = first.len();
    if let Some(s) = q.iter().find(|s| s.len() != ell) {
        return Err(ClassError::Params(format!("{s} is not of length {ell}")));
    }
    if ell > depth {
        return Err(ClassError::Params(format!("strings of length {ell} exceed the depth {depth}")));
    }
    let denominator = 2 * q.len() as u64;
    let mut stuck = first.clone();
    'lengths: for len in ell..=depth {
        let mut found = Vec::with_capacity(q.len());
        for sigma in q {
            match first_dense(pc, sigma, len, denominator) {
                Some(hit) => found.push(hit),
                None => {
                    stuck = sigma.clone();
                    continue 'lengths;
                }
            }
        }
        return Ok((len, found));
    }
    Err(ClassError::NoExtension { sigma: stuck, depth })
}
