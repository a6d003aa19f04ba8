//! The reference machine: literal coding plus registered finite codebooks.
//!
//! Program layout:
//!
//! * `0 · γ(|σ|+1) · σ` prints `σ` (literal branch);
//! * `1 · γ(i+1) · w` runs registered codebook `i` on codeword `w`.
//!
//! `γ` is the Elias gamma code. Registered machine `i` therefore costs exactly
//! `c_i = 1 + |γ(i+1)|` extra bits, which is the constant in `K̂ ≤ K̂_M + c`.

mod codebook;
mod conditional;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::bitcore::{elias_gamma_decode, elias_gamma_len, encode_natural, BitString, Dyadic};

pub use codebook::PrefixFreeCodebook;
pub use conditional::ConditionalCoder;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error("codeword {codeword} is comparable with existing codeword {clashes_with}")]
    NotPrefixFree {
        codeword: BitString,
        clashes_with: BitString,
    },
    #[error("codebook weight would become {0}, above 1")]
    WeightExceeded(Dyadic),
    #[error("no registered machine with index {0}")]
    UnknownMachine(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("machine state: {0}")]
    State(String),
}

/// Length of the literal program for any string of length `n`.
pub fn literal_len(n: usize) -> u64 {
    1 + elias_gamma_len(n as u64 + 1) as u64 + n as u64
}

/// Prefix `1 · γ(i+1)` selecting registered machine `i`.
pub fn sub_prefix(i: usize) -> BitString {
    BitString::from_value(1, 1).concat(&encode_natural(i as u64))
}

pub fn sub_constant(i: usize) -> u64 {
    1 + elias_gamma_len(i as u64 + 1) as u64
}

/// Outcome of feeding a finite bit string to the machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Run {
    /// The first `used` bits form a program printing `output`.
    Halted { output: BitString, used: usize },
    /// No prefix is a program, but some extension is.
    NeedMore,
    /// No extension is a program.
    Invalid,
}

#[derive(Clone, Debug, Default)]
pub struct ReferenceMachine {
    machines: Vec<PrefixFreeCodebook>,
    best: HashMap<BitString, u64>,
    mass: HashMap<BitString, Dyadic>,
    conditional: ConditionalCoder,
}

impl ReferenceMachine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    pub fn codebook(&self, id: usize) -> Option<&PrefixFreeCodebook> {
        self.machines.get(id)
    }

    pub fn conditional(&self) -> &ConditionalCoder {
        &self.conditional
    }

    pub fn conditional_mut(&mut self) -> &mut ConditionalCoder {
        &mut self.conditional
    }

    /// Total number of registered (unconditional) entries.
    pub fn entry_count(&self) -> usize {
        self.machines.iter().map(|m| m.len()).sum()
    }

    /// Register a codebook under the next free sub-prefix. Returns its index and constant.
    pub fn register_machine(&mut self, codebook: PrefixFreeCodebook) -> Result<(usize, u64), MachineError> {
        if codebook.weight() > &Dyadic::one() {
            return Err(MachineError::WeightExceeded(codebook.weight().clone()));
        }
        let id = self.machines.len();
        self.machines.push(PrefixFreeCodebook::new());
        for (cw, out) in codebook.entries() {
            self.extend(id, cw.clone(), out.clone()).expect("validated codebook");
        }
        Ok((id, sub_constant(id)))
    }

    /// Add one entry to registered machine `id`.
    pub fn extend(&mut self, id: usize, cw: BitString, out: BitString) -> Result<(), MachineError> {
        let c = sub_constant(id);
        let cb = self.machines.get_mut(id).ok_or(MachineError::UnknownMachine(id))?;
        let len = c + cw.len() as u64;
        cb.insert(cw, out.clone())?;
        let best = self.best.entry(out.clone()).or_insert(u64::MAX);
        *best = (*best).min(len);
        *self.mass.entry(out).or_default() += Dyadic::pow2(-(len as i64));
        Ok(())
    }

    /// Register a one-entry machine compressing `sigma` to `cw`.
    pub fn register_single(&mut self, cw: BitString, sigma: BitString) -> Result<(usize, u64), MachineError> {
        self.register_machine(PrefixFreeCodebook::from_entries([(cw, sigma)])?)
    }

    pub fn k_hat(&self, sigma: &BitString) -> u64 {
        let lit = literal_len(sigma.len());
        self.best.get(sigma).map_or(lit, |&b| b.min(lit))
    }

    /// Stage-`s` approximation: programs halt as soon as they are read, so at
    /// stage `s` exactly the programs of length `≤ s` have converged.
    pub fn k_hat_at(&self, sigma: &BitString, stage: u64) -> Option<u64> {
        Some(self.k_hat(sigma)).filter(|&k| k <= stage)
    }

    /// `K̂` of the natural number `k`, via the length-lexicographic rank bijection.
    pub fn k_hat_nat(&self, k: u64) -> u64 {
        self.k_hat(&BitString::from_natural(k))
    }

    pub fn k_hat_cond(&self, sigma: &BitString, tau: &BitString) -> Option<u64> {
        self.conditional.k_hat_cond(sigma, tau)
    }

    pub fn deficiency(&self, sigma: &BitString) -> i64 {
        sigma.len() as i64 - self.k_hat(sigma) as i64
    }

    /// Maximum deficiency of a set; `None` stands for the supremum of the empty set.
    pub fn set_deficiency<'a, I>(&self, strings: I) -> Option<i64>
    where
        I: IntoIterator<Item = &'a BitString>,
    {
        strings.into_iter().map(|s| self.deficiency(s)).max()
    }

    pub fn deficiency_profile(&self, levels: &[BTreeSet<BitString>]) -> Vec<Option<i64>> {
        levels.iter().map(|l| self.set_deficiency(l)).collect()
    }

    pub fn m_hat(&self, sigma: &BitString) -> Dyadic {
        let lit = Dyadic::pow2(-(literal_len(sigma.len()) as i64));
        match self.mass.get(sigma) {
            Some(m) => &lit + m,
            None => lit,
        }
    }

    /// Registered outputs with their best registered program length.
    pub fn compressed(&self) -> impl Iterator<Item = (&BitString, u64)> + '_ {
        self.best.iter().map(|(s, &l)| (s, l))
    }

    /// `|{σ : K̂(σ) ≤ m, |σ| ≤ len_max}|` and whether it is below `2^{m+1}`.
    pub fn counting_check(&self, m: u64, len_max: usize) -> (u64, bool) {
        let mut count = 0u64;
        for n in 0..=len_max {
            if literal_len(n) > m {
                break;
            }
            count += 1u64 << n;
        }
        for (s, &b) in &self.best {
            if s.len() <= len_max && b <= m && literal_len(s.len()) > m {
                count += 1;
            }
        }
        (count, m >= 63 || count < 1u64 << (m + 1))
    }

    /// Exact Kraft weight of the whole program set. The literal branch sums to
    /// exactly 1/2 over all lengths.
    pub fn kraft(&self) -> Dyadic {
        let mut w = Dyadic::pow2(-1);
        for (i, cb) in self.machines.iter().enumerate() {
            w += cb.weight().shift(-(sub_constant(i) as i64));
        }
        w
    }

    /// Kraft weight of literal programs of length at most `max_len`.
    pub fn literal_kraft_partial(max_len: u64) -> Dyadic {
        let mut w = Dyadic::zero();
        let mut n = 0usize;
        while literal_len(n) <= max_len {
            w += Dyadic::pow2(n as i64 - literal_len(n) as i64);
            n += 1;
        }
        w
    }

    pub fn run(&self, p: &BitString) -> Run {
        if p.is_empty() {
            return Run::NeedMore;
        }
        if !p.get(0) {
            return match elias_gamma_decode(p, 1) {
                Err(_) => Run::NeedMore,
                Ok((v, used)) => {
                    let n = (v - 1) as usize;
                    let start = 1 + used;
                    if p.len() < start + n {
                        Run::NeedMore
                    } else {
                        Run::Halted {
                            output: p.prefix(start + n).suffix_from(start),
                            used: start + n,
                        }
                    }
                }
            };
        }
        let (id, start) = match elias_gamma_decode(p, 1) {
            Ok((v, used)) => ((v - 1) as usize, 1 + used),
            Err(_) => {
                let partial = p.suffix_from(1);
                let live = (0..self.machines.len()).any(|i| partial.is_prefix_of(&encode_natural(i as u64)));
                return if live { Run::NeedMore } else { Run::Invalid };
            }
        };
        let Some(cb) = self.machines.get(id) else {
            return Run::Invalid;
        };
        let rest = p.suffix_from(start);
        for n in 0..=rest.len() {
            if let Some(out) = cb.get(&rest.prefix(n)) {
                return Run::Halted {
                    output: out.clone(),
                    used: start + n,
                };
            }
        }
        if cb.has_extension(&rest) {
            Run::NeedMore
        } else {
            Run::Invalid
        }
    }

    /// Every program of length at most `max_len` with its output, in
    /// length-lexicographic program order.
    pub fn programs_up_to(&self, max_len: usize) -> Vec<(BitString, BitString)> {
        let mut out = Vec::new();
        let mut stack = vec![BitString::empty()];
        while let Some(p) = stack.pop() {
            match self.run(&p) {
                Run::Halted { output, used } => {
                    debug_assert_eq!(used, p.len());
                    out.push((p, output));
                }
                Run::NeedMore if p.len() < max_len => {
                    stack.push(p.child(true));
                    stack.push(p.child(false));
                }
                _ => {}
            }
        }
        out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn dump(&self) -> MachineDump {
        MachineDump {
            machines: self
                .machines
                .iter()
                .enumerate()
                .map(|(i, cb)| MachineRecord {
                    index: i,
                    sub_prefix: sub_prefix(i),
                    constant: sub_constant(i),
                    weight: cb.weight().clone(),
                    entries: cb
                        .entries()
                        .map(|(c, o)| EntryRecord {
                            codeword: c.clone(),
                            output: o.clone(),
                        })
                        .collect(),
                })
                .collect(),
            conditional: self.conditional.dump(),
            kraft: self.kraft(),
        }
    }

    pub fn from_dump(dump: &MachineDump) -> Result<Self, MachineError> {
        let mut m = ReferenceMachine::new();
        for (i, rec) in dump.machines.iter().enumerate() {
            if rec.index != i {
                return Err(MachineError::State(format!("machine index {} out of order", rec.index)));
            }
            let cb = PrefixFreeCodebook::from_entries(
                rec.entries.iter().map(|e| (e.codeword.clone(), e.output.clone())),
            )?;
            m.register_machine(cb)?;
        }
        m.conditional = ConditionalCoder::from_dump(&dump.conditional)?;
        if m.kraft() != dump.kraft {
            return Err(MachineError::State(format!(
                "kraft weight {} does not match recorded {}",
                m.kraft(),
                dump.kraft
            )));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.dump()).expect("serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, MachineError> {
        let dump: MachineDump = serde_json::from_str(text).map_err(|e| MachineError::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        Self::from_dump(&dump)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineDump {
    pub machines: Vec<MachineRecord>,
    pub conditional: Vec<conditional::ConditionalRecord>,
    pub kraft: Dyadic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineRecord {
    pub index: usize,
    pub sub_prefix: BitString,
    pub constant: u64,
    pub weight: Dyadic,
    pub entries: Vec<EntryRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub codeword: BitString,
    pub output: BitString,
}

#[cfg(test)]
mod tests;
